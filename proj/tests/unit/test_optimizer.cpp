#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "ogpsa/errors.hpp"
#include "ogpsa/metrics.hpp"
#include "ogpsa/optimizer.hpp"
#include "ogpsa/presets.hpp"
#include "test_support.hpp"

namespace ogpsa {
namespace {

using linalg::Matrix;
using linalg::ParamVector;
using optimizer::Method;
using optimizer::TrainConfig;
using subspace::RefreshPeriod;
using tasks::FamilyKind;

tasks::DifferentiableTask half_norm_task(std::size_t d) {
  tasks::DifferentiableTask t;
  t.name = "safety";
  t.spec = models::ModelSpec{models::ModelKind::quadratic, {d}};
  t.kind = models::LossKind{models::LossTag::squared_error};
  t.full_batch = true;
  t.data.inputs = Matrix(d, d);
  t.data.targets = Matrix(d, 1);
  for (std::size_t i = 0; i < d; ++i) t.data.inputs(i, i) = 1.0;
  t.probe = t.data;
  return t;
}

TrainConfig quadratic_config(Method method, std::size_t steps = 100) {
  auto cfg = presets::train_config(FamilyKind::quadratic_pair, method, 0);
  cfg.stages.front().steps = steps;
  return cfg;
}

TEST(NaiveStep, ClosedForm) {
  const auto task = half_norm_task(2);
  const auto r = optimizer::naive_step(ParamVector{1, 0}, task, task.data, 0.5);
  EXPECT_EQ(r.theta, (ParamVector{0.5, 0}));
  EXPECT_EQ(r.g_safe, (ParamVector{1, 0}));
  const auto same = optimizer::naive_step(ParamVector{1, 0}, task, task.data, 0.0);
  EXPECT_EQ(same.theta, (ParamVector{1, 0}));
}

TEST(NaiveStep, DescendsOnMlp) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::regression_mlp, 0));
  const auto& task = fam.safety[0];
  const auto r = optimizer::naive_step(fam.theta0, task, task.data, 1e-3);
  EXPECT_LT(models::loss(task.spec, task.kind, r.theta, task.data),
            models::loss(task.spec, task.kind, fam.theta0, task.data));
}

subspace::CapabilitySubspace fresh_subspace(const tasks::TaskFamily& fam) {
  Rng rng = make_rng(0);
  return subspace::estimate_subspace(fam.theta0, fam.capability, 0, rng, std::nullopt, 0.0, 0);
}

TEST(OgpsaStep, OrthogonalCaseMatchesNaive) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 2, 0);
  const auto& task = fam.safety[0];
  const auto p = optimizer::ogpsa_step(fam.theta0, task, task.data, fresh_subspace(fam), 0.05);
  const auto n = optimizer::naive_step(fam.theta0, task, task.data, 0.05);
  EXPECT_EQ(p.theta, n.theta);
}

TEST(OgpsaStep, CollinearCaseStalls) {
  const auto fam = tasks::make_quadratic_pair(10, 0.0, 0);
  const auto& task = fam.safety[0];
  const auto p = optimizer::ogpsa_step(fam.theta0, task, task.data, fresh_subspace(fam), 0.05);
  EXPECT_EQ(p.theta, fam.theta0);
  EXPECT_EQ(linalg::norm(p.g_tilde), 0.0);

  const auto r = optimizer::train(quadratic_config(Method::ogpsa, 1), fam);
  EXPECT_EQ(r.records.front().removed_fraction, 1.0);
}

TEST(OgpsaStep, QuarterPiShrinksBySine) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 2);
  const auto& task = fam.safety[0];
  const auto p = optimizer::ogpsa_step(fam.theta0, task, task.data, fresh_subspace(fam), 0.05);
  EXPECT_NEAR(linalg::norm(p.g_tilde), linalg::norm(p.g_safe) * std::sin(std::numbers::pi / 4), 1e-9);
}

TEST(ReplayStep, ZeroLambdaIsNaive) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::regression_mlp, 0));
  const auto& task = fam.safety[0];
  const std::vector<models::Batch> batches{fam.capability[0].data, fam.capability[1].data};
  const auto r = optimizer::replay_step(fam.theta0, task, task.data, fam.capability, batches, 0.02, 0.0);
  EXPECT_EQ(r.theta, optimizer::naive_step(fam.theta0, task, task.data, 0.02).theta);
}

TEST(ReplayStep, LargeLambdaFollowsReferenceGradient) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::regression_mlp, 1));
  const auto& task = fam.safety[0];
  const std::vector<models::Batch> batches{fam.capability[0].data, fam.capability[1].data};
  const auto r = optimizer::replay_step(fam.theta0, task, task.data, fam.capability, batches, 1e-9, 1e6);
  const auto update = linalg::subtract(fam.theta0, r.theta);
  ParamVector mean(fam.theta0.size(), 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& t = fam.capability[i];
    linalg::axpy(0.5, models::gradient(t.spec, t.kind, fam.theta0, batches[i]), mean);
  }
  const double cosine = linalg::dot(update, mean) / (linalg::norm(update) * linalg::norm(mean));
  EXPECT_LT(std::acos(std::min(1.0, cosine)), 1e-3);
}

TEST(ReplayStep, NegativeLambdaRejected) {
  const auto task = half_norm_task(2);
  EXPECT_THROW(optimizer::replay_step(ParamVector{1, 0}, task, task.data, {}, {}, 0.1, -1.0), ConfigError);
}

TEST(Replay, SitsBetweenNaiveAndOgpsaOnQuadratic) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 3, 0);
  double tax[3];
  const Method methods[3] = {Method::ogpsa, Method::replay, Method::naive};
  for (int i = 0; i < 3; ++i) {
    const auto r = optimizer::train(quadratic_config(methods[i]), fam);
    tax[i] = r.records.back().ref_losses[0] - fam.capability[0].probe_loss(fam.theta0);
  }
  EXPECT_LT(tax[0], tax[1]);
  EXPECT_LT(tax[1], tax[2]);
}

TEST(Train, SingleOrthogonalStepEqualsNaive) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 2, 5);
  const auto a = optimizer::train(quadratic_config(Method::ogpsa, 1), fam);
  const auto b = optimizer::train(quadratic_config(Method::naive, 1), fam);
  EXPECT_EQ(a.theta_final, b.theta_final);
}

TEST(Train, NeverRefreshBuildsOnce) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, 0));
  auto cfg = presets::train_config(FamilyKind::policy_sft_dpo, Method::ogpsa, 0);
  cfg.refresh = RefreshPeriod::never();
  for (auto& s : cfg.stages) s.refresh.reset();
  const auto r = optimizer::train(cfg, fam);
  ASSERT_EQ(r.subspace_history.size(), 1u);
  EXPECT_EQ(r.subspace_history.front().tau, 0u);
  EXPECT_EQ(r.records.back().age, cfg.total_steps() - 1);
}

TEST(Train, RefreshEveryFiveSteps) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  const auto r = optimizer::train(quadratic_config(Method::ogpsa), fam);
  ASSERT_EQ(r.subspace_history.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(r.subspace_history[i].tau, 5 * i);
}

TEST(Train, StageLocalRefreshInPolicyPreset) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, 0));
  const auto r = optimizer::train(presets::train_config(FamilyKind::policy_sft_dpo, Method::ogpsa, 0), fam);
  // 200 SFT steps at K=30 give 7 builds; 200 DPO steps at K=5 give 40.
  ASSERT_EQ(r.subspace_history.size(), 47u);
  EXPECT_EQ(r.subspace_history[6].tau, 180u);
  EXPECT_EQ(r.subspace_history[7].tau, 200u);
  EXPECT_EQ(r.subspace_history[8].tau, 205u);
}

TEST(Train, RecordInvariants) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, 1));
  const auto r = optimizer::train(presets::train_config(FamilyKind::policy_sft_dpo, Method::ogpsa, 1), fam);
  ASSERT_EQ(r.records.size(), 400u);
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    const auto& rec = r.records[t];
    EXPECT_EQ(rec.step, t);
    EXPECT_LE(rec.g_tilde_norm, rec.g_norm);
    EXPECT_GE(rec.removed_fraction, 0.0);
    EXPECT_LE(rec.removed_fraction, 1.0);
    EXPECT_NEAR(rec.removed_fraction, removed_fraction(rec.g_norm, rec.g_tilde_norm), 1e-9);
    EXPECT_LE(rec.rank, 2u);
    EXPECT_LT(rec.age, t < 200 ? 30u : 5u);
  }
}

TEST(Train, ReductionIdentities) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::regression_mlp, 0));
  auto base = presets::train_config(FamilyKind::regression_mlp, Method::naive, 0);
  base.stages.front().steps = 100;
  base.safety_batch = 32;
  const auto naive = optimizer::train(base, fam);

  auto empty_refs = base;
  empty_refs.method = Method::ogpsa;
  empty_refs.ref_tasks = std::vector<std::size_t>{};
  EXPECT_EQ(optimizer::train(empty_refs, fam).theta_final, naive.theta_final);

  auto replay = base;
  replay.method = Method::replay;
  replay.replay_lambda = 0.0;
  EXPECT_EQ(optimizer::train(replay, fam).theta_final, naive.theta_final);
}

TEST(Train, PolicyOgpsaBeatsNaiveOnCapability) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, seed));
    double increase[2];
    const Method methods[2] = {Method::naive, Method::ogpsa};
    for (int m = 0; m < 2; ++m) {
      const auto r = optimizer::train(presets::train_config(FamilyKind::policy_sft_dpo, methods[m], seed), fam);
      increase[m] = metrics::alignment_tax(r, fam).total_tax();
    }
    EXPECT_LT(increase[1], increase[0]) << "seed " << seed;
  }
}

TEST(Train, DpoStageDecreaseMatchesRecordedRatio) {
  const auto golden = testing::read_csv(testing::slurp(OGPSA_GOLDEN_DIR "/dpo_stage.csv"));
  ASSERT_EQ(golden.rows.size(), 3u);
  const auto seed_col = golden.column("seed");
  const auto ratio_col = golden.column("ratio");
  for (const auto& row : golden.rows) {
    const std::uint64_t seed = std::stoull(row[seed_col]);
    const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, seed));
    double decrease[2];
    const Method methods[2] = {Method::naive, Method::ogpsa};
    for (int m = 0; m < 2; ++m) {
      const auto r = optimizer::train(presets::train_config(FamilyKind::policy_sft_dpo, methods[m], seed), fam);
      const auto report = metrics::alignment_tax(r, fam);
      decrease[m] = report.stages[1].gain;
    }
    EXPECT_GT(decrease[0], 0.0);
    EXPECT_GT(decrease[1], 0.0);
    const double recorded = std::stod(row[ratio_col]);
    EXPECT_LE(testing::rel_diff(decrease[1] / decrease[0], recorded), 0.05) << "seed " << seed;
  }
}

TEST(Train, NumericFailureCarriesStep) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  auto cfg = quadratic_config(Method::naive);
  cfg.eta = 1e10;
  try {
    optimizer::train(cfg, fam);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    ASSERT_TRUE(e.step().has_value());
    EXPECT_GT(*e.step(), 0u);
    EXPECT_LT(*e.step(), 100u);
  }
}

TEST(Train, ConfigErrors) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  auto unknown = quadratic_config(Method::naive);
  unknown.stages.front().task = "nope";
  EXPECT_THROW(optimizer::train(unknown, fam), ConfigError);

  auto wrong_loss = quadratic_config(Method::naive);
  wrong_loss.stages.front().loss = models::LossTag::nll_sft;
  EXPECT_THROW(optimizer::train(wrong_loss, fam), ConfigError);

  auto bad_eta = quadratic_config(Method::naive);
  bad_eta.eta = 0.0;
  EXPECT_THROW(bad_eta.validate(), ConfigError);

  auto no_stages = quadratic_config(Method::naive);
  no_stages.stages.clear();
  EXPECT_THROW(no_stages.validate(), ConfigError);
}

TEST(Train, Deterministic) {
  const auto fam = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, 2));
  const auto cfg = presets::train_config(FamilyKind::policy_sft_dpo, Method::ogpsa, 2);
  const auto a = optimizer::train(cfg, fam);
  const auto b = optimizer::train(cfg, fam);
  EXPECT_EQ(a.theta_final, b.theta_final);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.subspace_history, b.subspace_history);
}

TEST(Names, MethodRoundTrip) {
  for (auto m : {Method::ogpsa, Method::naive, Method::replay}) {
    EXPECT_EQ(optimizer::parse_method(optimizer::to_string(m)), m);
  }
  EXPECT_THROW(optimizer::parse_method("adam"), ConfigError);
}

}  // namespace
}  // namespace ogpsa

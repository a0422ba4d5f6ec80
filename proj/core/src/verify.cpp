#include "ogpsa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"
#include "ogpsa/linalg.hpp"
#include "ogpsa/metrics.hpp"
#include "ogpsa/oracle.hpp"
#include "ogpsa/presets.hpp"
#include "ogpsa/sweep.hpp"

namespace ogpsa::verify {

using linalg::OrthonormalBasis;
using linalg::ParamVector;
using linalg::VectorView;
using models::ModelKind;
using models::LossTag;
using optimizer::Method;
using tasks::FamilyKind;

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

oracle::Projector projector(const VerifyOptions& opts) {
  if (opts.inject_skip_projection) {
    return [](VectorView g, const OrthonormalBasis&) { return ParamVector(g.begin(), g.end()); };
  }
  return [](VectorView g, const OrthonormalBasis& b) { return linalg::project_complement(g, b); };
}

std::uint64_t mix_seed(const VerifyOptions& opts, std::uint64_t s) {
  return opts.seed * 1000003ull + s;
}

CheckResult timed(int id, std::string name, const std::function<bool(std::string&)>& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  const auto t0 = Clock::now();
  try {
    r.pass = body(r.detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

OrthonormalBasis random_basis(std::size_t d, std::size_t m, Rng& rng) {
  std::vector<ParamVector> cands;
  for (std::size_t j = 0; j < m; ++j) cands.push_back(random_normal(d, rng));
  return linalg::gram_schmidt(cands, linalg::relative_delta(cands));
}

double gram_error(const OrthonormalBasis& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < b.rank(); ++i) {
    for (std::size_t j = 0; j < b.rank(); ++j) {
      const double want = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(linalg::dot(b.column(i), b.column(j)) - want));
    }
  }
  return worst;
}

}  // namespace

CheckResult check_orthogonality(const VerifyOptions& opts) {
  return timed(1, "orthogonality suite", [&](std::string& detail) {
    const auto project = projector(opts);
    double gram = 0.0, orth = 0.0, idem = 0.0, pyth = 0.0, growth = 0.0;
    std::size_t cases = 0, failures = 0;
    for (std::size_t d : {10, 100, 1000}) {
      for (std::size_t m = 1; m <= 8; ++m) {
        for (std::uint64_t s = 0; s < 100; ++s) {
          Rng rng = make_rng(mix_seed(opts, s), d * 16 + m);
          const auto basis = random_basis(d, m, rng);
          const auto g = random_normal(d, rng);
          const auto gt = project(g, basis);
          const auto gtt = project(gt, basis);
          const double gn = linalg::norm(g);
          const double tn = linalg::norm(gt);
          double o = 0.0, coeff_sq = 0.0;
          for (const auto& u : basis.columns()) {
            o = std::max(o, std::abs(linalg::dot(gt, u)));
            const double c = linalg::dot(g, u);
            coeff_sq += c * c;
          }
          const double ge = gram_error(basis);
          const double ie = linalg::max_abs_diff(gtt, gt);
          const double pe = std::abs(gn * gn - tn * tn - coeff_sq) / (gn * gn);
          gram = std::max(gram, ge);
          orth = std::max(orth, o / gn);
          idem = std::max(idem, ie);
          pyth = std::max(pyth, pe);
          growth = std::max(growth, tn - gn);
          ++cases;
          if (basis.rank() != m || ge > 1e-10 || o > 1e-8 * gn || tn > gn || ie > 1e-12 || pe > 1e-9) {
            ++failures;
          }
        }
      }
    }
    // Per-step orthogonality and freshness over a retained training run.
    double step_orth = 0.0;
    std::size_t stale = 0;
    for (auto kind : {FamilyKind::quadratic_pair, FamilyKind::regression_mlp}) {
      const auto family = tasks::make_family(presets::family_spec(kind, opts.seed));
      const auto cfg = presets::train_config(kind, Method::ogpsa, opts.seed);
      optimizer::TrainOptions topts;
      topts.retain_artifacts = true;
      topts.skip_projection = opts.inject_skip_projection;
      const auto run = optimizer::train(cfg, family, topts);
      for (const auto& a : run.artifacts) {
        const auto& basis = run.subspaces.at(a.subspace_index).basis;
        const double gn = linalg::norm(a.g_safe);
        for (const auto& u : basis.columns()) {
          const double o = std::abs(linalg::dot(a.g_tilde, u));
          step_orth = std::max(step_orth, gn > 0.0 ? o / gn : o);
          if (o > 1e-8 * gn) ++failures;
        }
        if (linalg::norm(a.g_tilde) > gn) ++failures;
      }
      for (const auto& rec : run.records) {
        if (rec.age >= cfg.refresh.steps()) ++stale;
      }
    }
    failures += stale;
    detail = std::to_string(cases) + " cases, " + std::to_string(failures) + " failures; max gram err " +
             fmt(gram) + ", orth " + fmt(orth) + "*|g|, idempotence " + fmt(idem) + ", pythagoras " +
             fmt(pyth) + ", norm growth " + fmt(growth) + "; per-step orth " + fmt(step_orth) + "*|g|, " +
             std::to_string(stale) + " stale steps";
    return failures == 0;
  });
}

CheckResult check_rank_filtering(const VerifyOptions& opts) {
  return timed(2, "rank filtering", [&](std::string& detail) {
    constexpr std::size_t d = 20;
    constexpr std::size_t m = 8;
    std::size_t failures = 0, cases = 0;
    for (std::size_t r = 1; r <= 5; ++r) {
      for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng = make_rng(mix_seed(opts, s), 100 + r);
        std::vector<ParamVector> gens;
        for (std::size_t k = 0; k < r; ++k) gens.push_back(random_normal(d, rng));
        std::vector<ParamVector> cands;
        for (std::size_t k = 0; k < m; ++k) {
          ParamVector c(d, 0.0);
          for (const auto& gvec : gens) linalg::axpy(std::normal_distribution<double>()(rng), gvec, c);
          cands.push_back(linalg::scaled(c, 1.0 / linalg::norm(c)));
        }
        const auto basis = linalg::gram_schmidt(cands, 1e-6);
        ++cases;
        if (basis.rank() != r) ++failures;
      }
    }
    detail = std::to_string(cases) + " candidate sets (M=8, r=1..5), " + std::to_string(failures) +
             " rank mismatches";
    return failures == 0;
  });
}

namespace {

struct GradientCase {
  std::string label;
  models::ModelSpec spec;
  models::LossKind kind;
};

models::Batch random_batch(const GradientCase& c, std::size_t rows, Rng& rng, const ParamVector& theta) {
  models::Batch b;
  const std::size_t in = c.spec.input_dim();
  b.inputs = linalg::Matrix(rows, in, random_normal(rows * in, rng));
  std::size_t outputs = 1;
  if (c.spec.kind == ModelKind::mlp2) outputs = c.spec.dims[2];
  if (c.spec.kind == ModelKind::softmax_policy) outputs = c.spec.dims[1];
  switch (c.kind.tag) {
    case LossTag::squared_error:
      b.targets = linalg::Matrix(rows, outputs, random_normal(rows * outputs, rng));
      break;
    case LossTag::cross_entropy:
    case LossTag::nll_sft: {
      const std::size_t classes = outputs == 1 ? 2 : outputs;
      std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
      for (std::size_t r = 0; r < rows; ++r) b.labels.push_back(pick(rng));
      break;
    }
    case LossTag::dpo_pairwise: {
      std::uniform_int_distribution<std::size_t> pick(0, outputs - 1);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t w = pick(rng);
        std::size_t l = pick(rng);
        if (l == w) l = (w + 1) % outputs;
        b.pairs.push_back({r, w, l});
      }
      auto ref = theta;
      for (auto& x : ref) x += 0.3 * std::normal_distribution<double>()(rng);
      b.ref_params = std::make_shared<const ParamVector>(std::move(ref));
      break;
    }
  }
  return b;
}

std::vector<GradientCase> gradient_cases(Rng& rng) {
  std::uniform_int_distribution<std::size_t> small(2, 6);
  using models::Activation;
  const std::size_t f = small(rng), h = small(rng), o = small(rng), v = small(rng) + 1;
  const models::LossKind sq{LossTag::squared_error, models::kDefaultBeta};
  const models::LossKind ce{LossTag::cross_entropy, models::kDefaultBeta};
  const models::LossKind nll{LossTag::nll_sft, models::kDefaultBeta};
  const models::LossKind dpo{LossTag::dpo_pairwise, models::kDefaultBeta};
  return {
      {"quadratic/squared_error", {ModelKind::quadratic, {f}, Activation::tanh}, sq},
      {"linear_regression/squared_error", {ModelKind::linear_regression, {f}, Activation::tanh}, sq},
      {"logistic_regression/cross_entropy", {ModelKind::logistic_regression, {f}, Activation::tanh}, ce},
      {"mlp2-tanh/squared_error", {ModelKind::mlp2, {f, h, o}, Activation::tanh}, sq},
      {"mlp2-relu/squared_error", {ModelKind::mlp2, {f, h, o}, Activation::relu}, sq},
      {"mlp2-tanh/cross_entropy(binary)", {ModelKind::mlp2, {f, h, 1}, Activation::tanh}, ce},
      {"mlp2-relu/cross_entropy(softmax)", {ModelKind::mlp2, {f, h, o}, Activation::relu}, ce},
      {"softmax_policy/nll_sft", {ModelKind::softmax_policy, {f, v}, Activation::tanh}, nll},
      {"softmax_policy/dpo_pairwise", {ModelKind::softmax_policy, {f, v}, Activation::tanh}, dpo},
  };
}

}  // namespace

CheckResult check_gradients(const VerifyOptions& opts) {
  return timed(3, "gradient correctness", [&](std::string& detail) {
    const oracle::FDConfig fd;
    double worst = 0.0;
    std::string worst_label;
    std::size_t cases = 0, failures = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng = make_rng(mix_seed(opts, s), 300);
      for (const auto& c : gradient_cases(rng)) {
        const auto theta = random_normal(c.spec.parameter_count(), rng, 0.5);
        const auto batch = random_batch(c, 12, rng, theta);
        const auto analytic = models::gradient(c.spec, c.kind, theta, batch);
        const auto numeric = oracle::fd_gradient(c.spec, c.kind, theta, batch, fd);
        const auto cmp = oracle::compare_gradients(analytic, numeric, fd);
        ++cases;
        if (!cmp.pass) ++failures;
        if (cmp.max_rel_error > worst) {
          worst = cmp.max_rel_error;
          worst_label = c.label;
        }
      }
    }
    detail = std::to_string(cases) + " (model, loss) configurations, " + std::to_string(failures) +
             " failures; worst relative error " + fmt(worst) + " (" + worst_label + ")";
    return failures == 0;
  });
}

CheckResult check_steepest_descent(const VerifyOptions& opts) {
  return timed(4, "steepest feasible descent", [&](std::string& detail) {
    const auto project = projector(opts);
    std::size_t cells = 0, skipped = 0, violations = 0, failures = 0;
    double worst_attain = 0.0, worst_feas = 0.0, worst_gap = std::numeric_limits<double>::infinity();
    for (std::size_t d : {2, 10, 50}) {
      for (std::size_t m : {0, 1, 3, 5}) {
        if (m >= d) {
          ++skipped;
          continue;
        }
        Rng rng = make_rng(mix_seed(opts, d * 10 + m), 400);
        const auto basis = m == 0 ? OrthonormalBasis(d) : random_basis(d, m, rng);
        const auto g = random_normal(d, rng);
        const auto rep = oracle::steepest_check(g, basis, 10000, rng, project);
        ++cells;
        violations += rep.violations;
        if (!rep.pass) ++failures;
        worst_attain = std::max(worst_attain, rep.attainment_error);
        worst_feas = std::max(worst_feas, rep.feasibility_error);
        worst_gap = std::min(worst_gap, rep.min_sampled - rep.bound);
      }
    }
    detail = std::to_string(cells) + " cells x 10000 samples (" + std::to_string(skipped) +
             " infeasible cells with M'>=d skipped), " + std::to_string(violations) +
             " bound violations; min sample margin " + fmt(worst_gap) + ", attainment err " +
             fmt(worst_attain) + ", feasibility err " + fmt(worst_feas);
    return failures == 0;
  });
}

CheckResult check_first_order(const VerifyOptions& opts) {
  return timed(5, "first-order preservation", [&](std::string& detail) {
    const auto family = tasks::make_quadratic_pair(10, std::numbers::pi / 4, mix_seed(opts, 5));
    const std::vector<double> etas{1e-2, 1e-3, 1e-4};
    const auto og = oracle::taylor_scaling(family, etas, Method::ogpsa);
    const auto nv = oracle::taylor_scaling(family, etas, Method::naive);
    double remainder_err = 0.0;
    for (const auto& row : og.rows) {
      const double err = std::abs(row.delta_loss - row.remainder) / std::abs(row.remainder);
      remainder_err = std::max(remainder_err, err);
    }
    const bool ok = std::abs(og.slope - 2.0) <= 0.2 && std::abs(nv.slope - 1.0) <= 0.2 &&
                    remainder_err <= 1e-6;
    detail = "ogpsa slope " + fmt(og.slope) + ", naive slope " + fmt(nv.slope) +
             ", max |dL - remainder|/remainder " + fmt(remainder_err);
    return ok;
  });
}

CheckResult check_reductions(const VerifyOptions& opts) {
  return timed(6, "reduction identities", [&](std::string& detail) {
    const auto family =
        tasks::make_family(presets::family_spec(FamilyKind::regression_mlp, mix_seed(opts, 6) % 1000));
    auto base = presets::train_config(FamilyKind::regression_mlp, Method::naive, opts.seed);
    base.stages.front().steps = 100;
    const auto naive = optimizer::train(base, family);

    auto no_refs = base;
    no_refs.method = Method::ogpsa;
    no_refs.ref_tasks = std::vector<std::size_t>{};
    const auto og = optimizer::train(no_refs, family);

    auto replay0 = base;
    replay0.method = Method::replay;
    replay0.replay_lambda = 0.0;
    const auto rp = optimizer::train(replay0, family);

    const bool og_same = og.theta_final == naive.theta_final && og.records == naive.records;
    const bool rp_same = rp.theta_final == naive.theta_final && rp.records == naive.records;
    detail = std::string("ogpsa(M=0) ") + (og_same ? "bitwise equal" : "DIFFERS") + ", replay(lambda=0) " +
             (rp_same ? "bitwise equal" : "DIFFERS") + " to naive over 100 steps";
    return og_same && rp_same;
  });
}

const std::vector<TaxGolden>& tax_goldens() {
  // Recorded from the first run of the shipped presets.
  static const std::vector<TaxGolden> goldens = {
      {"regression_mlp", 0, {0.4826012698760231, 0.501823297248871}, {0.021907937040466667, 0.024280208069092472}, 0.9640609725299398, 0.7956372383818574},
      {"regression_mlp", 1, {0.49699297974886103, 0.49557777774659906}, {0.030025014402666875, 0.034162935004618214}, 0.9118847303485932, 0.7753281559312781},
      {"regression_mlp", 2, {0.48174035264736886, 0.48978674747790224}, {0.02570145630931879, 0.030494614842300385}, 0.8689549816398878, 0.7424247986350072},
      {"policy_sft_dpo", 0, {5.212780055566197, 6.161879326228933}, {0.5829760675592143, 0.7193762697766861}, 7.4876133638042255, 6.4878037745747035},
      {"policy_sft_dpo", 1, {5.530506418666241, 6.008546316268974}, {0.575186683283094, 0.6308751078144105}, 7.685995239330866, 6.590654744166147},
      {"policy_sft_dpo", 2, {5.309665236718966, 5.548463379071033}, {0.6060398557819426, 0.5871269998483823}, 7.471472346565959, 6.535753231684944},
  };
  return goldens;
}

namespace {

const TaxGolden* find_golden(const char* family, std::uint64_t seed) {
  for (const auto& g : tax_goldens()) {
    if (std::string_view(g.family) == family && g.seed == seed) return &g;
  }
  return nullptr;
}

bool near(double value, double golden) {
  return std::abs(value - golden) <= kGoldenTolerance * std::abs(golden);
}

}  // namespace

CheckResult check_tax_mitigation(const VerifyOptions& opts) {
  return timed(7, "alignment-tax mitigation", [&](std::string& detail) {
    (void)opts;  // trend checks always use seeds {0,1,2}
    std::ostringstream out;
    bool ok = true;
    for (auto kind : {FamilyKind::regression_mlp, FamilyKind::policy_sft_dpo}) {
      const char* name = kind == FamilyKind::regression_mlp ? "regression_mlp" : "policy_sft_dpo";
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto family = tasks::make_family(presets::family_spec(kind, seed));
        const auto rn = optimizer::train(presets::train_config(kind, Method::naive, seed), family);
        const auto ro = optimizer::train(presets::train_config(kind, Method::ogpsa, seed), family);
        const auto tn = metrics::alignment_tax(rn, family);
        const auto to = metrics::alignment_tax(ro, family);
        bool row_ok = tn.safety_gain > 0.0 && to.safety_gain >= 0.7 * tn.safety_gain;
        for (std::size_t i = 0; i < tn.tasks.size(); ++i) {
          row_ok = row_ok && to.tasks[i].delta_tax < tn.tasks[i].delta_tax;
        }
        const TaxGolden* golden = find_golden(name, seed);
        bool golden_ok = true;
        if (golden) {
          for (std::size_t i = 0; i < 2 && i < tn.tasks.size(); ++i) {
            golden_ok = golden_ok && near(tn.tasks[i].delta_tax, golden->naive_tax[i]) &&
                        near(to.tasks[i].delta_tax, golden->ogpsa_tax[i]);
          }
          golden_ok = golden_ok && near(tn.safety_gain, golden->naive_gain) &&
                      near(to.safety_gain, golden->ogpsa_gain);
        }
        ok = ok && row_ok && golden_ok;
        out << name << " seed " << seed << ": tax naive [";
        for (std::size_t i = 0; i < tn.tasks.size(); ++i) out << (i ? ", " : "") << fmt(tn.tasks[i].delta_tax);
        out << "] ogpsa [";
        for (std::size_t i = 0; i < to.tasks.size(); ++i) out << (i ? ", " : "") << fmt(to.tasks[i].delta_tax);
        out << "], gain ratio " << fmt(to.safety_gain / tn.safety_gain)
            << (golden ? (golden_ok ? ", golden ok" : ", GOLDEN MISMATCH") : ", no golden") << "; ";
      }
    }
    detail = out.str();
    if (detail.ends_with("; ")) detail.resize(detail.size() - 2);
    return ok;
  });
}

namespace {

std::vector<double> sweep_taxes(const tasks::TaskFamily& family, const optimizer::TrainConfig& base,
                                sweep::Axis axis, const std::vector<std::string>& values,
                                std::vector<std::string>* labels = nullptr) {
  std::vector<double> out;
  for (const auto& leg : sweep::expand(base, axis, values, family.capability.size())) {
    const auto r = optimizer::train(leg.config, family);
    out.push_back(metrics::alignment_tax(r, family).total_tax());
    if (labels) labels->push_back(leg.label);
  }
  return out;
}

}  // namespace

CheckResult check_ablations(const VerifyOptions& opts) {
  return timed(8, "ablation trends", [&](std::string& detail) {
    (void)opts;
    std::ostringstream out;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto policy = tasks::make_family(presets::family_spec(FamilyKind::policy_sft_dpo, seed));
      const auto cfg = presets::train_config(FamilyKind::policy_sft_dpo, Method::ogpsa, seed);
      const auto k = sweep_taxes(policy, cfg, sweep::Axis::K, {"2", "5", "10", "inf"});
      const double best_finite = *std::min_element(k.begin(), k.end() - 1);
      const bool k_ok = k.back() > best_finite;

      const auto m = sweep_taxes(policy, cfg, sweep::Axis::M, {"1", "2"});  // M=1[0], M=1[1], M=2
      const bool m_ok = m[2] <= m[0] && m[2] <= m[1];

      const auto rs = sweep_taxes(policy, cfg, sweep::Axis::refsize, {"50", "100", "200"});
      const double lo = *std::min_element(rs.begin(), rs.end());
      const double hi = *std::max_element(rs.begin(), rs.end());
      const bool rs_ok = lo > 0.0 && hi < 2.0 * lo;

      ok = ok && k_ok && m_ok && rs_ok;
      out << "seed " << seed << ": K{2,5,10,inf} tax [" << fmt(k[0]) << ", " << fmt(k[1]) << ", " << fmt(k[2])
          << ", " << fmt(k[3]) << "]" << (k_ok ? "" : " FAIL") << "; M{1[0],1[1],2} [" << fmt(m[0]) << ", "
          << fmt(m[1]) << ", " << fmt(m[2]) << "]" << (m_ok ? "" : " FAIL") << "; refsize{50,100,200} ["
          << fmt(rs[0]) << ", " << fmt(rs[1]) << ", " << fmt(rs[2]) << "] spread " << fmt(hi / lo)
          << (rs_ok ? "" : " FAIL") << "; ";
    }
    detail = out.str();
    if (detail.ends_with("; ")) detail.resize(detail.size() - 2);
    return ok;
  });
}

CheckResult check_determinism(const VerifyOptions& opts) {
  return timed(9, "determinism", [&](std::string& detail) {
    bool ok = true;
    std::size_t runs = 0;
    for (auto kind : {FamilyKind::quadratic_pair, FamilyKind::regression_mlp, FamilyKind::policy_sft_dpo}) {
      for (auto method : {Method::ogpsa, Method::naive, Method::replay}) {
        const auto spec = presets::family_spec(kind, opts.seed);
        const auto cfg = presets::train_config(kind, method, opts.seed);
        const auto a = optimizer::train(cfg, tasks::make_family(spec));
        const auto fam_b = tasks::make_family(spec);
        const auto b = optimizer::train(cfg, fam_b);
        const bool same = metrics::records_csv(a) == metrics::records_csv(b) &&
                          metrics::tax_csv(metrics::alignment_tax(a, fam_b)) ==
                              metrics::tax_csv(metrics::alignment_tax(b, fam_b)) &&
                          metrics::subspace_csv(a) == metrics::subspace_csv(b);
        ok = ok && same;
        ++runs;
      }
    }
    detail = std::to_string(runs) + " configurations run twice; CSV outputs " +
             (ok ? "bitwise identical" : "DIFFER");
    return ok;
  });
}

std::vector<CheckResult> run_all(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  out.push_back(check_orthogonality(opts));
  out.push_back(check_rank_filtering(opts));
  out.push_back(check_gradients(opts));
  out.push_back(check_steepest_descent(opts));
  out.push_back(check_first_order(opts));
  out.push_back(check_reductions(opts));
  out.push_back(check_tax_mitigation(opts));
  out.push_back(check_ablations(opts));
  out.push_back(check_determinism(opts));
  return out;
}

}  // namespace ogpsa::verify

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "ogpsa/errors.hpp"
#include "ogpsa/oracle.hpp"
#include "ogpsa/presets.hpp"
#include "test_support.hpp"

namespace ogpsa {
namespace {

using linalg::Matrix;
using linalg::OrthonormalBasis;
using linalg::ParamVector;
using optimizer::Method;

TEST(FdGradient, HalfNormIsExact) {
  const models::ModelSpec spec{models::ModelKind::quadratic, {2}};
  models::Batch b;
  b.inputs = Matrix(2, 2, {1, 0, 0, 1});
  b.targets = Matrix(2, 1);
  const auto fd = oracle::fd_gradient(spec, {models::LossTag::squared_error}, ParamVector{1, 2}, b);
  EXPECT_NEAR(fd[0], 1.0, 1e-10);
  EXPECT_NEAR(fd[1], 2.0, 1e-10);
}

TEST(FdGradient, DpoAtReference) {
  const models::ModelSpec spec{models::ModelKind::softmax_policy, {4, 5}};
  const models::LossKind kind{models::LossTag::dpo_pairwise, 0.2};
  Rng rng = make_rng(12);
  const auto theta = random_normal(spec.parameter_count(), rng, 0.5);
  models::Batch b;
  b.inputs = Matrix(6, 4, random_normal(24, rng));
  for (std::size_t r = 0; r < 6; ++r) b.pairs.push_back({r, r % 5, (r + 2) % 5});
  b.ref_params = std::make_shared<const ParamVector>(theta);
  const auto fd = oracle::fd_gradient(spec, kind, theta, b);
  const auto an = models::gradient(spec, kind, theta, b);
  EXPECT_LE(linalg::max_abs_diff(fd, an), 1e-6);
}

TEST(FdGradient, MlpCrossCheck) {
  const models::ModelSpec spec{models::ModelKind::mlp2, {5, 7, 1}, models::Activation::tanh};
  const models::LossKind kind{models::LossTag::squared_error};
  Rng rng = make_rng(13);
  const auto theta = random_normal(spec.parameter_count(), rng, 0.5);
  models::Batch b;
  b.inputs = Matrix(10, 5, random_normal(50, rng));
  b.targets = Matrix(10, 1, random_normal(10, rng));
  const auto cmp = oracle::compare_gradients(models::gradient(spec, kind, theta, b),
                                             oracle::fd_gradient(spec, kind, theta, b));
  EXPECT_TRUE(cmp.pass);
  EXPECT_LE(cmp.max_rel_error, 1e-4);
}

TEST(FdGradient, NonFiniteProbeThrows) {
  const models::ModelSpec spec{models::ModelKind::quadratic, {1}};
  models::Batch b;
  b.inputs = Matrix(1, 1, {1.0});
  b.targets = Matrix(1, 1);
  EXPECT_THROW(oracle::fd_gradient(spec, {models::LossTag::squared_error}, ParamVector{1e200}, b), NumericError);
}

TEST(CompareGradients, ReportsWorstCoordinate) {
  const auto cmp = oracle::compare_gradients(ParamVector{1.0, 2.0, 0.0}, ParamVector{1.0, 2.1, 0.0});
  EXPECT_EQ(cmp.worst_index, 1u);
  EXPECT_NEAR(cmp.max_rel_error, 0.1 / 2.1, 1e-15);
  EXPECT_FALSE(cmp.pass);
}

TEST(SequentialProjection, AgreesWithLibrary) {
  Rng rng = make_rng(14);
  const auto basis = testing::random_basis(40, 4, rng);
  const auto g = random_normal(40, rng);
  EXPECT_LE(linalg::max_abs_diff(oracle::sequential_projection(g, basis), linalg::project_complement(g, basis)),
            1e-12);
}

TEST(SteepestCheck, PlanarCase) {
  const auto basis = OrthonormalBasis::from_columns({{1, 0}});
  Rng rng = make_rng(15);
  const auto rep = oracle::steepest_check(ParamVector{1, 1}, basis, 1000, rng);
  EXPECT_DOUBLE_EQ(rep.bound, -1.0);
  EXPECT_LE(rep.attainment_error, 1e-12);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_TRUE(rep.pass);
}

TEST(SteepestCheck, SeededRankThree) {
  Rng rng = make_rng(16);
  const auto basis = testing::random_basis(50, 3, rng);
  const auto g = random_normal(50, rng);
  const auto rep = oracle::steepest_check(g, basis, 10000, rng);
  EXPECT_EQ(rep.samples, 10000u);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_GE(rep.min_sampled, rep.bound - 1e-9);
  EXPECT_TRUE(rep.pass);
}

TEST(SteepestCheck, EmptyBasisIsPlainSteepestDescent) {
  Rng rng = make_rng(17);
  const auto g = random_normal(8, rng);
  const auto rep = oracle::steepest_check(g, OrthonormalBasis(8), 2000, rng);
  EXPECT_NEAR(rep.bound, -linalg::norm(g), 1e-15);
  EXPECT_TRUE(rep.pass);
}

TEST(SteepestCheck, GradientInsideSpanIsPrecondition) {
  const auto basis = OrthonormalBasis::from_columns({{1, 0}});
  Rng rng = make_rng(18);
  EXPECT_THROW(oracle::steepest_check(ParamVector{3, 0}, basis, 10, rng), PreconditionError);
}

TEST(SteepestCheck, CatchesBrokenProjector) {
  Rng rng = make_rng(19);
  const auto basis = testing::random_basis(20, 3, rng);
  const auto g = random_normal(20, rng);
  const oracle::Projector identity = [](linalg::VectorView v, const OrthonormalBasis&) {
    return ParamVector(v.begin(), v.end());
  };
  const auto rep = oracle::steepest_check(g, basis, 1000, rng, identity);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.feasibility_error, 1e-10);
}

TEST(QuadraticRemainder, ClosedForm) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  const auto& cap = fam.capability[0];
  Rng rng = make_rng(20);
  const auto step = random_normal(10, rng, 0.01);
  double expected = 0.0;
  for (std::size_t r = 0; r < cap.data.inputs.rows(); ++r) {
    const double a = linalg::dot(cap.data.inputs.row(r), step);
    expected += 0.5 * a * a;
  }
  EXPECT_DOUBLE_EQ(oracle::quadratic_remainder(cap, step), expected);
}

TEST(TaylorScaling, ProjectedStepsAreSecondOrder) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  const double etas[] = {1e-2, 1e-3, 1e-4};
  const auto rep = oracle::taylor_scaling(fam, etas, Method::ogpsa);
  EXPECT_NEAR(rep.slope, 2.0, 0.2);
  for (const auto& row : rep.rows) EXPECT_LE(testing::rel_diff(row.delta_loss, row.remainder), 1e-6);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    EXPECT_NEAR(rep.rows[i - 1].delta_loss / rep.rows[i].delta_loss, 100.0, 100.0 * 1e-6);
  }
}

TEST(TaylorScaling, HalvingEtaQuartersTheChange) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 3, 4);
  const double etas[] = {4e-3, 2e-3, 1e-3};
  const auto rep = oracle::taylor_scaling(fam, etas, Method::ogpsa);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    EXPECT_LE(testing::rel_diff(rep.rows[i - 1].delta_loss / rep.rows[i].delta_loss, 4.0), 1e-6);
  }
}

TEST(TaylorScaling, NaiveStepsAreFirstOrder) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  const double etas[] = {1e-2, 1e-3, 1e-4};
  EXPECT_NEAR(oracle::taylor_scaling(fam, etas, Method::naive).slope, 1.0, 0.2);
}

TEST(TaylorScaling, NaiveOrthogonalIsSecondOrderOrZero) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 2, 0);
  const double etas[] = {1e-2, 1e-3, 1e-4};
  const auto rep = oracle::taylor_scaling(fam, etas, Method::naive);
  EXPECT_NEAR(rep.slope, 2.0, 0.2);
}

TEST(TaylorScaling, Errors) {
  const auto fam = tasks::make_quadratic_pair(10, std::numbers::pi / 4, 0);
  const double two[] = {1e-2, 1e-3};
  const double rising[] = {1e-4, 1e-3, 1e-2};
  const double ok[] = {1e-2, 1e-3, 1e-4};
  EXPECT_THROW(oracle::taylor_scaling(fam, two, Method::ogpsa), ConfigError);
  EXPECT_THROW(oracle::taylor_scaling(fam, rising, Method::ogpsa), ConfigError);
  EXPECT_THROW(oracle::taylor_scaling(fam, ok, Method::replay), ConfigError);
  const auto reg = tasks::make_family(presets::family_spec(tasks::FamilyKind::regression_mlp, 0));
  EXPECT_THROW(oracle::taylor_scaling(reg, ok, Method::ogpsa), ConfigError);
}

TEST(LogLogSlope, PowerLaws) {
  const double x[] = {1.0, 2.0, 4.0, 8.0};
  const double y2[] = {3.0, 12.0, 48.0, 192.0};
  EXPECT_NEAR(oracle::log_log_slope(x, y2), 2.0, 1e-12);
  const double y1[] = {-1.0, -2.0, 0.0, -8.0};  // zero row excluded, sign ignored
  EXPECT_NEAR(oracle::log_log_slope(x, y1), 1.0, 1e-12);
}

}  // namespace
}  // namespace ogpsa

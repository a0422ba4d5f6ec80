#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ogpsa/errors.hpp"
#include "ogpsa/linalg.hpp"
#include "ogpsa/rng.hpp"
#include "test_support.hpp"

namespace ogpsa {
namespace {

using linalg::OrthonormalBasis;
using linalg::ParamVector;

// Kahan-compensated sum of products, kept separate from linalg::dot.
long double kahan_dot(const ParamVector& a, const ParamVector& b) {
  long double sum = 0.0L;
  long double c = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double y = static_cast<long double>(a[i]) * b[i] - c;
    const long double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

TEST(Dot, HandComputed) {
  EXPECT_EQ(linalg::dot(ParamVector{1, 2, 3}, ParamVector{4, 5, 6}), 32.0);
  const ParamVector zero(7, 0.0);
  EXPECT_EQ(linalg::dot(zero, zero), 0.0);
}

TEST(Dot, MatchesCompensatedSum) {
  Rng rng = make_rng(42);
  const auto a = random_normal(1000, rng);
  const auto b = random_normal(1000, rng);
  const double oracle = static_cast<double>(kahan_dot(a, b));
  EXPECT_LE(testing::rel_diff(linalg::dot(a, b), oracle), 1e-9);
}

TEST(Dot, LengthMismatchThrows) {
  EXPECT_THROW(linalg::dot(ParamVector{1, 2}, ParamVector{1, 2, 3}), DimensionError);
}

TEST(Dot, RepeatedCallsAreBitwiseEqual) {
  Rng rng = make_rng(3);
  const auto a = random_normal(513, rng);
  const auto b = random_normal(513, rng);
  const double first = linalg::dot(a, b);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(linalg::dot(a, b), first);
}

TEST(GramSchmidt, HandOrthogonalization) {
  const std::vector<ParamVector> cands{{1, 0, 0}, {1, 1, 0}};
  const auto basis = linalg::gram_schmidt(cands, 1e-6);
  ASSERT_EQ(basis.rank(), 2u);
  EXPECT_EQ(basis.column(0), (ParamVector{1, 0, 0}));
  EXPECT_EQ(basis.column(1), (ParamVector{0, 1, 0}));
}

TEST(GramSchmidt, CollinearPairKeepsOne) {
  const std::vector<ParamVector> cands{{2, 0}, {4, 0}};
  const auto basis = linalg::gram_schmidt(cands, 1e-6);
  ASSERT_EQ(basis.rank(), 1u);
  EXPECT_EQ(basis.column(0), (ParamVector{1, 0}));
  EXPECT_EQ(basis.accepted_candidates(), (std::vector<std::size_t>{0}));
}

TEST(GramSchmidt, GramMatrixIsIdentity) {
  Rng rng = make_rng(7);
  std::vector<ParamVector> cands;
  for (int i = 0; i < 5; ++i) cands.push_back(random_normal(100, rng));
  const auto basis = linalg::gram_schmidt(cands, 1e-8);
  ASSERT_EQ(basis.rank(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double gij = 0.0;
      for (std::size_t k = 0; k < 100; ++k) gij += basis.column(i)[k] * basis.column(j)[k];
      EXPECT_NEAR(gij, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
    }
  }
}

TEST(GramSchmidt, ZeroCandidateIsDiscarded) {
  const std::vector<ParamVector> cands{{0, 0, 0}, {0, 3, 0}};
  const auto basis = linalg::gram_schmidt(cands, 1e-6);
  ASSERT_EQ(basis.rank(), 1u);
  EXPECT_EQ(basis.accepted_candidates(), (std::vector<std::size_t>{1}));
}

TEST(GramSchmidt, EmptyCandidateList) {
  const auto basis = linalg::gram_schmidt(std::vector<ParamVector>{}, 1e-6);
  EXPECT_EQ(basis.rank(), 0u);
}

TEST(GramSchmidt, EpsilonShrinksColumns) {
  const std::vector<ParamVector> cands{{2, 0}};
  const auto basis = linalg::gram_schmidt(cands, 1e-6, 1.0);
  EXPECT_DOUBLE_EQ(basis.column(0)[0], 2.0 / 3.0);
}

TEST(GramSchmidt, Errors) {
  const std::vector<ParamVector> ok{{1, 0}};
  EXPECT_THROW(linalg::gram_schmidt(ok, 0.0), ConfigError);
  EXPECT_THROW(linalg::gram_schmidt(ok, 1e-6, -1.0), ConfigError);
  const std::vector<ParamVector> ragged{{1, 0}, {1, 0, 0}};
  EXPECT_THROW(linalg::gram_schmidt(ragged, 1e-6), DimensionError);
  const std::vector<ParamVector> bad{{1, NAN}};
  EXPECT_THROW(linalg::gram_schmidt(bad, 1e-6), NumericError);
}

TEST(GramSchmidt, RelativeDelta) {
  const std::vector<ParamVector> cands{{3, 4}, {0, 1}};
  EXPECT_DOUBLE_EQ(linalg::relative_delta(cands), 5e-6);
  const std::vector<ParamVector> zeros{{0, 0}};
  EXPECT_DOUBLE_EQ(linalg::relative_delta(zeros), 1e-6);
}

TEST(GramSchmidt, SpanPreservation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed, 100);
    std::vector<ParamVector> cands;
    for (int i = 0; i < 6; ++i) cands.push_back(random_normal(30, rng));
    const auto basis = linalg::gram_schmidt(cands, 1e-8);
    ASSERT_EQ(basis.rank(), 6u);
    for (const auto& c : cands) {
      const auto residual = linalg::project_complement(c, basis);
      EXPECT_LE(linalg::norm(residual), 1e-8 * linalg::norm(c));
    }
  }
}

TEST(GramSchmidt, RankFilteringExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t r = 1; r <= 5; ++r) {
      Rng rng = make_rng(seed, 200 + r);
      std::vector<ParamVector> generators;
      for (std::size_t i = 0; i < r; ++i) generators.push_back(random_normal(20, rng));
      std::vector<ParamVector> cands = generators;
      while (cands.size() < 8) {
        ParamVector mix(20, 0.0);
        for (const auto& g : generators) linalg::axpy(random_normal(1, rng)[0], g, mix);
        cands.push_back(mix);
      }
      EXPECT_EQ(linalg::gram_schmidt(cands, 1e-6).rank(), r) << "seed " << seed << " r " << r;
    }
  }
}

TEST(ProjectComplement, AxisExamples) {
  const auto e1 = OrthonormalBasis::from_columns({{1, 0}});
  EXPECT_EQ(linalg::project_complement(ParamVector{1, 1}, e1), (ParamVector{0, 1}));
  EXPECT_EQ(linalg::project_complement(ParamVector{3, 0}, e1), (ParamVector{0, 0}));
}

TEST(ProjectComplement, EmptyBasisIsIdentity) {
  const OrthonormalBasis empty(3);
  const ParamVector g{1.5, -2.0, 0.25};
  EXPECT_EQ(linalg::project_complement(g, empty), g);
}

TEST(ProjectComplement, DimensionMismatch) {
  const auto e1 = OrthonormalBasis::from_columns({{1, 0}});
  EXPECT_THROW(linalg::project_complement(ParamVector{1, 1, 1}, e1), DimensionError);
}

TEST(ProjectComplement, ReconstructionOracle) {
  Rng rng = make_rng(11);
  const auto g = random_normal(50, rng);
  const auto basis = testing::random_basis(50, 3, rng);
  const auto gt = linalg::project_complement(g, basis);
  const double gn = linalg::norm(g);
  ParamVector rebuilt = gt;
  for (const auto& u : basis.columns()) {
    EXPECT_LE(std::abs(linalg::dot(gt, u)), 1e-9 * gn);
    linalg::axpy(linalg::dot(g, u), u, rebuilt);
  }
  EXPECT_LE(linalg::max_abs_diff(rebuilt, g), 1e-12);
}

TEST(FromColumns, RejectsNonOrthonormal) {
  EXPECT_THROW(OrthonormalBasis::from_columns({{1, 0}, {1, 1}}), PreconditionError);
  EXPECT_THROW(OrthonormalBasis::from_columns({{2, 0}}), PreconditionError);
}

// Seeded property matrix over d in {10, 100, 1000} and M' in 1..8.
class ProjectionProperties : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ProjectionProperties, Hold) {
  const std::size_t d = GetParam();
  for (std::size_t m = 1; m <= 8; ++m) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng = make_rng(seed, d * 100 + m);
      const auto basis = testing::random_basis(d, m, rng);
      ASSERT_EQ(basis.rank(), m);
      const auto g = random_normal(d, rng);
      const auto gt = linalg::project_complement(g, basis);
      const auto gtt = linalg::project_complement(gt, basis);
      EXPECT_LE(linalg::max_abs_diff(gt, gtt), 1e-12);

      const double gn = linalg::norm(g);
      const double gtn = linalg::norm(gt);
      EXPECT_LE(gtn, gn);

      double coeff_sq = 0.0;
      for (double c : linalg::projection_coefficients(g, basis)) coeff_sq += c * c;
      EXPECT_LE(testing::rel_diff(gn * gn, gtn * gtn + coeff_sq), 1e-9);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, ProjectionProperties, ::testing::Values(10, 100, 1000));

TEST(ProjectionProperties, NormEqualityIffOrthogonal) {
  Rng rng = make_rng(5);
  const auto basis = testing::random_basis(20, 3, rng);
  auto g = random_normal(20, rng);
  g = linalg::project_complement(g, basis);  // now orthogonal to the span
  EXPECT_EQ(linalg::norm(linalg::project_complement(g, basis)), linalg::norm(g));
  auto h = random_normal(20, rng);
  EXPECT_LT(linalg::norm(linalg::project_complement(h, basis)), linalg::norm(h));
}

TEST(Helpers, RequireFinite) {
  EXPECT_NO_THROW(linalg::require_finite(ParamVector{1, 2}, "x"));
  EXPECT_THROW(linalg::require_finite(ParamVector{1, INFINITY}, "x"), NumericError);
  EXPECT_FALSE(linalg::all_finite(ParamVector{NAN}));
}

}  // namespace
}  // namespace ogpsa

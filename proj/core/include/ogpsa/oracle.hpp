#pragma once

// Independent checks for the gradient, projection and descent claims.
// Nothing here calls models::gradient or linalg::project_complement unless a
// caller passes them in explicitly as the code under test.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ogpsa/linalg.hpp"
#include "ogpsa/models.hpp"
#include "ogpsa/optimizer.hpp"
#include "ogpsa/rng.hpp"
#include "ogpsa/tasks.hpp"

namespace ogpsa::oracle {

using linalg::OrthonormalBasis;
using linalg::ParamVector;
using linalg::VectorView;

struct FDConfig {
  double h = 1e-5;
  double tolerance = 1e-4;  // relative, per coordinate
  double floor = 1e-6;      // denominator floor for near-zero coordinates
};

/// Central differences of models::loss, one coordinate at a time.
ParamVector fd_gradient(const models::ModelSpec& spec, const models::LossKind& kind,
                        VectorView theta, const models::Batch& batch, const FDConfig& fd = {});

struct GradientComparison {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

/// |a_i - f_i| / max(|a_i|, |f_i|, floor) maximized over i.
GradientComparison compare_gradients(VectorView analytic, VectorView numeric, const FDConfig& fd = {});

/// Oracle projection: modified Gram-Schmidt style sequential subtraction,
/// written independently of linalg::project_complement.
ParamVector sequential_projection(VectorView g, const OrthonormalBasis& basis);

/// Code under test for steepest_check. Defaults to linalg::project_complement.
using Projector = std::function<ParamVector(VectorView, const OrthonormalBasis&)>;

struct SteepestReport {
  double bound = 0.0;              // -||P_perp g||, from the oracle projection
  double min_sampled = 0.0;        // min <g, v> over feasible unit samples
  double attainment_error = 0.0;   // |<g, v*> - bound| for v* from the projector
  double feasibility_error = 0.0;  // max_j |<v*, u_j>|
  std::size_t samples = 0;
  std::size_t violations = 0;
  bool pass = true;
};

/// Monte-Carlo check that no feasible unit direction descends faster than
/// -||g_tilde||, and that v* = -g_tilde/||g_tilde|| (g_tilde from `project`)
/// is feasible and attains the bound. PreconditionError when g lies in the span.
SteepestReport steepest_check(VectorView g, const OrthonormalBasis& basis, std::size_t n_samples,
                              Rng& rng, const Projector& project = {},
                              double slack = 1e-9, double attain_tol = 1e-12);

/// 0.5 * sum_r (a_r . dtheta)^2 for the design rows of a quadratic task:
/// the exact second-order part of its loss change.
double quadratic_remainder(const tasks::DifferentiableTask& task, VectorView delta_theta);

struct TaylorRow {
  double eta = 0.0;
  double delta_loss = 0.0;  // L_ref(theta_1) - L_ref(theta_0)
  double remainder = 0.0;   // closed form
};

struct TaylorReport {
  std::vector<TaylorRow> rows;
  double slope = 0.0;
  bool all_zero = false;  // slope reported as 2 in this branch
};

/// One step from theta_0 per eta (naive, or ogpsa with a subspace built at
/// theta_0 from every capability task); log-log slope of |delta L| vs eta.
/// Requires >= 3 strictly decreasing etas (ConfigError).
TaylorReport taylor_scaling(const tasks::TaskFamily& family, std::span<const double> etas,
                            optimizer::Method method);

/// Least-squares slope of log|y| against log x over rows with y != 0.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ogpsa::oracle

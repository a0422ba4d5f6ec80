#include "ogpsa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ogpsa/errors.hpp"

namespace ogpsa::oracle {

ParamVector fd_gradient(const models::ModelSpec& spec, const models::LossKind& kind,
                        VectorView theta, const models::Batch& batch, const FDConfig& fd) {
  if (!(fd.h > 0.0)) throw ConfigError("fd_gradient: h must be > 0");
  ParamVector probe(theta.begin(), theta.end());
  ParamVector out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + fd.h;
    const double up = models::loss(spec, kind, probe, batch);
    probe[i] = saved - fd.h;
    const double down = models::loss(spec, kind, probe, batch);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("fd_gradient: non-finite loss near coordinate " + std::to_string(i));
    }
    out[i] = (up - down) / (2.0 * fd.h);
  }
  return out;
}

GradientComparison compare_gradients(VectorView analytic, VectorView numeric, const FDConfig& fd) {
  if (analytic.size() != numeric.size()) throw DimensionError("compare_gradients: length mismatch");
  GradientComparison c;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), fd.floor});
    const double err = std::abs(analytic[i] - numeric[i]) / denom;
    if (!(err <= c.max_rel_error)) {
      c.max_rel_error = err;
      c.worst_index = i;
    }
  }
  c.pass = c.max_rel_error <= fd.tolerance;
  return c;
}

namespace {

double plain_dot(VectorView a, VectorView b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

ParamVector sequential_projection(VectorView g, const OrthonormalBasis& basis) {
  ParamVector r(g.begin(), g.end());
  for (const auto& u : basis.columns()) {
    if (u.size() != r.size()) throw DimensionError("sequential_projection: length mismatch");
    const double c = plain_dot(r, u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * u[i];
  }
  return r;
}

SteepestReport steepest_check(VectorView g, const OrthonormalBasis& basis, std::size_t n_samples,
                              Rng& rng, const Projector& project, double slack, double attain_tol) {
  if (n_samples == 0) throw ConfigError("steepest_check: n_samples must be >= 1");
  const ParamVector g_perp = sequential_projection(g, basis);
  const double perp_norm = std::sqrt(plain_dot(g_perp, g_perp));
  const double g_norm = std::sqrt(plain_dot(g, g));
  if (!(perp_norm > 1e-12 * std::max(1.0, g_norm))) {
    throw PreconditionError("steepest_check: g lies in the span of the basis");
  }

  SteepestReport rep;
  rep.bound = -perp_norm;
  rep.samples = n_samples;
  rep.min_sampled = std::numeric_limits<double>::infinity();

  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector z(g.size());
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (auto& x : z) x = normal(rng);
    ParamVector v = sequential_projection(z, basis);
    const double n = std::sqrt(plain_dot(v, v));
    if (n == 0.0) continue;
    for (auto& x : v) x /= n;
    const double value = plain_dot(g, v);
    rep.min_sampled = std::min(rep.min_sampled, value);
    if (value < rep.bound - slack) ++rep.violations;
  }

  const ParamVector g_tilde = project ? project(g, basis) : linalg::project_complement(g, basis);
  const double t_norm = std::sqrt(plain_dot(g_tilde, g_tilde));
  if (t_norm == 0.0) {
    rep.attainment_error = std::abs(rep.bound);
    rep.feasibility_error = 0.0;
  } else {
    ParamVector v_star(g_tilde.size());
    for (std::size_t i = 0; i < v_star.size(); ++i) v_star[i] = -g_tilde[i] / t_norm;
    rep.attainment_error = std::abs(plain_dot(g, v_star) - rep.bound);
    for (const auto& u : basis.columns()) {
      rep.feasibility_error = std::max(rep.feasibility_error, std::abs(plain_dot(v_star, u)));
    }
  }
  // Attainment is scaled by ||g|| so the gate is meaningful for any magnitude.
  rep.pass = rep.violations == 0 &&
             rep.attainment_error <= attain_tol * std::max(1.0, g_norm) &&
             rep.feasibility_error <= 1e-10;
  return rep;
}

double quadratic_remainder(const tasks::DifferentiableTask& task, VectorView delta_theta) {
  if (task.spec.kind != models::ModelKind::quadratic) {
    throw ConfigError("quadratic_remainder: task '" + task.name + "' is not quadratic");
  }
  const auto& a = task.data.inputs;
  if (a.cols() != delta_theta.size()) throw DimensionError("quadratic_remainder: length mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double s = plain_dot(a.row(r), delta_theta);
    total += 0.5 * s * s;
  }
  return total;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("log_log_slope: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 0.0 || x[i] <= 0.0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  if (lx.size() < 2) throw PreconditionError("log_log_slope: fewer than two usable rows");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

TaylorReport taylor_scaling(const tasks::TaskFamily& family, std::span<const double> etas,
                            optimizer::Method method) {
  if (etas.size() < 3) throw ConfigError("taylor_scaling: at least three etas are required");
  for (std::size_t i = 1; i < etas.size(); ++i) {
    if (!(etas[i] < etas[i - 1])) throw ConfigError("taylor_scaling: etas must be strictly decreasing");
  }
  if (etas.back() <= 0.0) throw ConfigError("taylor_scaling: etas must be positive");
  if (family.spec.kind != tasks::FamilyKind::quadratic_pair) {
    throw ConfigError("taylor_scaling: requires a quadratic_pair family");
  }
  if (method == optimizer::Method::replay) throw ConfigError("taylor_scaling: method must be ogpsa or naive");

  const auto& cap = family.capability.front();
  const auto& safe = family.safety.front();
  const auto& theta0 = family.theta0;
  Rng rng = make_rng(0, 0);
  const auto subspace = subspace::estimate_subspace(theta0, family.capability, 0, rng, std::nullopt, 0.0, 0);
  const double l0 = models::loss(cap.spec, cap.kind, theta0, cap.data);

  TaylorReport rep;
  std::vector<double> xs, ys;
  for (double eta : etas) {
    const auto step = method == optimizer::Method::ogpsa
                          ? optimizer::ogpsa_step(theta0, safe, safe.data, subspace, eta)
                          : optimizer::naive_step(theta0, safe, safe.data, eta);
    const ParamVector delta = linalg::subtract(step.theta, theta0);
    TaylorRow row;
    row.eta = eta;
    row.delta_loss = models::loss(cap.spec, cap.kind, step.theta, cap.data) - l0;
    row.remainder = quadratic_remainder(cap, delta);
    rep.rows.push_back(row);
    xs.push_back(eta);
    ys.push_back(row.delta_loss);
  }
  rep.all_zero = std::all_of(ys.begin(), ys.end(), [](double v) { return v == 0.0; });
  rep.slope = rep.all_zero ? 2.0 : log_log_slope(xs, ys);
  return rep;
}

}  // namespace ogpsa::oracle

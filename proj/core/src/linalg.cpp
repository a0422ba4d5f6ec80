#include "ogpsa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ogpsa/errors.hpp"

namespace ogpsa::linalg {

void require_same_length(VectorView a, VectorView b, const char* context) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(context) + ": length mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

void require_finite(VectorView a, const char* context) {
  if (!all_finite(a)) throw NumericError(std::string(context) + ": non-finite entry");
}

double dot(VectorView a, VectorView b) {
  require_same_length(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(VectorView a) { return std::sqrt(dot(a, a)); }

double max_abs(VectorView a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(VectorView a, VectorView b) {
  require_same_length(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(VectorView a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

void axpy(double alpha, VectorView x, MutableVectorView y) {
  require_same_length(x, VectorView(y), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

ParamVector add(VectorView a, VectorView b) {
  require_same_length(a, b, "add");
  ParamVector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

ParamVector subtract(VectorView a, VectorView b) {
  require_same_length(a, b, "subtract");
  ParamVector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

ParamVector scaled(VectorView a, double factor) {
  ParamVector out(a.begin(), a.end());
  for (auto& x : out) x *= factor;
  return out;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data size " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw DimensionError("Matrix::select_rows: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

OrthonormalBasis OrthonormalBasis::from_columns(std::vector<ParamVector> columns,
                                                double tolerance) {
  OrthonormalBasis basis;
  if (!columns.empty()) basis.dim_ = columns.front().size();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    require_same_length(columns[j], columns.front(), "OrthonormalBasis");
    require_finite(columns[j], "OrthonormalBasis");
    if (std::abs(norm(columns[j]) - 1.0) > tolerance) {
      throw PreconditionError("OrthonormalBasis: column " + std::to_string(j) +
                              " is not unit norm");
    }
    for (std::size_t i = 0; i < j; ++i) {
      if (std::abs(dot(columns[i], columns[j])) > tolerance) {
        throw PreconditionError("OrthonormalBasis: columns " + std::to_string(i) + " and " +
                                std::to_string(j) + " are not orthogonal");
      }
    }
    basis.accepted_.push_back(j);
  }
  basis.columns_ = std::move(columns);
  return basis;
}

namespace {

// One classical pass: all coefficients against the incoming v, then subtract.
void reduce_against(ParamVector& v, const std::vector<ParamVector>& accepted) {
  std::vector<double> coeffs(accepted.size());
  for (std::size_t j = 0; j < accepted.size(); ++j) coeffs[j] = dot(v, accepted[j]);
  for (std::size_t j = 0; j < accepted.size(); ++j) axpy(-coeffs[j], accepted[j], v);
}

}  // namespace

OrthonormalBasis gram_schmidt(std::span<const ParamVector> candidates, double delta,
                              double epsilon) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("gram_schmidt: delta must be a positive finite number");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("gram_schmidt: epsilon must be a non-negative finite number");
  }

  OrthonormalBasis basis;
  if (candidates.empty()) return basis;
  basis.dim_ = candidates.front().size();

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const ParamVector& g = candidates[k];
    require_same_length(g, candidates.front(), "gram_schmidt");
    require_finite(g, "gram_schmidt");

    ParamVector v = g;
    reduce_against(v, basis.columns_);
    reduce_against(v, basis.columns_);

    const double residual = norm(v);
    if (residual < delta) continue;  // nearly collinear (or zero): discard

    const double inv = 1.0 / (residual + epsilon);
    for (auto& x : v) x *= inv;
    basis.columns_.push_back(std::move(v));
    basis.accepted_.push_back(k);
  }
  return basis;
}

double relative_delta(std::span<const ParamVector> candidates, double factor) {
  double largest = 0.0;
  for (const auto& c : candidates) largest = std::max(largest, norm(c));
  return largest > 0.0 ? factor * largest : factor;
}

std::vector<double> projection_coefficients(VectorView g, const OrthonormalBasis& basis) {
  std::vector<double> coeffs;
  coeffs.reserve(basis.rank());
  for (const auto& u : basis.columns()) coeffs.push_back(dot(g, u));
  return coeffs;
}

ParamVector project_complement(VectorView g, const OrthonormalBasis& basis) {
  ParamVector out(g.begin(), g.end());
  if (basis.empty()) return out;
  if (basis.dim() != g.size()) {
    throw DimensionError("project_complement: gradient length " + std::to_string(g.size()) +
                         " does not match basis dimension " + std::to_string(basis.dim()));
  }
  const auto coeffs = projection_coefficients(g, basis);
  for (std::size_t j = 0; j < coeffs.size(); ++j) axpy(-coeffs[j], basis.column(j), out);
  return out;
}

}  // namespace ogpsa::linalg

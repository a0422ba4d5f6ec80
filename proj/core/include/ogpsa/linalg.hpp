#pragma once

// Dense vector arithmetic over flattened parameter vectors and the
// thresholded Gram-Schmidt process used to build capability subspaces.

#include <cstddef>
#include <span>
#include <vector>

namespace ogpsa::linalg {

/// Flat float64 parameter or gradient vector. All vectors combined in one
/// operation must share the same length.
using ParamVector = std::vector<double>;
using VectorView = std::span<const double>;
using MutableVectorView = std::span<double>;

/// Sum of a[i]*b[i], accumulated strictly left to right so repeated runs are
/// bitwise identical. Throws DimensionError on length mismatch.
double dot(VectorView a, VectorView b);
double norm(VectorView a);
double max_abs(VectorView a);
double max_abs_diff(VectorView a, VectorView b);
bool all_finite(VectorView a) noexcept;

/// y += alpha * x
void axpy(double alpha, VectorView x, MutableVectorView y);
ParamVector add(VectorView a, VectorView b);
ParamVector subtract(VectorView a, VectorView b);
ParamVector scaled(VectorView a, double factor);

void require_same_length(VectorView a, VectorView b, const char* context);
void require_finite(VectorView a, const char* context);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  VectorView row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  MutableVectorView row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Ordered set of mutually orthogonal columns, each of unit norm when built
/// with epsilon = 0. Rank zero means "no constraint".
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  explicit OrthonormalBasis(std::size_t dim) : dim_(dim) {}

  /// Adopts externally supplied columns after checking unit norm and mutual
  /// orthogonality within `tolerance`. Throws PreconditionError otherwise.
  static OrthonormalBasis from_columns(std::vector<ParamVector> columns,
                                       double tolerance = 1e-10);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rank() const noexcept { return columns_.size(); }
  bool empty() const noexcept { return columns_.empty(); }
  const std::vector<ParamVector>& columns() const noexcept { return columns_; }
  const ParamVector& column(std::size_t j) const { return columns_.at(j); }

  /// Candidate indices that survived the collinearity filter, in order.
  const std::vector<std::size_t>& accepted_candidates() const noexcept { return accepted_; }

  friend bool operator==(const OrthonormalBasis&, const OrthonormalBasis&) = default;

 private:
  friend OrthonormalBasis gram_schmidt(std::span<const ParamVector>, double, double);

  std::size_t dim_ = 0;
  std::vector<ParamVector> columns_;
  std::vector<std::size_t> accepted_;
};

/// Thresholded Gram-Schmidt over `candidates` in order.
///
/// Candidate k is reduced against every previously accepted direction; the
/// reduction is applied twice (classical Gram-Schmidt with one
/// re-orthogonalization pass). The residual v is accepted iff ||v|| >= delta
/// and is stored as v / (||v|| + epsilon). Rejected candidates contribute
/// nothing, so the rank never exceeds the candidate count.
///
/// Requires delta > 0 and epsilon >= 0 (ConfigError), equal lengths
/// (DimensionError) and finite entries (NumericError).
OrthonormalBasis gram_schmidt(std::span<const ParamVector> candidates, double delta,
                              double epsilon = 0.0);

/// Default collinearity threshold: `factor` times the largest candidate norm.
/// Falls back to `factor` when every candidate is zero.
double relative_delta(std::span<const ParamVector> candidates, double factor = 1e-6);

/// <g, u_j> for every basis column.
std::vector<double> projection_coefficients(VectorView g, const OrthonormalBasis& basis);

/// g - sum_j <g, u_j> u_j. All coefficients are taken against the original g.
/// An empty basis returns g unchanged.
ParamVector project_complement(VectorView g, const OrthonormalBasis& basis);

}  // namespace ogpsa::linalg

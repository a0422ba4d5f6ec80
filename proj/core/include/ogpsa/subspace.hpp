#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "ogpsa/linalg.hpp"
#include "ogpsa/rng.hpp"
#include "ogpsa/tasks.hpp"

namespace ogpsa::subspace {

using linalg::OrthonormalBasis;
using linalg::ParamVector;

/// Refresh period K. A disengaged value is the "never refresh" sentinel:
/// the subspace is built once at step 0 and kept for the whole run.
class RefreshPeriod {
 public:
  constexpr RefreshPeriod() = default;  // never
  constexpr explicit RefreshPeriod(std::size_t steps) : steps_(steps) {}

  static constexpr RefreshPeriod never() { return RefreshPeriod(); }
  constexpr bool is_never() const noexcept { return !steps_.has_value(); }
  /// Throws ConfigError for the never sentinel.
  std::size_t steps() const;

  std::string to_string() const;  // "inf" for never
  static RefreshPeriod parse(std::string_view text);

  friend bool operator==(const RefreshPeriod&, const RefreshPeriod&) = default;

 private:
  std::optional<std::size_t> steps_;
};

/// True iff step mod K == 0; the never sentinel answers true only at step 0.
/// K == 0 is a ConfigError.
bool needs_refresh(std::size_t step, RefreshPeriod period);

struct CapabilitySubspace {
  OrthonormalBasis basis;
  std::size_t built_at_step = 0;   // tau
  std::size_t candidate_count = 0; // M
  double delta = 0.0;
  double epsilon = 0.0;

  std::size_t rank() const noexcept { return basis.rank(); }
};

/// Samples one mini-batch per reference task (in task order, from `rng`),
/// takes the reference gradients at `theta` and orthonormalizes them with
/// the collinearity threshold `delta` (relative default when absent).
///
/// Throws ConfigError for an empty task list or a task without data and
/// NumericError (carrying the task index) for a non-finite gradient.
CapabilitySubspace estimate_subspace(linalg::VectorView theta,
                                     std::span<const tasks::DifferentiableTask> ref_tasks,
                                     std::size_t batch_size, Rng& rng,
                                     std::optional<double> delta, double epsilon,
                                     std::size_t step);

}  // namespace ogpsa::subspace

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ogpsa {

/// One training step. Losses are probe losses at the post-step parameters;
/// gradient norms describe the step itself.
struct RunRecord {
  std::size_t step = 0;
  std::string stage;
  double safety_loss = 0.0;
  std::vector<double> ref_losses;  // one per capability task, family order
  double g_norm = 0.0;
  double g_tilde_norm = 0.0;
  double removed_fraction = 0.0;  // 1 - (g_tilde_norm / g_norm)^2, 0 when g_norm == 0
  std::size_t rank = 0;           // M' of the basis used for this step
  std::size_t age = 0;            // step - tau

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline double removed_fraction(double g_norm, double g_tilde_norm) {
  if (g_norm == 0.0) return 0.0;
  const double ratio = g_tilde_norm / g_norm;
  return 1.0 - ratio * ratio;
}

}  // namespace ogpsa

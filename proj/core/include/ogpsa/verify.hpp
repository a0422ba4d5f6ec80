#pragma once

// The property and trend suite behind `ogpsa verify`. Each check returns a
// pass flag plus the margins it measured.

#include <cstdint>
#include <string>
#include <vector>

namespace ogpsa::verify {

struct VerifyOptions {
  std::uint64_t seed = 0;                // offsets the sampled property checks
  bool inject_skip_projection = false;   // fault injection: projection becomes identity
};

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

CheckResult check_orthogonality(const VerifyOptions& opts);        // 1
CheckResult check_rank_filtering(const VerifyOptions& opts);       // 2
CheckResult check_gradients(const VerifyOptions& opts);            // 3
CheckResult check_steepest_descent(const VerifyOptions& opts);     // 4
CheckResult check_first_order(const VerifyOptions& opts);          // 5
CheckResult check_reductions(const VerifyOptions& opts);           // 6
CheckResult check_tax_mitigation(const VerifyOptions& opts);       // 7
CheckResult check_ablations(const VerifyOptions& opts);            // 8
CheckResult check_determinism(const VerifyOptions& opts);          // 9

/// Every check above, in order.
std::vector<CheckResult> run_all(const VerifyOptions& opts);

/// Recorded first-run values gating the alignment-tax trend check.
struct TaxGolden {
  const char* family;
  std::uint64_t seed;
  double naive_tax[2];
  double ogpsa_tax[2];
  double naive_gain;
  double ogpsa_gain;
};

const std::vector<TaxGolden>& tax_goldens();
inline constexpr double kGoldenTolerance = 0.05;

}  // namespace ogpsa::verify

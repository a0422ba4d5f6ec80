#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ogpsa::tools {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kNumericFailure = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides both family and train seeds
  std::optional<std::string> out_dir; // overrides [output] dir
};

/// records.csv, tax.csv, subspace.csv, config.resolved, chart.svg
int cmd_run(const CommonOptions& opts, std::ostream& out, std::ostream& err);

/// Property and trend suite; exit 1 listing failures.
int cmd_verify(std::optional<std::uint64_t> seed, bool inject_skip_projection, std::ostream& out,
               std::ostream& err);

/// One leg per axis value; sweep.csv, sweep.svg, per-leg records, and
/// failures.txt when any leg fails.
int cmd_sweep(const CommonOptions& opts, const std::string& axis, const std::vector<std::string>& values,
              std::ostream& out, std::ostream& err);

/// naive, replay and ogpsa on one family; summary.csv and compare.svg.
int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ogpsa::tools

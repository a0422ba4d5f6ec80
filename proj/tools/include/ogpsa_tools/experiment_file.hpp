#pragma once

// Sectioned key = value experiment file:
//
//   version = 1
//   [family]   generator settings (tasks::FamilySpec)
//   [train]    optimizer settings (optimizer::TrainConfig)
//   [stage NAME]  one per stage, in file order: loss, steps, optional K
//   [output]   dir
//
// '#' starts a comment. Unknown sections or keys, duplicates and malformed
// values are rejected with the line and column of the offending text.

#include <cstddef>
#include <string>
#include <string_view>

#include "ogpsa/errors.hpp"
#include "ogpsa/optimizer.hpp"
#include "ogpsa/tasks.hpp"

namespace ogpsa::tools {

inline constexpr int kExperimentFileVersion = 1;

struct ExperimentFile {
  tasks::FamilySpec family;
  optimizer::TrainConfig train;
  std::string output_dir = "runs";

  friend bool operator==(const ExperimentFile&, const ExperimentFile&) = default;
};

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses and validates. Missing keys keep the defaults of the underlying
/// structs; `[train] stages` come only from [stage ...] sections.
ExperimentFile parse_experiment(std::string_view text, const std::string& source = "<config>");
ExperimentFile load_experiment(const std::string& path);

/// Fully resolved echo: every key written explicitly, parseable again to an
/// identical ExperimentFile.
std::string to_text(const ExperimentFile& file);

}  // namespace ogpsa::tools

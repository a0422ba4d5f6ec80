#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ogpsa/optimizer.hpp"

namespace ogpsa::sweep {

enum class Axis { K, M, refsize };

std::string_view to_string(Axis axis);
Axis parse_axis(std::string_view text);

struct Leg {
  std::string label;  // e.g. "K=5", "M=1[0]", "refsize=50"
  std::string value;  // the axis value as given
  optimizer::TrainConfig config;
};

/// One leg per value. K overrides the refresh period of every stage; an M
/// value m expands into every m-subset of the capability facets (index
/// order); refsize limits each reference pool. ConfigError on bad values.
std::vector<Leg> expand(const optimizer::TrainConfig& base, Axis axis,
                        std::span<const std::string> values, std::size_t n_capability);

}  // namespace ogpsa::sweep

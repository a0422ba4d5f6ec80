#include "ogpsa/sweep.hpp"

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"

namespace ogpsa::sweep {

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::K: return "K";
    case Axis::M: return "M";
    case Axis::refsize: return "refsize";
  }
  return "?";
}

Axis parse_axis(std::string_view text) {
  for (auto a : {Axis::K, Axis::M, Axis::refsize}) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(text) + "' (expected K, M or refsize)");
}

namespace {

void subsets(std::size_t n, std::size_t m, std::size_t start, std::vector<std::size_t>& cur,
             std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == m) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, m, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<Leg> expand(const optimizer::TrainConfig& base, Axis axis,
                        std::span<const std::string> values, std::size_t n_capability) {
  if (values.empty()) throw ConfigError("sweep: at least one value is required");
  std::vector<Leg> legs;
  for (const auto& raw : values) {
    const std::string v(io::trim(raw));
    switch (axis) {
      case Axis::K: {
        const auto period = subspace::RefreshPeriod::parse(v);
        Leg leg{"K=" + period.to_string(), v, base};
        leg.config.refresh = period;
        for (auto& s : leg.config.stages) s.refresh = period;
        legs.push_back(std::move(leg));
        break;
      }
      case Axis::M: {
        const auto m = static_cast<std::size_t>(io::parse_unsigned(v));
        if (m > n_capability) {
          throw ConfigError("sweep: M=" + v + " exceeds the " + std::to_string(n_capability) +
                            " capability facets");
        }
        std::vector<std::vector<std::size_t>> sets;
        std::vector<std::size_t> cur;
        subsets(n_capability, m, 0, cur, sets);
        for (const auto& set : sets) {
          std::string label = "M=" + std::to_string(m);
          if (m > 0 && m < n_capability) {
            label += '[';
            for (std::size_t i = 0; i < set.size(); ++i) label += (i ? "+" : "") + std::to_string(set[i]);
            label += ']';
          }
          Leg leg{label, v, base};
          leg.config.ref_tasks = set;
          legs.push_back(std::move(leg));
        }
        break;
      }
      case Axis::refsize: {
        const auto n = static_cast<std::size_t>(io::parse_unsigned(v));
        if (n == 0) throw ConfigError("sweep: refsize must be positive");
        Leg leg{"refsize=" + std::to_string(n), v, base};
        leg.config.ref_size = n;
        legs.push_back(std::move(leg));
        break;
      }
    }
  }
  for (auto& leg : legs) leg.config.validate();
  return legs;
}

}  // namespace ogpsa::sweep

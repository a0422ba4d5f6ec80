#include "ogpsa/subspace.hpp"

#include <string>
#include <vector>

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"

namespace ogpsa::subspace {

std::size_t RefreshPeriod::steps() const {
  if (!steps_) throw ConfigError("refresh period is 'never'; it has no step count");
  return *steps_;
}

std::string RefreshPeriod::to_string() const { return steps_ ? std::to_string(*steps_) : "inf"; }

RefreshPeriod RefreshPeriod::parse(std::string_view text) {
  text = io::trim(text);
  if (text == "inf" || text == "never") return never();
  const auto k = io::parse_unsigned(text);
  if (k == 0) throw ConfigError("refresh period K must be positive (or 'inf')");
  return RefreshPeriod(static_cast<std::size_t>(k));
}

bool needs_refresh(std::size_t step, RefreshPeriod period) {
  if (period.is_never()) return step == 0;
  const std::size_t k = period.steps();
  if (k == 0) throw ConfigError("refresh period K must be positive (or 'inf')");
  return step % k == 0;
}

CapabilitySubspace estimate_subspace(linalg::VectorView theta,
                                     std::span<const tasks::DifferentiableTask> ref_tasks,
                                     std::size_t batch_size, Rng& rng,
                                     std::optional<double> delta, double epsilon,
                                     std::size_t step) {
  if (ref_tasks.empty()) throw ConfigError("estimate_subspace: no reference tasks");

  std::vector<ParamVector> grads;
  grads.reserve(ref_tasks.size());
  for (std::size_t i = 0; i < ref_tasks.size(); ++i) {
    const auto& task = ref_tasks[i];
    if (task.data.size() == 0) {
      throw ConfigError("estimate_subspace: reference task " + std::to_string(i) + " ('" +
                        task.name + "') has no data");
    }
    const auto batch = task.sample(batch_size, rng);
    try {
      grads.push_back(models::gradient(task.spec, task.kind, theta, batch));
    } catch (const NumericError& e) {
      throw NumericError("reference task " + std::to_string(i) + " ('" + task.name +
                             "'): " + e.what(),
                         step, i);
    }
  }

  CapabilitySubspace out;
  out.delta = delta ? *delta : linalg::relative_delta(grads);
  out.epsilon = epsilon;
  out.basis = linalg::gram_schmidt(grads, out.delta, epsilon);
  out.built_at_step = step;
  out.candidate_count = ref_tasks.size();
  return out;
}

}  // namespace ogpsa::subspace

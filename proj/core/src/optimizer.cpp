#include "ogpsa/optimizer.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "ogpsa/errors.hpp"

namespace ogpsa::optimizer {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ogpsa: return "ogpsa";
    case Method::naive: return "naive";
    case Method::replay: return "replay";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (auto m : {Method::ogpsa, Method::naive, Method::replay}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) + "' (expected ogpsa, naive or replay)");
}

std::size_t TrainConfig::total_steps() const {
  std::size_t total = 0;
  for (const auto& s : stages) total += s.steps;
  return total;
}

std::vector<std::size_t> TrainConfig::resolved_ref_tasks(std::size_t n_capability) const {
  if (!ref_tasks) {
    std::vector<std::size_t> all(n_capability);
    for (std::size_t i = 0; i < n_capability; ++i) all[i] = i;
    return all;
  }
  for (auto i : *ref_tasks) {
    if (i >= n_capability) {
      throw ConfigError("reference task index " + std::to_string(i) + " out of range (family has " +
                        std::to_string(n_capability) + " capability tasks)");
    }
  }
  return *ref_tasks;
}

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be a positive finite number");
  if (stages.empty()) throw ConfigError("at least one stage is required");
  for (const auto& s : stages) {
    if (s.steps == 0) throw ConfigError("stage '" + s.task + "' must have at least one step");
    if (s.refresh && !s.refresh->is_never() && s.refresh->steps() == 0) {
      throw ConfigError("stage '" + s.task + "': K must be positive (or inf)");
    }
  }
  if (!refresh.is_never() && refresh.steps() == 0) throw ConfigError("K must be positive (or inf)");
  if (delta && (!(*delta > 0.0) || !std::isfinite(*delta))) throw ConfigError("delta must be > 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  if (!(replay_lambda >= 0.0) || !std::isfinite(replay_lambda)) {
    throw ConfigError("replay_lambda must be >= 0");
  }
  if (ref_tasks) {
    for (std::size_t i = 0; i < ref_tasks->size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if ((*ref_tasks)[i] == (*ref_tasks)[j]) throw ConfigError("reference task listed twice");
      }
    }
  }
}

StepResult naive_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                      double eta) {
  StepResult r;
  r.g_safe = models::gradient(task.spec, task.kind, theta, batch);
  r.g_tilde = r.g_safe;
  r.theta.assign(theta.begin(), theta.end());
  linalg::axpy(-eta, r.g_safe, r.theta);
  return r;
}

StepResult ogpsa_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                      const CapabilitySubspace& subspace, double eta) {
  StepResult r;
  r.g_safe = models::gradient(task.spec, task.kind, theta, batch);
  r.g_tilde = linalg::project_complement(r.g_safe, subspace.basis);
  r.theta.assign(theta.begin(), theta.end());
  linalg::axpy(-eta, r.g_tilde, r.theta);
  return r;
}

StepResult replay_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                       std::span<const DifferentiableTask> ref_tasks,
                       std::span<const models::Batch> ref_batches, double eta, double lambda) {
  if (ref_tasks.size() != ref_batches.size()) {
    throw DimensionError("replay_step: one batch per reference task is required");
  }
  if (!(lambda >= 0.0)) throw ConfigError("replay_step: lambda must be >= 0");
  StepResult r;
  r.g_safe = models::gradient(task.spec, task.kind, theta, batch);
  r.g_tilde = r.g_safe;
  ParamVector direction = r.g_safe;
  if (lambda != 0.0 && !ref_tasks.empty()) {
    ParamVector mean(theta.size(), 0.0);
    for (std::size_t i = 0; i < ref_tasks.size(); ++i) {
      const auto g = models::gradient(ref_tasks[i].spec, ref_tasks[i].kind, theta, ref_batches[i]);
      linalg::axpy(1.0, g, mean);
    }
    linalg::axpy(lambda / static_cast<double>(ref_tasks.size()), mean, direction);
  }
  r.theta.assign(theta.begin(), theta.end());
  linalg::axpy(-eta, direction, r.theta);
  return r;
}

DifferentiableTask stage_task(const TaskFamily& family, const StageConfig& stage,
                              VectorView stage_start) {
  const auto& base = family.safety_task(stage.task);
  if (base.kind.tag != stage.loss) {
    throw ConfigError("stage '" + stage.task + "' declares loss " +
                      std::string(models::to_string(stage.loss)) + " but the task uses " +
                      std::string(models::to_string(base.kind.tag)));
  }
  if (base.kind.tag != models::LossTag::dpo_pairwise) return base;
  return base.with_reference(
      std::make_shared<const ParamVector>(stage_start.begin(), stage_start.end()));
}

namespace {

struct Tracker {
  std::optional<CapabilitySubspace> current;
  std::size_t index = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config, const TaskFamily& family, const TrainOptions& options) {
  config.validate();
  for (const auto& stage : config.stages) stage_task(family, stage, family.theta0);  // name/loss check

  const auto ref_indices = config.resolved_ref_tasks(family.capability.size());
  std::vector<DifferentiableTask> refs;
  refs.reserve(ref_indices.size());
  for (auto i : ref_indices) refs.push_back(family.capability[i].truncated(config.ref_size));

  TrainResult result;
  result.label = std::string(to_string(config.method));
  result.family_fingerprint = family.fingerprint();
  result.config = config;
  result.records.reserve(config.total_steps());

  // Separate streams so the safety batch sequence never depends on whether
  // reference batches were drawn.
  Rng safety_rng = make_rng(config.seed, 11);
  Rng ref_rng = make_rng(config.seed, 12);

  ParamVector theta = family.theta0;
  Tracker tracker;
  std::size_t t = 0;

  for (const auto& stage : config.stages) {
    result.stage_start_params.push_back(theta);
    const DifferentiableTask task = stage_task(family, stage, theta);
    const RefreshPeriod period = stage.refresh.value_or(config.refresh);

    for (std::size_t local = 0; local < stage.steps; ++local, ++t) {
      try {
        const bool projecting = config.method == Method::ogpsa && !refs.empty();
        if (projecting && subspace::needs_refresh(period.is_never() ? t : local, period)) {
          tracker.current = subspace::estimate_subspace(theta, refs, config.ref_batch, ref_rng,
                                                        config.delta, config.epsilon, t);
          result.subspace_history.push_back(
              {t, tracker.current->rank(), tracker.current->candidate_count});
          if (options.retain_artifacts) result.subspaces.push_back(*tracker.current);
          tracker.index = result.subspace_history.size() - 1;
        }

        const auto batch = task.sample(config.safety_batch, safety_rng);
        StepResult step;
        switch (config.method) {
          case Method::naive:
            step = naive_step(theta, task, batch, config.eta);
            break;
          case Method::ogpsa:
            if (!projecting || options.skip_projection) {
              step = naive_step(theta, task, batch, config.eta);
            } else {
              step = ogpsa_step(theta, task, batch, *tracker.current, config.eta);
            }
            break;
          case Method::replay: {
            std::vector<models::Batch> ref_batches;
            ref_batches.reserve(refs.size());
            for (const auto& r : refs) ref_batches.push_back(r.sample(config.ref_batch, ref_rng));
            step = replay_step(theta, task, batch, refs, ref_batches, config.eta,
                               config.replay_lambda);
            break;
          }
        }
        if (!linalg::all_finite(step.theta)) throw NumericError("parameters became non-finite");
        theta = std::move(step.theta);

        RunRecord rec;
        rec.step = t;
        rec.stage = stage.task;
        rec.safety_loss = task.probe_loss(theta);
        rec.ref_losses.reserve(family.capability.size());
        for (const auto& cap : family.capability) rec.ref_losses.push_back(cap.probe_loss(theta));
        rec.g_norm = linalg::norm(step.g_safe);
        rec.g_tilde_norm = linalg::norm(step.g_tilde);
        rec.removed_fraction = removed_fraction(rec.g_norm, rec.g_tilde_norm);
        if (projecting) {
          rec.rank = tracker.current->rank();
          rec.age = t - tracker.current->built_at_step;
        }
        result.records.push_back(std::move(rec));

        if (options.retain_artifacts) {
          result.artifacts.push_back({t, std::move(step.g_safe), std::move(step.g_tilde),
                                      projecting ? tracker.index : 0});
        }
      } catch (const NumericError& e) {
        if (e.step()) throw;
        throw NumericError(std::string(e.what()) + " at step " + std::to_string(t), t,
                           e.task_index());
      }
    }
  }
  result.theta_final = std::move(theta);
  return result;
}

}  // namespace ogpsa::optimizer

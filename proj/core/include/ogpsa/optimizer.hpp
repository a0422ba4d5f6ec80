#pragma once

// Training loops: projected descent against the capability subspace, plain
// descent on the safety loss, and a gradient-mixing replay baseline.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ogpsa/run_record.hpp"
#include "ogpsa/subspace.hpp"
#include "ogpsa/tasks.hpp"

namespace ogpsa::optimizer {

using linalg::ParamVector;
using linalg::VectorView;
using subspace::CapabilitySubspace;
using subspace::RefreshPeriod;
using tasks::DifferentiableTask;
using tasks::TaskFamily;

enum class Method { ogpsa, naive, replay };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct StageConfig {
  std::string task;                       // safety task name in the family
  models::LossTag loss = models::LossTag::squared_error;
  std::size_t steps = 0;
  std::optional<RefreshPeriod> refresh;   // overrides TrainConfig::refresh

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct TrainConfig {
  Method method = Method::ogpsa;
  double eta = 1e-3;
  RefreshPeriod refresh{5};
  std::optional<std::vector<std::size_t>> ref_tasks;  // capability indices; absent = all
  std::optional<double> delta;                         // absent = 1e-6 * max candidate norm
  double epsilon = 0.0;
  std::size_t safety_batch = 32;  // 0 = full batch
  std::size_t ref_batch = 0;      // 0 = whole reference pool
  std::size_t ref_size = 0;       // reference pool limit per task, 0 = all
  double replay_lambda = 1.0;
  std::uint64_t seed = 0;
  std::vector<StageConfig> stages;

  std::size_t total_steps() const;
  /// Reference task indices against a family with `n_capability` facets.
  std::vector<std::size_t> resolved_ref_tasks(std::size_t n_capability) const;
  /// Throws ConfigError on any violated invariant.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct StepResult {
  ParamVector theta;
  ParamVector g_safe;
  ParamVector g_tilde;  // equals g_safe when no projection is applied
};

/// theta - eta * g_safe.
StepResult naive_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                      double eta);

/// theta - eta * P_perp(g_safe) with the (possibly lagged) subspace basis.
StepResult ogpsa_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                      const CapabilitySubspace& subspace, double eta);

/// theta - eta * (g_safe + lambda * mean_i g_ref_i). lambda == 0 is exactly naive_step.
StepResult replay_step(VectorView theta, const DifferentiableTask& task, const models::Batch& batch,
                       std::span<const DifferentiableTask> ref_tasks,
                       std::span<const models::Batch> ref_batches, double eta, double lambda);

struct SubspaceEntry {
  std::size_t tau = 0;
  std::size_t rank = 0;
  std::size_t candidates = 0;

  friend bool operator==(const SubspaceEntry&, const SubspaceEntry&) = default;
};

struct StepArtifact {
  std::size_t step = 0;
  ParamVector g_safe;
  ParamVector g_tilde;
  std::size_t subspace_index = 0;  // into TrainResult::subspaces
};

struct TrainOptions {
  bool retain_artifacts = false;  // keep per-step gradients and every basis
  bool skip_projection = false;   // fault injection: ogpsa applies g_safe unprojected
};

struct TrainResult {
  std::string label;
  std::string family_fingerprint;
  TrainConfig config;
  ParamVector theta_final;
  std::vector<ParamVector> stage_start_params;
  std::vector<RunRecord> records;
  std::vector<SubspaceEntry> subspace_history;
  std::vector<CapabilitySubspace> subspaces;  // retain_artifacts only
  std::vector<StepArtifact> artifacts;        // retain_artifacts only
};

/// Runs every stage in order. Within step t the subspace is refreshed first
/// (ogpsa only) when the stage-local step is a multiple of K, or only at
/// t = 0 for the never sentinel; then the method's step is applied and a
/// RunRecord appended. Stage transitions into a dpo_pairwise task freeze
/// the current parameters as its reference policy.
///
/// Throws ConfigError for unknown tasks or mismatched losses and
/// NumericError tagged with the failing step.
TrainResult train(const TrainConfig& config, const TaskFamily& family,
                  const TrainOptions& options = {});

/// Stage task as used by `train`: dpo tasks get `stage_start` as reference.
DifferentiableTask stage_task(const TaskFamily& family, const StageConfig& stage,
                              VectorView stage_start);

}  // namespace ogpsa::optimizer

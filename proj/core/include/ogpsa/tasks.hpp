#pragma once

// Synthetic task families with controllable interference between a
// "safety" objective and one or more "capability" (reference) objectives.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ogpsa/models.hpp"
#include "ogpsa/rng.hpp"

namespace ogpsa::tasks {

using linalg::ParamVector;
using models::Batch;
using models::LossKind;
using models::ModelSpec;

struct DifferentiableTask {
  std::string name;
  ModelSpec spec;
  LossKind kind;
  Batch data;   // training / reference pool
  Batch probe;  // held-out evaluation batch; never enters a gradient
  bool full_batch = false;  // analytic objective: every draw is the whole dataset

  /// Draws a mini-batch. batch_size == 0 (or a full-batch task) returns the
  /// whole dataset; batch_size <= n samples without replacement, larger
  /// sizes sample with replacement.
  Batch sample(std::size_t batch_size, Rng& rng) const;

  /// Copy whose data pool is limited to its first `pool` examples (0 = all).
  DifferentiableTask truncated(std::size_t pool) const;

  /// Copy with the frozen reference policy attached to data and probe.
  DifferentiableTask with_reference(std::shared_ptr<const ParamVector> ref) const;

  double probe_loss(linalg::VectorView theta) const;
};

enum class FamilyKind { quadratic_pair, regression_mlp, policy_sft_dpo };

struct FamilySpec {
  FamilyKind kind = FamilyKind::quadratic_pair;
  std::size_t dim = 10;      // quadratic: d; regression: input features; policy: context dim
  std::size_t hidden = 16;   // regression_mlp
  std::size_t vocab = 8;     // policy_sft_dpo
  double alpha = 0.7853981633974483;  // conflict angle, radians in [0, pi/2]
  double noise_sigma = 0.1;
  std::size_t n_capability = 200;  // reference pool per facet
  std::size_t n_safety = 200;
  std::size_t n_probe = 200;
  std::size_t n_pretrain = 400;    // per facet
  std::size_t pretrain_steps = 600;
  double pretrain_eta = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

/// Half-open feature range [begin, end) of the input vector.
struct FeatureBlock {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TaskFamily {
  FamilySpec spec;
  ModelSpec model;
  std::vector<DifferentiableTask> capability;
  std::vector<DifferentiableTask> safety;  // one per named safety stage
  std::vector<FeatureBlock> blocks;
  ParamVector theta0;
  std::size_t pretrain_steps = 0;  // full-batch descent steps used to produce theta0

  const DifferentiableTask& safety_task(std::string_view name) const;
  /// Stable identity string; results from different families never compare.
  std::string fingerprint() const;
};

/// Two quadratic objectives whose gradients at theta0 span lines at angle
/// `alpha`, with conflicting orientation: a naive safety step increases the
/// capability loss to first order whenever alpha < pi/2.
///
/// The gradient directions are signed coordinate axes (chosen from the seed),
/// so the orthogonal (alpha = pi/2) and collinear (alpha = 0) cases project
/// exactly. The capability objective also carries curvature of strength
/// cos(alpha) along the safety axis with zero residual at theta0; it is what
/// makes the second-order remainder of a projected step nonzero.
TaskFamily make_quadratic_pair(std::size_t d, double alpha, std::uint64_t seed);

/// mlp2 regression: two capability teachers on disjoint feature blocks plus a
/// shared block, and a safety teacher whose response on the shared block is
/// rotated by `alpha` away from the capability teacher. theta0 comes from a
/// fixed budget of full-batch descent on the capability pretraining data.
TaskFamily make_regression_family(const FamilySpec& spec);

/// softmax_policy family: stage "sft" (nll_sft on refusal labels for safety
/// contexts) followed by stage "dpo" (refusal preferred over the compliant
/// answer). Capability facets are nll_sft on teacher answers over contexts
/// disjoint from the safety region, sharing one feature block with it.
TaskFamily make_policy_family(const FamilySpec& spec);

TaskFamily make_family(const FamilySpec& spec);

/// Unsigned angle in [0, pi/2] between the lines spanned by two vectors.
double line_angle(linalg::VectorView a, linalg::VectorView b);

std::string_view to_string(FamilyKind kind);
FamilyKind parse_family_kind(std::string_view text);

/// Self-describing text dataset: a key = value header followed by one
/// CSV section per (task, split). See README for the layout.
void write_family(std::ostream& out, const TaskFamily& family);
TaskFamily read_family(std::istream& in);

}  // namespace ogpsa::tasks

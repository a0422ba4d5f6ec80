#pragma once

// Small differentiable models with closed-form or hand-derived backprop
// gradients. Covers likelihood-style objectives (squared error, cross
// entropy, categorical NLL) and the pairwise preference objective.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ogpsa/linalg.hpp"

namespace ogpsa::models {

using linalg::Matrix;
using linalg::ParamVector;
using linalg::VectorView;

enum class ModelKind { quadratic, linear_regression, logistic_regression, mlp2, softmax_policy };
enum class Activation { tanh, relu };
enum class LossTag { squared_error, cross_entropy, nll_sft, dpo_pairwise };

inline constexpr double kDefaultBeta = 0.2;

/// Architecture description. Meaning of `dims` per kind:
///   quadratic            {d}
///   linear_regression    {features}              theta = [w, bias]
///   logistic_regression  {features}              theta = [w, bias]
///   mlp2                 {in, hidden, out}       theta = [W1, b1, W2, b2], row-major
///   softmax_policy       {context_dim, vocab}    theta = [W (vocab x context), b]
struct ModelSpec {
  ModelKind kind = ModelKind::quadratic;
  std::vector<std::size_t> dims;
  Activation activation = Activation::tanh;

  std::size_t parameter_count() const;
  std::size_t input_dim() const;
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct LossKind {
  LossTag tag = LossTag::squared_error;
  double beta = kDefaultBeta;  // dpo_pairwise only

  friend bool operator==(const LossKind&, const LossKind&) = default;
};

struct PreferencePair {
  std::size_t context = 0;
  std::size_t preferred = 0;
  std::size_t rejected = 0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

/// One mini-batch or a full dataset.
///
/// `targets` carries regression targets (rows x outputs); `labels` carries
/// class indices. For dpo_pairwise the unit of the batch is a preference
/// pair: `inputs` holds the contexts and `pairs` indexes into them.
/// `ref_params` is the frozen reference policy and is present iff the loss
/// is dpo_pairwise.
struct Batch {
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> labels;
  std::vector<PreferencePair> pairs;
  std::shared_ptr<const ParamVector> ref_params;

  /// Number of loss terms: pairs for preference data, rows otherwise.
  std::size_t size() const noexcept { return pairs.empty() ? inputs.rows() : pairs.size(); }
};

/// Examples at `indices` (pairs for preference batches, rows otherwise).
Batch subset(const Batch& batch, std::span<const std::size_t> indices);

/// Mean loss over the batch; quadratic returns 0.5 * ||A theta - b||^2 over
/// all rows of the batch (sum, not mean). Throws DimensionError on shape
/// mismatch, ConfigError on an unsupported (model, loss) pairing and
/// NumericError on non-finite values.
double loss(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& batch);

/// Exact gradient of `loss` with respect to theta.
ParamVector gradient(const ModelSpec& spec, const LossKind& kind, VectorView theta,
                     const Batch& batch);

/// Checks theta length, batch shapes and the (model, loss) pairing.
void validate(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& batch);

/// log pi(y | x) for every token under a softmax policy.
std::vector<double> policy_log_probs(const ModelSpec& spec, VectorView theta, VectorView context);

std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation activation);
std::string_view to_string(LossTag tag);
ModelKind parse_model_kind(std::string_view text);
Activation parse_activation(std::string_view text);
LossTag parse_loss_tag(std::string_view text);

}  // namespace ogpsa::models

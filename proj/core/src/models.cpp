#include "ogpsa/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ogpsa/errors.hpp"

namespace ogpsa::models {
namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sum_exp(VectorView values) {
  const double peak = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

void check_finite_result(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + ": non-finite loss");
}

void check_finite_result(const ParamVector& g, const char* what) {
  if (!linalg::all_finite(g)) throw NumericError(std::string(what) + ": non-finite gradient");
}

// ---------------------------------------------------------------- quadratic

double quadratic_loss(VectorView theta, const Batch& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const double residual = linalg::dot(b.inputs.row(r), theta) - b.targets(r, 0);
    total += 0.5 * residual * residual;
  }
  return total;
}

ParamVector quadratic_gradient(VectorView theta, const Batch& b) {
  ParamVector g(theta.size(), 0.0);
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const double residual = linalg::dot(b.inputs.row(r), theta) - b.targets(r, 0);
    linalg::axpy(residual, b.inputs.row(r), g);
  }
  return g;
}

// ------------------------------------------------------ linear / logistic

double affine(VectorView theta, VectorView x) {
  return linalg::dot(theta.first(x.size()), x) + theta[x.size()];
}

double linear_loss(VectorView theta, const Batch& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const double e = affine(theta, b.inputs.row(r)) - b.targets(r, 0);
    total += 0.5 * e * e;
  }
  return total / static_cast<double>(b.inputs.rows());
}

ParamVector linear_gradient(VectorView theta, const Batch& b) {
  const std::size_t f = b.inputs.cols();
  ParamVector g(theta.size(), 0.0);
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto x = b.inputs.row(r);
    const double e = affine(theta, x) - b.targets(r, 0);
    for (std::size_t i = 0; i < f; ++i) g[i] += e * x[i];
    g[f] += e;
  }
  return linalg::scaled(g, 1.0 / static_cast<double>(b.inputs.rows()));
}

double logistic_loss(VectorView theta, const Batch& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const double z = affine(theta, b.inputs.row(r));
    total += softplus(z) - static_cast<double>(b.labels[r]) * z;
  }
  return total / static_cast<double>(b.inputs.rows());
}

ParamVector logistic_gradient(VectorView theta, const Batch& b) {
  const std::size_t f = b.inputs.cols();
  ParamVector g(theta.size(), 0.0);
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto x = b.inputs.row(r);
    const double e = sigmoid(affine(theta, x)) - static_cast<double>(b.labels[r]);
    for (std::size_t i = 0; i < f; ++i) g[i] += e * x[i];
    g[f] += e;
  }
  return linalg::scaled(g, 1.0 / static_cast<double>(b.inputs.rows()));
}

// --------------------------------------------------------------------- mlp2

struct MlpLayout {
  std::size_t in, hidden, out;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden * in; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + out * hidden; }
};

MlpLayout mlp_layout(const ModelSpec& spec) { return {spec.dims[0], spec.dims[1], spec.dims[2]}; }

struct MlpForward {
  std::vector<double> pre;     // hidden pre-activations
  std::vector<double> hidden;  // activations
  std::vector<double> output;
};

double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : std::max(z, 0.0); }

double activate_derivative(Activation a, double z, double h) {
  if (a == Activation::tanh) return 1.0 - h * h;
  return z > 0.0 ? 1.0 : 0.0;
}

MlpForward mlp_forward(const ModelSpec& spec, VectorView theta, VectorView x) {
  const auto L = mlp_layout(spec);
  MlpForward f{std::vector<double>(L.hidden), std::vector<double>(L.hidden),
               std::vector<double>(L.out)};
  for (std::size_t j = 0; j < L.hidden; ++j) {
    f.pre[j] = linalg::dot(theta.subspan(L.w1() + j * L.in, L.in), x) + theta[L.b1() + j];
    f.hidden[j] = activate(spec.activation, f.pre[j]);
  }
  for (std::size_t k = 0; k < L.out; ++k) {
    f.output[k] = linalg::dot(theta.subspan(L.w2() + k * L.hidden, L.hidden), f.hidden) +
                  theta[L.b2() + k];
  }
  return f;
}

// Loss of one row and dLoss/d(output) for that row.
double mlp_row_loss(const LossKind& kind, const MlpForward& f, const Batch& b, std::size_t r,
                    std::vector<double>* d_output) {
  const std::size_t out = f.output.size();
  if (kind.tag == LossTag::squared_error) {
    double total = 0.0;
    for (std::size_t k = 0; k < out; ++k) {
      const double e = f.output[k] - b.targets(r, k);
      total += 0.5 * e * e;
      if (d_output) (*d_output)[k] = e;
    }
    return total;
  }
  // cross_entropy
  if (out == 1) {
    const double z = f.output[0];
    const double y = static_cast<double>(b.labels[r]);
    if (d_output) (*d_output)[0] = sigmoid(z) - y;
    return softplus(z) - y * z;
  }
  const double lse = log_sum_exp(f.output);
  if (d_output) {
    for (std::size_t k = 0; k < out; ++k) (*d_output)[k] = std::exp(f.output[k] - lse);
    (*d_output)[b.labels[r]] -= 1.0;
  }
  return lse - f.output[b.labels[r]];
}

double mlp_loss(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto f = mlp_forward(spec, theta, b.inputs.row(r));
    total += mlp_row_loss(kind, f, b, r, nullptr);
  }
  return total / static_cast<double>(b.inputs.rows());
}

ParamVector mlp_gradient(const ModelSpec& spec, const LossKind& kind, VectorView theta,
                         const Batch& b) {
  const auto L = mlp_layout(spec);
  ParamVector g(theta.size(), 0.0);
  std::vector<double> d_out(L.out);
  std::vector<double> d_hidden(L.hidden);
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto x = b.inputs.row(r);
    const auto f = mlp_forward(spec, theta, x);
    mlp_row_loss(kind, f, b, r, &d_out);

    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (std::size_t k = 0; k < L.out; ++k) {
      for (std::size_t j = 0; j < L.hidden; ++j) {
        g[L.w2() + k * L.hidden + j] += d_out[k] * f.hidden[j];
        d_hidden[j] += d_out[k] * theta[L.w2() + k * L.hidden + j];
      }
      g[L.b2() + k] += d_out[k];
    }
    for (std::size_t j = 0; j < L.hidden; ++j) {
      const double d_pre = d_hidden[j] * activate_derivative(spec.activation, f.pre[j], f.hidden[j]);
      for (std::size_t i = 0; i < L.in; ++i) g[L.w1() + j * L.in + i] += d_pre * x[i];
      g[L.b1() + j] += d_pre;
    }
  }
  return linalg::scaled(g, 1.0 / static_cast<double>(b.inputs.rows()));
}

// ----------------------------------------------------------- softmax policy

std::vector<double> policy_logits(const ModelSpec& spec, VectorView theta, VectorView x) {
  const std::size_t c = spec.dims[0];
  const std::size_t vocab = spec.dims[1];
  std::vector<double> logits(vocab);
  for (std::size_t k = 0; k < vocab; ++k) {
    logits[k] = linalg::dot(theta.subspan(k * c, c), x) + theta[vocab * c + k];
  }
  return logits;
}

double nll_loss(const ModelSpec& spec, VectorView theta, const Batch& b) {
  double total = 0.0;
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto logits = policy_logits(spec, theta, b.inputs.row(r));
    total += log_sum_exp(logits) - logits[b.labels[r]];
  }
  return total / static_cast<double>(b.inputs.rows());
}

ParamVector nll_gradient(const ModelSpec& spec, VectorView theta, const Batch& b) {
  const std::size_t c = spec.dims[0];
  const std::size_t vocab = spec.dims[1];
  ParamVector g(theta.size(), 0.0);
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    const auto x = b.inputs.row(r);
    const auto logits = policy_logits(spec, theta, x);
    const double lse = log_sum_exp(logits);
    for (std::size_t k = 0; k < vocab; ++k) {
      const double coeff = std::exp(logits[k] - lse) - (k == b.labels[r] ? 1.0 : 0.0);
      for (std::size_t i = 0; i < c; ++i) g[k * c + i] += coeff * x[i];
      g[vocab * c + k] += coeff;
    }
  }
  return linalg::scaled(g, 1.0 / static_cast<double>(b.inputs.rows()));
}

// beta * [(log pi(y_w) - log pi(y_l)) - (log pi_ref(y_w) - log pi_ref(y_l))]
double dpo_margin(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& b,
                  const PreferencePair& p) {
  const auto x = b.inputs.row(p.context);
  const auto lp = policy_log_probs(spec, theta, x);
  const auto lr = policy_log_probs(spec, *b.ref_params, x);
  return kind.beta * ((lp[p.preferred] - lp[p.rejected]) - (lr[p.preferred] - lr[p.rejected]));
}

double dpo_loss(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& b) {
  double total = 0.0;
  for (const auto& p : b.pairs) total += softplus(-dpo_margin(spec, kind, theta, b, p));
  return total / static_cast<double>(b.pairs.size());
}

// d/dtheta of -log sigmoid(h) is -sigmoid(-h) * beta * (grad log pi(y_w) - grad log pi(y_l)).
// For linear logits the normalizer cancels in that difference, leaving
// (e_w - e_l) outer [x, 1].
ParamVector dpo_gradient(const ModelSpec& spec, const LossKind& kind, VectorView theta,
                         const Batch& b) {
  const std::size_t c = spec.dims[0];
  const std::size_t vocab = spec.dims[1];
  ParamVector g(theta.size(), 0.0);
  for (const auto& p : b.pairs) {
    if (p.preferred == p.rejected) continue;
    const double h = dpo_margin(spec, kind, theta, b, p);
    const double coeff = -sigmoid(-h) * kind.beta;
    const auto x = b.inputs.row(p.context);
    for (std::size_t i = 0; i < c; ++i) {
      g[p.preferred * c + i] += coeff * x[i];
      g[p.rejected * c + i] -= coeff * x[i];
    }
    g[vocab * c + p.preferred] += coeff;
    g[vocab * c + p.rejected] -= coeff;
  }
  return linalg::scaled(g, 1.0 / static_cast<double>(b.pairs.size()));
}

bool supports(ModelKind model, LossTag tag) {
  switch (model) {
    case ModelKind::quadratic:
    case ModelKind::linear_regression:
      return tag == LossTag::squared_error;
    case ModelKind::logistic_regression:
      return tag == LossTag::cross_entropy;
    case ModelKind::mlp2:
      return tag == LossTag::squared_error || tag == LossTag::cross_entropy;
    case ModelKind::softmax_policy:
      return tag == LossTag::nll_sft || tag == LossTag::dpo_pairwise;
  }
  return false;
}

std::size_t output_dim(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::mlp2: return spec.dims[2];
    case ModelKind::softmax_policy: return spec.dims[1];
    case ModelKind::logistic_regression: return 2;
    default: return 1;
  }
}

}  // namespace

std::size_t ModelSpec::parameter_count() const {
  validate();
  switch (kind) {
    case ModelKind::quadratic: return dims[0];
    case ModelKind::linear_regression:
    case ModelKind::logistic_regression: return dims[0] + 1;
    case ModelKind::mlp2: return dims[1] * dims[0] + dims[1] + dims[2] * dims[1] + dims[2];
    case ModelKind::softmax_policy: return dims[1] * dims[0] + dims[1];
  }
  return 0;
}

std::size_t ModelSpec::input_dim() const {
  validate();
  return dims[0];
}

void ModelSpec::validate() const {
  std::size_t expected = 1;
  if (kind == ModelKind::mlp2) expected = 3;
  if (kind == ModelKind::softmax_policy) expected = 2;
  if (dims.size() != expected) {
    throw ConfigError("ModelSpec: " + std::string(to_string(kind)) + " expects " +
                      std::to_string(expected) + " dims, got " + std::to_string(dims.size()));
  }
  if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
    throw ConfigError("ModelSpec: dims must be positive");
  }
  if (kind == ModelKind::softmax_policy && dims[1] < 2) {
    throw ConfigError("ModelSpec: softmax_policy needs a vocabulary of at least 2");
  }
}

Batch subset(const Batch& batch, std::span<const std::size_t> indices) {
  Batch out;
  out.ref_params = batch.ref_params;
  if (!batch.pairs.empty()) {
    out.inputs = batch.inputs;
    out.pairs.reserve(indices.size());
    for (auto i : indices) out.pairs.push_back(batch.pairs.at(i));
    return out;
  }
  out.inputs = batch.inputs.select_rows(indices);
  if (!batch.targets.empty()) out.targets = batch.targets.select_rows(indices);
  if (!batch.labels.empty()) {
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(batch.labels.at(i));
  }
  return out;
}

void validate(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& batch) {
  spec.validate();
  if (!supports(spec.kind, kind.tag)) {
    throw ConfigError("loss " + std::string(to_string(kind.tag)) + " is not defined for model " +
                      std::string(to_string(spec.kind)));
  }
  if (theta.size() != spec.parameter_count()) {
    throw DimensionError("theta has length " + std::to_string(theta.size()) + ", model expects " +
                         std::to_string(spec.parameter_count()));
  }
  linalg::require_finite(theta, "theta");
  if (batch.size() == 0) throw DimensionError("batch is empty");
  if (batch.inputs.cols() != spec.input_dim()) {
    throw DimensionError("batch inputs have " + std::to_string(batch.inputs.cols()) +
                         " columns, model expects " + std::to_string(spec.input_dim()));
  }
  const std::size_t n = batch.inputs.rows();
  const std::size_t outputs = output_dim(spec);
  const bool is_dpo = kind.tag == LossTag::dpo_pairwise;

  if (is_dpo != static_cast<bool>(batch.ref_params)) {
    throw DimensionError("reference parameters must be present exactly for dpo_pairwise");
  }
  if (is_dpo) {
    if (!(kind.beta > 0.0)) throw ConfigError("dpo_pairwise requires beta > 0");
    if (batch.pairs.empty()) throw DimensionError("dpo_pairwise batch has no pairs");
    if (batch.ref_params->size() != theta.size()) {
      throw DimensionError("reference parameters have the wrong length");
    }
    for (const auto& p : batch.pairs) {
      if (p.context >= n || p.preferred >= outputs || p.rejected >= outputs) {
        throw DimensionError("preference pair index out of range");
      }
    }
    return;
  }

  if (kind.tag == LossTag::squared_error) {
    const std::size_t want = spec.kind == ModelKind::mlp2 ? spec.dims[2] : 1;
    if (batch.targets.rows() != n || batch.targets.cols() != want) {
      throw DimensionError("targets must be " + std::to_string(n) + "x" + std::to_string(want));
    }
  } else {
    if (batch.labels.size() != n) throw DimensionError("one label per row is required");
    const std::size_t classes = outputs == 1 ? 2 : outputs;
    for (auto y : batch.labels) {
      if (y >= classes) throw DimensionError("label out of range");
    }
  }
}

double loss(const ModelSpec& spec, const LossKind& kind, VectorView theta, const Batch& batch) {
  validate(spec, kind, theta, batch);
  double value = 0.0;
  switch (spec.kind) {
    case ModelKind::quadratic: value = quadratic_loss(theta, batch); break;
    case ModelKind::linear_regression: value = linear_loss(theta, batch); break;
    case ModelKind::logistic_regression: value = logistic_loss(theta, batch); break;
    case ModelKind::mlp2: value = mlp_loss(spec, kind, theta, batch); break;
    case ModelKind::softmax_policy:
      value = kind.tag == LossTag::nll_sft ? nll_loss(spec, theta, batch)
                                           : dpo_loss(spec, kind, theta, batch);
      break;
  }
  check_finite_result(value, "loss");
  return value;
}

ParamVector gradient(const ModelSpec& spec, const LossKind& kind, VectorView theta,
                     const Batch& batch) {
  validate(spec, kind, theta, batch);
  ParamVector g;
  switch (spec.kind) {
    case ModelKind::quadratic: g = quadratic_gradient(theta, batch); break;
    case ModelKind::linear_regression: g = linear_gradient(theta, batch); break;
    case ModelKind::logistic_regression: g = logistic_gradient(theta, batch); break;
    case ModelKind::mlp2: g = mlp_gradient(spec, kind, theta, batch); break;
    case ModelKind::softmax_policy:
      g = kind.tag == LossTag::nll_sft ? nll_gradient(spec, theta, batch)
                                       : dpo_gradient(spec, kind, theta, batch);
      break;
  }
  check_finite_result(g, "gradient");
  return g;
}

std::vector<double> policy_log_probs(const ModelSpec& spec, VectorView theta, VectorView context) {
  auto logits = policy_logits(spec, theta, context);
  const double lse = log_sum_exp(logits);
  for (auto& l : logits) l -= lse;
  return logits;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::quadratic: return "quadratic";
    case ModelKind::linear_regression: return "linear_regression";
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::mlp2: return "mlp2";
    case ModelKind::softmax_policy: return "softmax_policy";
  }
  return "?";
}

std::string_view to_string(Activation activation) {
  return activation == Activation::tanh ? "tanh" : "relu";
}

std::string_view to_string(LossTag tag) {
  switch (tag) {
    case LossTag::squared_error: return "squared_error";
    case LossTag::cross_entropy: return "cross_entropy";
    case LossTag::nll_sft: return "nll_sft";
    case LossTag::dpo_pairwise: return "dpo_pairwise";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::quadratic, ModelKind::linear_regression, ModelKind::logistic_regression,
                 ModelKind::mlp2, ModelKind::softmax_policy}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::tanh;
  if (text == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(text) + "'");
}

LossTag parse_loss_tag(std::string_view text) {
  for (auto t : {LossTag::squared_error, LossTag::cross_entropy, LossTag::nll_sft,
                 LossTag::dpo_pairwise}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("unknown loss kind '" + std::string(text) + "'");
}

}  // namespace ogpsa::models

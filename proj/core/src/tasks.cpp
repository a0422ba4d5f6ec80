#include "ogpsa/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"

namespace ogpsa::tasks {

using linalg::Matrix;
using models::LossTag;
using models::ModelKind;

// ------------------------------------------------------------------ tasks

Batch DifferentiableTask::sample(std::size_t batch_size, Rng& rng) const {
  const std::size_t n = data.size();
  if (n == 0) throw ConfigError("task '" + name + "' has no data");
  if (full_batch || batch_size == 0) return data;

  std::vector<std::size_t> idx;
  if (batch_size <= n) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(batch_size);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    idx.resize(batch_size);
    for (auto& i : idx) i = pick(rng);
  }
  return models::subset(data, idx);
}

DifferentiableTask DifferentiableTask::truncated(std::size_t pool) const {
  DifferentiableTask out = *this;
  if (pool == 0 || pool >= data.size()) return out;
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  out.data = models::subset(data, idx);
  return out;
}

DifferentiableTask DifferentiableTask::with_reference(std::shared_ptr<const ParamVector> ref) const {
  DifferentiableTask out = *this;
  out.data.ref_params = ref;
  out.probe.ref_params = std::move(ref);
  return out;
}

double DifferentiableTask::probe_loss(linalg::VectorView theta) const {
  return models::loss(spec, kind, theta, probe);
}

void FamilySpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi / 2 + 1e-12)) {
    throw ConfigError("family alpha must lie in [0, pi/2]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("family noise_sigma must be >= 0");
  }
  if (!(pretrain_eta >= 0.0) || !std::isfinite(pretrain_eta)) {
    throw ConfigError("family pretrain_eta must be >= 0");
  }
  switch (kind) {
    case FamilyKind::quadratic_pair:
      if (dim < 2) throw ConfigError("quadratic_pair needs dim >= 2");
      break;
    case FamilyKind::regression_mlp:
    case FamilyKind::policy_sft_dpo:
      if (dim < 4) throw ConfigError("feature dim must be >= 4 (four feature blocks)");
      if (n_capability == 0 || n_safety == 0 || n_probe == 0 || n_pretrain == 0) {
        throw ConfigError("family sample counts must be positive");
      }
      if (kind == FamilyKind::regression_mlp && hidden == 0) {
        throw ConfigError("regression_mlp needs hidden >= 1");
      }
      if (kind == FamilyKind::policy_sft_dpo && vocab < 4) {
        throw ConfigError("policy_sft_dpo needs vocab >= 4");
      }
      break;
  }
}

const DifferentiableTask& TaskFamily::safety_task(std::string_view name) const {
  for (const auto& t : safety) {
    if (t.name == name) return t;
  }
  throw ConfigError("family has no safety task named '" + std::string(name) + "'");
}

std::string TaskFamily::fingerprint() const {
  // FNV-1a over the generating spec and theta0 bits.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (double x : theta0) mix(&x, sizeof x);
  for (const auto& t : capability) mix(t.probe.inputs.data().data(), t.probe.inputs.data().size() * sizeof(double));
  const std::string head = std::string(to_string(spec.kind)) + "/seed=" + std::to_string(spec.seed) +
                           "/d=" + std::to_string(theta0.size());
  mix(head.data(), head.size());
  char hex[17];
  for (int i = 15; i >= 0; --i) {
    hex[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  hex[16] = '\0';
  return head + "/" + hex;
}

double line_angle(linalg::VectorView a, linalg::VectorView b) {
  const double denom = linalg::norm(a) * linalg::norm(b);
  if (denom == 0.0) throw PreconditionError("line_angle: zero vector");
  return std::acos(std::min(1.0, std::abs(linalg::dot(a, b)) / denom));
}

namespace {

// cos/sin with the endpoints of [0, pi/2] snapped to exact 0 and 1.
std::pair<double, double> snapped_cos_sin(double alpha) {
  double c = std::cos(alpha);
  double s = std::sin(alpha);
  if (std::abs(c) < 1e-15) c = 0.0;
  if (std::abs(s) < 1e-15) s = 0.0;
  if (c == 0.0) s = 1.0;
  if (s == 0.0) c = 1.0;
  return {c, s};
}

double random_sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

// Four blocks: facet 0, facet 1, safety, shared (shared takes the remainder).
std::vector<FeatureBlock> feature_blocks(std::size_t dim) {
  const std::size_t q = dim / 4;
  return {{"facet_0", 0, q}, {"facet_1", q, 2 * q}, {"safety", 2 * q, 3 * q}, {"shared", 3 * q, dim}};
}

std::vector<double> unit_block_vector(const FeatureBlock& b, std::size_t dim, Rng& rng) {
  std::vector<double> w(dim, 0.0);
  double sq = 0.0;
  for (std::size_t i = b.begin; i < b.end; ++i) {
    w[i] = std::normal_distribution<double>(0.0, 1.0)(rng);
    sq += w[i] * w[i];
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : w) x *= inv;
  return w;
}

// Rows with N(0,1) entries on the listed blocks and zeros elsewhere.
Matrix block_inputs(std::size_t n, std::size_t dim, const std::vector<const FeatureBlock*>& active,
                    Rng& rng) {
  Matrix x(n, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto* b : active) {
      for (std::size_t i = b->begin; i < b->end; ++i) x(r, i) = normal(rng);
    }
  }
  return x;
}

Batch concat_rows(const std::vector<const Batch*>& parts) {
  std::size_t rows = 0;
  for (const auto* p : parts) rows += p->inputs.rows();
  const std::size_t cols = parts.front()->inputs.cols();
  const std::size_t tcols = parts.front()->targets.cols();
  Batch out;
  std::vector<double> x;
  std::vector<double> t;
  x.reserve(rows * cols);
  for (const auto* p : parts) {
    x.insert(x.end(), p->inputs.data().begin(), p->inputs.data().end());
    t.insert(t.end(), p->targets.data().begin(), p->targets.data().end());
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
  }
  out.inputs = Matrix(rows, cols, std::move(x));
  if (tcols > 0) out.targets = Matrix(rows, tcols, std::move(t));
  return out;
}

ParamVector pretrain(const ModelSpec& spec, const LossKind& kind, ParamVector theta,
                     const Batch& data, std::size_t steps, double eta) {
  for (std::size_t s = 0; s < steps; ++s) {
    const auto g = models::gradient(spec, kind, theta, data);
    linalg::axpy(-eta, g, theta);
  }
  return theta;
}

void require_finite_batch(const Batch& b, const std::string& what) {
  if (!linalg::all_finite(b.inputs.data()) || !linalg::all_finite(b.targets.data())) {
    throw NumericError("generated data for " + what + " is not finite");
  }
}

}  // namespace

// ------------------------------------------------------- quadratic pair

namespace {
constexpr double kCapScale = 1.0;
constexpr double kCapResidual = 0.5;
constexpr double kCurvature = 1.0;
constexpr double kSafeScale = 2.0;
constexpr double kSafeResidual = 2.0;
}  // namespace

TaskFamily make_quadratic_pair(std::size_t d, double alpha, std::uint64_t seed) {
  FamilySpec spec;
  spec.kind = FamilyKind::quadratic_pair;
  spec.dim = d;
  spec.alpha = alpha;
  spec.seed = seed;
  spec.pretrain_steps = 0;
  spec.validate();

  Rng rng = make_rng(seed, 1);
  std::vector<std::size_t> axes(d);
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  for (std::size_t i = 0; i < 2; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, d - 1);
    std::swap(axes[i], axes[pick(rng)]);
  }
  const std::size_t p1 = axes[0];
  const std::size_t p2 = axes[1];
  const double sign1 = random_sign(rng);
  const double sign2 = random_sign(rng);
  const auto [c, s] = snapped_cos_sin(alpha);

  TaskFamily fam;
  fam.spec = spec;
  fam.model = ModelSpec{ModelKind::quadratic, {d}, models::Activation::tanh};
  fam.theta0 = random_normal(d, rng);

  // Capability: residual row along +/- e_p1, zero-residual curvature row along e_p2.
  Matrix a1(2, d);
  a1(0, p1) = sign1 * kCapScale;
  a1(1, p2) = sign2 * kCurvature * c;
  Matrix b1(2, 1);
  b1(0, 0) = linalg::dot(a1.row(0), fam.theta0) - kCapResidual;
  b1(1, 0) = linalg::dot(a1.row(1), fam.theta0);

  // Safety: single row along -cos(alpha) e1 + sin(alpha) e2.
  Matrix a2(1, d);
  a2(0, p1) = -c * sign1 * kSafeScale;
  a2(0, p2) = s * sign2 * kSafeScale;
  Matrix b2(1, 1);
  b2(0, 0) = linalg::dot(a2.row(0), fam.theta0) - kSafeResidual;

  const models::LossKind sq{LossTag::squared_error, models::kDefaultBeta};
  DifferentiableTask cap{"cap_0", fam.model, sq, {}, {}, true};
  cap.data.inputs = std::move(a1);
  cap.data.targets = std::move(b1);
  cap.probe = cap.data;

  DifferentiableTask safe{"safety", fam.model, sq, {}, {}, true};
  safe.data.inputs = std::move(a2);
  safe.data.targets = std::move(b2);
  safe.probe = safe.data;

  fam.capability.push_back(std::move(cap));
  fam.safety.push_back(std::move(safe));
  fam.blocks = {{"p1", p1, p1 + 1}, {"p2", p2, p2 + 1}};
  return fam;
}

// ---------------------------------------------------- regression family

TaskFamily make_regression_family(const FamilySpec& spec_in) {
  FamilySpec spec = spec_in;
  spec.kind = FamilyKind::regression_mlp;
  spec.validate();
  const std::size_t dim = spec.dim;
  Rng rng = make_rng(spec.seed, 2);
  const auto blocks = feature_blocks(dim);
  const auto& facet0 = blocks[0];
  const auto& facet1 = blocks[1];
  const auto& safety = blocks[2];
  const auto& shared = blocks[3];

  // Linear teachers; every block weight vector has unit norm.
  auto w_cap = linalg::add(linalg::add(unit_block_vector(facet0, dim, rng),
                                       unit_block_vector(facet1, dim, rng)),
                           unit_block_vector(shared, dim, rng));
  std::vector<double> w_shared(dim, 0.0);
  for (std::size_t i = shared.begin; i < shared.end; ++i) w_shared[i] = w_cap[i];
  // Unit vector on the shared block orthogonal to the capability teacher there.
  auto w_perp = unit_block_vector(shared, dim, rng);
  linalg::axpy(-linalg::dot(w_perp, w_shared), w_shared, w_perp);
  const double perp_norm = linalg::norm(w_perp);
  if (perp_norm > 0.0) w_perp = linalg::scaled(w_perp, 1.0 / perp_norm);

  const auto [c, s] = snapped_cos_sin(spec.alpha);
  auto w_safe = unit_block_vector(safety, dim, rng);
  for (std::size_t i = safety.begin; i < safety.end; ++i) w_safe[i] *= s;
  for (std::size_t i = shared.begin; i < shared.end; ++i) w_safe[i] = c * w_shared[i] + s * w_perp[i];

  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  auto make_batch = [&](std::size_t n, const std::vector<const FeatureBlock*>& active,
                        const std::vector<double>& w) {
    Batch b;
    b.inputs = block_inputs(n, dim, active, rng);
    b.targets = Matrix(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
      b.targets(r, 0) = linalg::dot(b.inputs.row(r), w) + (spec.noise_sigma > 0 ? noise(rng) : 0.0);
    }
    return b;
  };

  TaskFamily fam;
  fam.spec = spec;
  fam.blocks = blocks;
  fam.model = ModelSpec{ModelKind::mlp2, {dim, spec.hidden, 1}, models::Activation::tanh};
  const models::LossKind sq{LossTag::squared_error, models::kDefaultBeta};

  std::vector<Batch> pretrain_parts;
  for (std::size_t f = 0; f < 2; ++f) {
    const std::vector<const FeatureBlock*> active{&blocks[f], &shared};
    DifferentiableTask t{"cap_" + std::to_string(f), fam.model, sq, {}, {}, false};
    pretrain_parts.push_back(make_batch(spec.n_pretrain, active, w_cap));
    t.data = make_batch(spec.n_capability, active, w_cap);
    t.probe = make_batch(spec.n_probe, active, w_cap);
    require_finite_batch(t.data, t.name);
    fam.capability.push_back(std::move(t));
  }
  {
    const std::vector<const FeatureBlock*> active{&safety, &shared};
    DifferentiableTask t{"safety", fam.model, sq, {}, {}, false};
    t.data = make_batch(spec.n_safety, active, w_safe);
    t.probe = make_batch(spec.n_probe, active, w_safe);
    require_finite_batch(t.data, t.name);
    fam.safety.push_back(std::move(t));
  }

  // Student initialization, then a fixed pretraining budget on capability data.
  const std::size_t h = spec.hidden;
  ParamVector theta;
  theta.reserve(fam.model.parameter_count());
  for (auto x : random_normal(h * dim, rng, 1.0 / std::sqrt(static_cast<double>(dim)))) theta.push_back(x);
  theta.insert(theta.end(), h, 0.0);
  for (auto x : random_normal(h, rng, 1.0 / std::sqrt(static_cast<double>(h)))) theta.push_back(x);
  theta.push_back(0.0);

  pretrain_parts.push_back(make_batch(spec.n_pretrain, {&safety, &shared}, w_cap));
  const Batch pre = concat_rows({&pretrain_parts[0], &pretrain_parts[1], &pretrain_parts[2]});
  fam.theta0 = pretrain(fam.model, sq, std::move(theta), pre, spec.pretrain_steps, spec.pretrain_eta);
  fam.pretrain_steps = spec.pretrain_steps;
  return fam;
}

// -------------------------------------------------------- policy family

namespace {

std::size_t argmax_range(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  std::size_t best = begin;
  for (std::size_t k = begin + 1; k < end; ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

std::vector<double> mat_vec(const Matrix& w, linalg::VectorView x) {
  std::vector<double> out(w.rows());
  for (std::size_t k = 0; k < w.rows(); ++k) out[k] = linalg::dot(w.row(k), x);
  return out;
}

constexpr std::size_t kRefusalTokens = 2;  // tokens [0, 2) are refusals

}  // namespace

TaskFamily make_policy_family(const FamilySpec& spec_in) {
  FamilySpec spec = spec_in;
  spec.kind = FamilyKind::policy_sft_dpo;
  spec.validate();
  const std::size_t dim = spec.dim;
  const std::size_t vocab = spec.vocab;
  Rng rng = make_rng(spec.seed, 3);
  const auto blocks = feature_blocks(dim);
  const auto& shared = blocks[3];
  const auto& safety = blocks[2];

  Matrix teacher(vocab, dim, random_normal(vocab * dim, rng, 1.5));
  Matrix refusal(kRefusalTokens, dim, random_normal(kRefusalTokens * dim, rng, 1.5));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  auto answer = [&](linalg::VectorView x, bool noisy) {
    auto logits = mat_vec(teacher, x);
    if (noisy && spec.noise_sigma > 0) {
      for (auto& l : logits) l += noise(rng);
    }
    return argmax_range(logits, kRefusalTokens, vocab);
  };

  auto capability_batch = [&](std::size_t n, const FeatureBlock& facet) {
    Batch b;
    b.inputs = block_inputs(n, dim, {&facet, &shared}, rng);
    b.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) b.labels[r] = answer(b.inputs.row(r), true);
    return b;
  };
  auto sft_batch = [&](std::size_t n) {
    Batch b;
    b.inputs = block_inputs(n, dim, {&safety, &shared}, rng);
    b.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      b.labels[r] = argmax_range(mat_vec(refusal, b.inputs.row(r)), 0, kRefusalTokens);
    }
    return b;
  };
  auto dpo_batch = [&](std::size_t n) {
    Batch b;
    b.inputs = block_inputs(n, dim, {&safety, &shared}, rng);
    b.pairs.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = b.inputs.row(r);
      b.pairs[r] = {r, argmax_range(mat_vec(refusal, x), 0, kRefusalTokens), answer(x, false)};
    }
    return b;
  };

  TaskFamily fam;
  fam.spec = spec;
  fam.blocks = blocks;
  fam.model = ModelSpec{ModelKind::softmax_policy, {dim, vocab}, models::Activation::tanh};
  const models::LossKind nll{LossTag::nll_sft, models::kDefaultBeta};
  const models::LossKind dpo{LossTag::dpo_pairwise, models::kDefaultBeta};

  std::vector<Batch> pretrain_parts;
  for (std::size_t f = 0; f < 2; ++f) {
    DifferentiableTask t{"cap_" + std::to_string(f), fam.model, nll, {}, {}, false};
    pretrain_parts.push_back(capability_batch(spec.n_pretrain, blocks[f]));
    t.data = capability_batch(spec.n_capability, blocks[f]);
    t.probe = capability_batch(spec.n_probe, blocks[f]);
    require_finite_batch(t.data, t.name);
    fam.capability.push_back(std::move(t));
  }
  {
    DifferentiableTask t{"sft", fam.model, nll, {}, {}, false};
    t.data = sft_batch(spec.n_safety);
    t.probe = sft_batch(spec.n_probe);
    fam.safety.push_back(std::move(t));
  }
  {
    DifferentiableTask t{"dpo", fam.model, dpo, {}, {}, false};
    t.data = dpo_batch(spec.n_safety);
    t.probe = dpo_batch(spec.n_probe);
    fam.safety.push_back(std::move(t));
  }

  const Batch pre = concat_rows({&pretrain_parts[0], &pretrain_parts[1]});
  fam.theta0 = pretrain(fam.model, nll, ParamVector(fam.model.parameter_count(), 0.0), pre,
                        spec.pretrain_steps, spec.pretrain_eta);
  fam.pretrain_steps = spec.pretrain_steps;
  return fam;
}

TaskFamily make_family(const FamilySpec& spec) {
  switch (spec.kind) {
    case FamilyKind::quadratic_pair: return make_quadratic_pair(spec.dim, spec.alpha, spec.seed);
    case FamilyKind::regression_mlp: return make_regression_family(spec);
    case FamilyKind::policy_sft_dpo: return make_policy_family(spec);
  }
  throw ConfigError("unknown family kind");
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::quadratic_pair: return "quadratic_pair";
    case FamilyKind::regression_mlp: return "regression_mlp";
    case FamilyKind::policy_sft_dpo: return "policy_sft_dpo";
  }
  return "?";
}

FamilyKind parse_family_kind(std::string_view text) {
  for (auto k : {FamilyKind::quadratic_pair, FamilyKind::regression_mlp, FamilyKind::policy_sft_dpo}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown family kind '" + std::string(text) + "'");
}

// ------------------------------------------------------------ dataset file

namespace {

constexpr std::string_view kDatasetMagic = "ogpsa-dataset 1";

std::string join_doubles(linalg::VectorView v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> out;
  if (io::trim(text).empty()) return out;
  for (auto part : io::split(text, ',')) out.push_back(io::parse_double(part));
  return out;
}

void write_split(std::ostream& out, const std::string& task, const char* split, const Batch& b) {
  out << "[split " << task << ' ' << split << "]\n";
  out << "rows = " << b.inputs.rows() << '\n';
  out << "input_cols = " << b.inputs.cols() << '\n';
  out << "target_cols = " << b.targets.cols() << '\n';
  out << "labels = " << (b.labels.empty() ? 0 : 1) << '\n';
  out << "pairs = " << b.pairs.size() << '\n';
  for (std::size_t r = 0; r < b.inputs.rows(); ++r) {
    out << join_doubles(b.inputs.row(r));
    if (b.targets.cols() > 0) out << ',' << join_doubles(b.targets.row(r));
    if (!b.labels.empty()) out << ',' << b.labels[r];
    out << '\n';
  }
  for (const auto& p : b.pairs) out << p.context << ',' << p.preferred << ',' << p.rejected << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw ConfigError("dataset: unexpected end of file after line " + std::to_string(line_no_));
    ++line_no_;
    return line;
  }

  std::pair<std::string, std::string> key_value() {
    const std::string line = next();
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    return {std::string(io::trim(std::string_view(line).substr(0, eq))),
            std::string(io::trim(std::string_view(line).substr(eq + 1)))};
  }

  std::string expect(std::string_view key) {
    auto [k, v] = key_value();
    if (k != key) fail("expected key '" + std::string(key) + "', found '" + k + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("dataset line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

Batch read_split(LineReader& r, const std::string& task, const char* split) {
  const std::string header = r.next();
  if (header != "[split " + task + " " + split + "]") r.fail("expected split header for " + task);
  const auto rows = io::parse_unsigned(r.expect("rows"));
  const auto in_cols = io::parse_unsigned(r.expect("input_cols"));
  const auto t_cols = io::parse_unsigned(r.expect("target_cols"));
  const bool has_labels = io::parse_unsigned(r.expect("labels")) != 0;
  const auto n_pairs = io::parse_unsigned(r.expect("pairs"));
  Batch b;
  std::vector<double> x;
  std::vector<double> t;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto values = parse_doubles(r.next());
    const std::size_t want = in_cols + t_cols + (has_labels ? 1 : 0);
    if (values.size() != want) r.fail("row has " + std::to_string(values.size()) + " values, expected " + std::to_string(want));
    x.insert(x.end(), values.begin(), values.begin() + static_cast<std::ptrdiff_t>(in_cols));
    t.insert(t.end(), values.begin() + static_cast<std::ptrdiff_t>(in_cols),
             values.begin() + static_cast<std::ptrdiff_t>(in_cols + t_cols));
    if (has_labels) b.labels.push_back(static_cast<std::size_t>(values.back()));
  }
  b.inputs = Matrix(rows, in_cols, std::move(x));
  if (t_cols > 0) b.targets = Matrix(rows, t_cols, std::move(t));
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto parts = io::split(r.next(), ',');
    if (parts.size() != 3) r.fail("pair rows need three indices");
    b.pairs.push_back({io::parse_unsigned(parts[0]), io::parse_unsigned(parts[1]), io::parse_unsigned(parts[2])});
  }
  return b;
}

}  // namespace

void write_family(std::ostream& out, const TaskFamily& fam) {
  const auto& s = fam.spec;
  out << kDatasetMagic << '\n';
  out << "family.kind = " << to_string(s.kind) << '\n';
  out << "family.dim = " << s.dim << '\n';
  out << "family.hidden = " << s.hidden << '\n';
  out << "family.vocab = " << s.vocab << '\n';
  out << "family.alpha = " << io::format_double(s.alpha) << '\n';
  out << "family.noise_sigma = " << io::format_double(s.noise_sigma) << '\n';
  out << "family.n_capability = " << s.n_capability << '\n';
  out << "family.n_safety = " << s.n_safety << '\n';
  out << "family.n_probe = " << s.n_probe << '\n';
  out << "family.n_pretrain = " << s.n_pretrain << '\n';
  out << "family.pretrain_steps = " << s.pretrain_steps << '\n';
  out << "family.pretrain_eta = " << io::format_double(s.pretrain_eta) << '\n';
  out << "family.seed = " << s.seed << '\n';
  out << "model.kind = " << models::to_string(fam.model.kind) << '\n';
  out << "model.dims = ";
  for (std::size_t i = 0; i < fam.model.dims.size(); ++i) out << (i ? "," : "") << fam.model.dims[i];
  out << '\n';
  out << "model.activation = " << models::to_string(fam.model.activation) << '\n';
  out << "pretrain_steps = " << fam.pretrain_steps << '\n';
  out << "blocks = ";
  for (std::size_t i = 0; i < fam.blocks.size(); ++i) {
    out << (i ? "," : "") << fam.blocks[i].name << ':' << fam.blocks[i].begin << ':' << fam.blocks[i].end;
  }
  out << '\n';
  out << "theta0 = " << join_doubles(fam.theta0) << '\n';
  out << "tasks = " << fam.capability.size() + fam.safety.size() << '\n';
  auto write_task = [&out](const DifferentiableTask& t, const char* role) {
    out << "[task " << t.name << "]\n";
    out << "role = " << role << '\n';
    out << "loss = " << models::to_string(t.kind.tag) << '\n';
    out << "beta = " << io::format_double(t.kind.beta) << '\n';
    out << "full_batch = " << (t.full_batch ? 1 : 0) << '\n';
    write_split(out, t.name, "data", t.data);
    write_split(out, t.name, "probe", t.probe);
  };
  for (const auto& t : fam.capability) write_task(t, "capability");
  for (const auto& t : fam.safety) write_task(t, "safety");
}

TaskFamily read_family(std::istream& in) {
  LineReader r(in);
  if (r.next() != kDatasetMagic) r.fail("not an ogpsa dataset (bad magic line)");
  TaskFamily fam;
  auto& s = fam.spec;
  s.kind = parse_family_kind(r.expect("family.kind"));
  s.dim = io::parse_unsigned(r.expect("family.dim"));
  s.hidden = io::parse_unsigned(r.expect("family.hidden"));
  s.vocab = io::parse_unsigned(r.expect("family.vocab"));
  s.alpha = io::parse_double(r.expect("family.alpha"));
  s.noise_sigma = io::parse_double(r.expect("family.noise_sigma"));
  s.n_capability = io::parse_unsigned(r.expect("family.n_capability"));
  s.n_safety = io::parse_unsigned(r.expect("family.n_safety"));
  s.n_probe = io::parse_unsigned(r.expect("family.n_probe"));
  s.n_pretrain = io::parse_unsigned(r.expect("family.n_pretrain"));
  s.pretrain_steps = io::parse_unsigned(r.expect("family.pretrain_steps"));
  s.pretrain_eta = io::parse_double(r.expect("family.pretrain_eta"));
  s.seed = io::parse_unsigned(r.expect("family.seed"));
  fam.model.kind = models::parse_model_kind(r.expect("model.kind"));
  for (auto part : io::split(r.expect("model.dims"), ',')) fam.model.dims.push_back(io::parse_unsigned(part));
  fam.model.activation = models::parse_activation(r.expect("model.activation"));
  fam.model.validate();
  fam.pretrain_steps = io::parse_unsigned(r.expect("pretrain_steps"));
  const std::string blocks = r.expect("blocks");
  if (!blocks.empty()) {
    for (auto part : io::split(blocks, ',')) {
      const auto f = io::split(part, ':');
      if (f.size() != 3) r.fail("malformed block '" + std::string(part) + "'");
      fam.blocks.push_back({std::string(f[0]), io::parse_unsigned(f[1]), io::parse_unsigned(f[2])});
    }
  }
  fam.theta0 = parse_doubles(r.expect("theta0"));
  if (fam.theta0.size() != fam.model.parameter_count()) r.fail("theta0 length does not match the model");
  const auto n_tasks = io::parse_unsigned(r.expect("tasks"));
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const std::string header = r.next();
    if (header.rfind("[task ", 0) != 0 || header.back() != ']') r.fail("expected [task NAME]");
    DifferentiableTask t;
    t.name = header.substr(6, header.size() - 7);
    t.spec = fam.model;
    const std::string role = r.expect("role");
    t.kind.tag = models::parse_loss_tag(r.expect("loss"));
    t.kind.beta = io::parse_double(r.expect("beta"));
    t.full_batch = io::parse_unsigned(r.expect("full_batch")) != 0;
    t.data = read_split(r, t.name, "data");
    t.probe = read_split(r, t.name, "probe");
    if (role == "capability") {
      fam.capability.push_back(std::move(t));
    } else if (role == "safety") {
      fam.safety.push_back(std::move(t));
    } else {
      r.fail("unknown role '" + role + "'");
    }
  }
  return fam;
}

}  // namespace ogpsa::tasks

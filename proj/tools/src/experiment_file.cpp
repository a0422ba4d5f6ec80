#include "ogpsa_tools/experiment_file.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ogpsa/io.hpp"

namespace ogpsa::tools {

using io::format_double;

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column,
                       const std::string& message)
    : ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct Cursor {
  const std::string& source;
  std::size_t line = 0;
  std::size_t key_col = 1;
  std::size_t value_col = 1;

  [[noreturn]] void fail_key(const std::string& msg) const { throw ParseError(source, line, key_col, msg); }
  [[noreturn]] void fail_value(const std::string& msg) const {
    throw ParseError(source, line, value_col, msg);
  }
};

std::string strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return std::string(hash == std::string_view::npos ? line : line.substr(0, hash));
}

std::size_t column_of(std::string_view line, std::string_view part) {
  return static_cast<std::size_t>(part.data() - line.data()) + 1;
}

using Setter = std::function<void(std::string_view)>;

std::size_t as_size(std::string_view v) { return static_cast<std::size_t>(io::parse_unsigned(v)); }

std::map<std::string, Setter, std::less<>> family_keys(tasks::FamilySpec& f) {
  return {
      {"kind", [&f](std::string_view v) { f.kind = tasks::parse_family_kind(v); }},
      {"dim", [&f](std::string_view v) { f.dim = as_size(v); }},
      {"hidden", [&f](std::string_view v) { f.hidden = as_size(v); }},
      {"vocab", [&f](std::string_view v) { f.vocab = as_size(v); }},
      {"alpha", [&f](std::string_view v) { f.alpha = io::parse_double(v); }},
      {"noise_sigma", [&f](std::string_view v) { f.noise_sigma = io::parse_double(v); }},
      {"n_capability", [&f](std::string_view v) { f.n_capability = as_size(v); }},
      {"n_safety", [&f](std::string_view v) { f.n_safety = as_size(v); }},
      {"n_probe", [&f](std::string_view v) { f.n_probe = as_size(v); }},
      {"n_pretrain", [&f](std::string_view v) { f.n_pretrain = as_size(v); }},
      {"pretrain_steps", [&f](std::string_view v) { f.pretrain_steps = as_size(v); }},
      {"pretrain_eta", [&f](std::string_view v) { f.pretrain_eta = io::parse_double(v); }},
      {"seed", [&f](std::string_view v) { f.seed = io::parse_unsigned(v); }},
  };
}

std::optional<std::vector<std::size_t>> parse_ref_tasks(std::string_view v) {
  if (v == "all") return std::nullopt;
  std::vector<std::size_t> out;
  if (v == "none") return out;
  for (auto part : io::split(v, ',')) out.push_back(as_size(part));
  return out;
}

std::map<std::string, Setter, std::less<>> train_keys(optimizer::TrainConfig& t) {
  return {
      {"method", [&t](std::string_view v) { t.method = optimizer::parse_method(v); }},
      {"eta", [&t](std::string_view v) { t.eta = io::parse_double(v); }},
      {"K", [&t](std::string_view v) { t.refresh = subspace::RefreshPeriod::parse(v); }},
      {"ref_tasks", [&t](std::string_view v) { t.ref_tasks = parse_ref_tasks(v); }},
      {"delta",
       [&t](std::string_view v) {
         if (v == "auto") {
           t.delta.reset();
         } else {
           t.delta = io::parse_double(v);
         }
       }},
      {"epsilon", [&t](std::string_view v) { t.epsilon = io::parse_double(v); }},
      {"safety_batch", [&t](std::string_view v) { t.safety_batch = as_size(v); }},
      {"ref_batch", [&t](std::string_view v) { t.ref_batch = as_size(v); }},
      {"ref_size", [&t](std::string_view v) { t.ref_size = as_size(v); }},
      {"replay_lambda", [&t](std::string_view v) { t.replay_lambda = io::parse_double(v); }},
      {"seed", [&t](std::string_view v) { t.seed = io::parse_unsigned(v); }},
  };
}

std::map<std::string, Setter, std::less<>> stage_keys(optimizer::StageConfig& s) {
  return {
      {"loss", [&s](std::string_view v) { s.loss = models::parse_loss_tag(v); }},
      {"steps", [&s](std::string_view v) { s.steps = as_size(v); }},
      {"K", [&s](std::string_view v) { s.refresh = subspace::RefreshPeriod::parse(v); }},
  };
}

}  // namespace

ExperimentFile parse_experiment(std::string_view text, const std::string& source) {
  ExperimentFile file;
  file.train.stages.clear();
  Cursor cur{source};

  enum class Section { top, family, train, stage, output };
  Section section = Section::top;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  bool have_version = false;
  bool have_stage_steps = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++cur.line;
    const std::string body = strip_comment(raw);
    const std::string_view line = body;
    const std::string_view content = io::trim(line);
    if (content.empty()) continue;

    if (content.front() == '[') {
      cur.key_col = column_of(line, content);
      if (content.back() != ']') cur.fail_key("section header must end with ']'");
      if (section == Section::stage && !have_stage_steps) {
        cur.fail_key("previous [stage " + file.train.stages.back().task + "] has no 'steps'");
      }
      if (!have_version) cur.fail_key("'version' must come before the first section");
      const std::string_view name = io::trim(content.substr(1, content.size() - 2));
      const std::string key(name);
      if (name == "family") {
        section = Section::family;
      } else if (name == "train") {
        section = Section::train;
      } else if (name == "output") {
        section = Section::output;
      } else if (name.substr(0, 6) == "stage " && !io::trim(name.substr(6)).empty()) {
        section = Section::stage;
        file.train.stages.push_back({std::string(io::trim(name.substr(6))), {}, 0, std::nullopt});
        have_stage_steps = false;
      } else {
        cur.fail_key("unknown section [" + key + "]");
      }
      if (!seen_sections.insert(section == Section::stage ? "stage " + file.train.stages.back().task : key)
               .second) {
        cur.fail_key("duplicate section [" + key + "]");
      }
      seen_keys.clear();
      continue;
    }

    const auto eq = line.find('=');
    cur.key_col = column_of(line, content);
    if (eq == std::string_view::npos) cur.fail_key("expected 'key = value'");
    const std::string_view key = io::trim(line.substr(0, eq));
    const std::string_view value = io::trim(line.substr(eq + 1));
    if (key.empty()) cur.fail_key("missing key before '='");
    cur.value_col = value.empty() ? eq + 2 : column_of(line, value);
    if (value.empty()) cur.fail_value("missing value for '" + std::string(key) + "'");
    if (!seen_keys.insert(std::string(key)).second) cur.fail_key("duplicate key '" + std::string(key) + "'");

    std::map<std::string, Setter, std::less<>> setters;
    switch (section) {
      case Section::top:
        if (key != "version") cur.fail_key("unknown key '" + std::string(key) + "' before the first section");
        try {
          if (io::parse_unsigned(value) != kExperimentFileVersion) {
            cur.fail_value("unsupported version '" + std::string(value) + "' (expected " +
                           std::to_string(kExperimentFileVersion) + ")");
          }
        } catch (const ParseError&) {
          throw;
        } catch (const Error& e) {
          cur.fail_value(e.what());
        }
        have_version = true;
        continue;
      case Section::family: setters = family_keys(file.family); break;
      case Section::train: setters = train_keys(file.train); break;
      case Section::stage:
        setters = stage_keys(file.train.stages.back());
        if (key == "steps") have_stage_steps = true;
        break;
      case Section::output:
        if (key != "dir") cur.fail_key("unknown key '" + std::string(key) + "' in [output]");
        file.output_dir = std::string(value);
        continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) cur.fail_key("unknown key '" + std::string(key) + "'");
    try {
      it->second(value);
    } catch (const Error& e) {
      cur.fail_value(e.what());
    }
  }

  cur.key_col = 1;
  if (!have_version) cur.fail_key("missing 'version' line");
  if (section == Section::stage && !have_stage_steps) {
    cur.fail_key("[stage " + file.train.stages.back().task + "] has no 'steps'");
  }
  if (file.train.stages.empty()) cur.fail_key("at least one [stage NAME] section is required");
  try {
    file.family.validate();
    file.train.validate();
  } catch (const Error& e) {
    cur.fail_key(e.what());
  }
  return file;
}

ExperimentFile load_experiment(const std::string& path) {
  return parse_experiment(io::read_file(path), path);
}

std::string to_text(const ExperimentFile& file) {
  const auto& f = file.family;
  const auto& t = file.train;
  std::ostringstream out;
  out << "version = " << kExperimentFileVersion << "\n\n";
  out << "[family]\n"
      << "kind = " << tasks::to_string(f.kind) << '\n'
      << "dim = " << f.dim << '\n'
      << "hidden = " << f.hidden << '\n'
      << "vocab = " << f.vocab << '\n'
      << "alpha = " << format_double(f.alpha) << '\n'
      << "noise_sigma = " << format_double(f.noise_sigma) << '\n'
      << "n_capability = " << f.n_capability << '\n'
      << "n_safety = " << f.n_safety << '\n'
      << "n_probe = " << f.n_probe << '\n'
      << "n_pretrain = " << f.n_pretrain << '\n'
      << "pretrain_steps = " << f.pretrain_steps << '\n'
      << "pretrain_eta = " << format_double(f.pretrain_eta) << '\n'
      << "seed = " << f.seed << "\n\n";

  out << "[train]\n"
      << "method = " << optimizer::to_string(t.method) << '\n'
      << "eta = " << format_double(t.eta) << '\n'
      << "K = " << t.refresh.to_string() << '\n'
      << "ref_tasks = ";
  if (!t.ref_tasks) {
    out << "all";
  } else if (t.ref_tasks->empty()) {
    out << "none";
  } else {
    for (std::size_t i = 0; i < t.ref_tasks->size(); ++i) out << (i ? "," : "") << (*t.ref_tasks)[i];
  }
  out << '\n'
      << "delta = " << (t.delta ? format_double(*t.delta) : std::string("auto")) << '\n'
      << "epsilon = " << format_double(t.epsilon) << '\n'
      << "safety_batch = " << t.safety_batch << '\n'
      << "ref_batch = " << t.ref_batch << '\n'
      << "ref_size = " << t.ref_size << '\n'
      << "replay_lambda = " << format_double(t.replay_lambda) << '\n'
      << "seed = " << t.seed << '\n';

  for (const auto& s : t.stages) {
    out << "\n[stage " << s.task << "]\n"
        << "loss = " << models::to_string(s.loss) << '\n'
        << "steps = " << s.steps << '\n';
    if (s.refresh) out << "K = " << s.refresh->to_string() << '\n';
  }
  out << "\n[output]\ndir = " << file.output_dir << '\n';
  return out.str();
}

}  // namespace ogpsa::tools

#include "ogpsa_tools/commands.hpp"

#include <cctype>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"
#include "ogpsa/metrics.hpp"
#include "ogpsa/sweep.hpp"
#include "ogpsa/verify.hpp"
#include "ogpsa_tools/experiment_file.hpp"
#include "ogpsa_tools/svg.hpp"

namespace ogpsa::tools {

namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric failure";
    if (e.step()) err << " at step " << *e.step();
    err << ": " << e.what() << '\n';
    return kNumericFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

ExperimentFile resolve(const CommonOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config is required");
  ExperimentFile file = load_experiment(opts.config_path);
  if (opts.seed) {
    file.family.seed = *opts.seed;
    file.train.seed = *opts.seed;
  }
  if (opts.out_dir) file.output_dir = *opts.out_dir;
  return file;
}

std::string records_chart(const optimizer::TrainResult& r, const tasks::TaskFamily& family) {
  std::vector<svg::Series> series(1 + family.capability.size());
  series[0].name = "safety loss";
  for (std::size_t i = 0; i < family.capability.size(); ++i) series[i + 1].name = family.capability[i].name + " loss";
  for (const auto& rec : r.records) {
    for (auto& s : series) s.x.push_back(static_cast<double>(rec.step));
    series[0].y.push_back(rec.safety_loss);
    for (std::size_t i = 0; i < rec.ref_losses.size(); ++i) series[i + 1].y.push_back(rec.ref_losses[i]);
  }
  return svg::line_chart(std::string(optimizer::to_string(r.config.method)) + " on " +
                             std::string(tasks::to_string(family.spec.kind)),
                         "step", "probe loss", series);
}

void write_run(const fs::path& dir, const ExperimentFile& file, const optimizer::TrainResult& r,
               const tasks::TaskFamily& family) {
  fs::create_directories(dir);
  io::atomic_write(dir / "records.csv", metrics::records_csv(r));
  io::atomic_write(dir / "tax.csv", metrics::tax_csv(metrics::alignment_tax(r, family)));
  io::atomic_write(dir / "subspace.csv", metrics::subspace_csv(r));
  io::atomic_write(dir / "config.resolved", to_text(file));
  io::atomic_write(dir / "chart.svg", records_chart(r, family));
}

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

}  // namespace

int cmd_run(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentFile file = resolve(opts);
    const auto family = tasks::make_family(file.family);
    const auto result = optimizer::train(file.train, family);
    const fs::path dir = file.output_dir;
    write_run(dir, file, result, family);
    const auto tax = metrics::alignment_tax(result, family);
    out << "method " << optimizer::to_string(file.train.method) << ", " << result.records.size() << " steps, "
        << result.subspace_history.size() << " subspace builds\n";
    for (const auto& t : tax.tasks) out << "  delta_tax " << t.task << " = " << io::format_double(t.delta_tax) << '\n';
    out << "  safety_gain = " << io::format_double(tax.safety_gain) << '\n';
    out << "wrote " << dir.string() << "/{records.csv,tax.csv,subspace.csv,config.resolved,chart.svg}\n";
    return kOk;
  });
}

int cmd_verify(std::optional<std::uint64_t> seed, bool inject_skip_projection, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    verify::VerifyOptions opts;
    opts.seed = seed.value_or(0);
    opts.inject_skip_projection = inject_skip_projection;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = verify::run_all(opts);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<const verify::CheckResult*> failed;
    for (const auto& r : results) {
      out << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << " (" << std::fixed
          << std::setprecision(2) << r.seconds << " s): " << std::defaultfloat << r.detail << '\n';
      if (!r.pass) failed.push_back(&r);
    }
    out << results.size() - failed.size() << "/" << results.size() << " checks passed in " << std::fixed
        << std::setprecision(1) << total << " s" << std::defaultfloat << '\n';
    if (failed.empty()) return kOk;
    err << "failed checks:";
    for (const auto* r : failed) err << ' ' << r->id << " (" << r->name << ")";
    err << '\n';
    return kVerifyFailed;
  });
}

int cmd_sweep(const CommonOptions& opts, const std::string& axis_text, const std::vector<std::string>& values,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentFile file = resolve(opts);
    const auto axis = sweep::parse_axis(axis_text);
    const auto family = tasks::make_family(file.family);
    const auto legs = sweep::expand(file.train, axis, values, family.capability.size());
    const fs::path dir = file.output_dir;
    fs::create_directories(dir);

    std::vector<optimizer::TrainResult> results;
    std::vector<std::string> labels;
    std::vector<std::string> leg_values;
    std::string manifest;
    int status = kOk;
    for (const auto& leg : legs) {
      ExperimentFile leg_file = file;
      leg_file.train = leg.config;
      const int code = guarded(err, [&] {
        auto r = optimizer::train(leg.config, family);
        r.label = leg.label;
        write_run(dir / sanitize(leg.label), leg_file, r, family);
        results.push_back(std::move(r));
        labels.push_back(leg.label);
        leg_values.push_back(leg.value);
        return kOk;
      });
      if (code != kOk) {
        manifest += leg.label + "\texit " + std::to_string(code) + '\n';
        if (status == kOk) status = code;
      }
      out << "  " << leg.label << (code == kOk ? " ok" : " FAILED") << '\n';
    }
    if (!manifest.empty()) io::atomic_write(dir / "failures.txt", manifest);

    // Rows keep leg order rather than summarize()'s method sort.
    std::ostringstream csv;
    std::vector<double> tax_series, gain_series;
    csv << "axis,value,label,safety_gain";
    for (const auto& cap : family.capability) csv << ",delta_tax_" << cap.name;
    csv << ",total_delta_tax,mean_removed_fraction,mean_rank\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto table = metrics::summarize(std::span(&results[i], 1), family);
      const auto& row = table.rows.front();
      csv << sweep::to_string(axis) << ',' << leg_values[i] << ',' << labels[i] << ','
          << io::format_double(row.safety_gain);
      for (double d : row.delta_tax) csv << ',' << io::format_double(d);
      csv << ',' << io::format_double(row.total_tax) << ',' << io::format_double(row.mean_removed_fraction) << ','
          << io::format_double(row.mean_rank) << '\n';
      tax_series.push_back(row.total_tax);
      gain_series.push_back(row.safety_gain);
    }
    io::atomic_write(dir / "sweep.csv", csv.str());
    io::atomic_write(dir / "sweep.svg",
                     svg::category_chart("sweep over " + std::string(sweep::to_string(axis)), labels, "value",
                                         {{"total delta_tax", {}, tax_series}, {"safety_gain", {}, gain_series}}));
    out << "wrote " << (dir / "sweep.csv").string() << " (" << results.size() << " of " << legs.size()
        << " legs)\n";
    return status;
  });
}

int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentFile file = resolve(opts);
    const auto family = tasks::make_family(file.family);
    const fs::path dir = file.output_dir;
    fs::create_directories(dir);
    std::vector<optimizer::TrainResult> results;
    for (auto method : {optimizer::Method::naive, optimizer::Method::replay, optimizer::Method::ogpsa}) {
      ExperimentFile leg = file;
      leg.train.method = method;
      auto r = optimizer::train(leg.train, family);
      write_run(dir / std::string(optimizer::to_string(method)), leg, r, family);
      results.push_back(std::move(r));
    }
    const auto table = metrics::summarize(results, family);
    io::atomic_write(dir / "summary.csv", metrics::summary_csv(table));
    std::vector<svg::Point> points;
    for (const auto& row : table.rows) points.push_back({row.method, row.total_tax, row.safety_gain});
    io::atomic_write(dir / "compare.svg",
                     svg::scatter_chart("safety gain vs alignment tax", "total delta_tax", "safety_gain", points));
    out << std::left << std::setw(8) << "method" << std::setw(24) << "safety_gain" << std::setw(24)
        << "total_tax" << "mean_removed\n";
    for (const auto& row : table.rows) {
      out << std::setw(8) << row.method << std::setw(24) << io::format_double(row.safety_gain) << std::setw(24)
          << io::format_double(row.total_tax) << io::format_double(row.mean_removed_fraction) << '\n';
    }
    out << "wrote " << (dir / "summary.csv").string() << " and compare.svg\n";
    return kOk;
  });
}

}  // namespace ogpsa::tools

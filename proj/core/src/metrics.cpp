#include "ogpsa/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "ogpsa/errors.hpp"
#include "ogpsa/io.hpp"

namespace ogpsa::metrics {

using io::format_double;

double TaxReport::total_tax() const {
  double total = 0.0;
  for (const auto& t : tasks) total += t.delta_tax;
  return total;
}

TaxReport alignment_tax(const optimizer::TrainResult& result, const tasks::TaskFamily& family) {
  if (result.stage_start_params.size() != result.config.stages.size() ||
      result.stage_start_params.empty()) {
    throw ConfigError("alignment_tax: result does not carry its stage boundaries");
  }
  const auto& theta0 = result.stage_start_params.front();
  const auto& theta_t = result.theta_final;

  TaxReport report;
  for (const auto& cap : family.capability) {
    if (cap.probe.size() == 0) throw ConfigError("alignment_tax: task '" + cap.name + "' has no probe data");
    TaskTax t;
    t.task = cap.name;
    t.phi_pre = -cap.probe_loss(theta0);
    t.phi_post = -cap.probe_loss(theta_t);
    t.delta_tax = t.phi_pre - t.phi_post;
    report.tasks.push_back(t);
  }
  for (std::size_t s = 0; s < result.config.stages.size(); ++s) {
    const auto& stage = result.config.stages[s];
    const auto& start = result.stage_start_params[s];
    const auto& end = s + 1 < result.stage_start_params.size() ? result.stage_start_params[s + 1] : theta_t;
    const auto task = optimizer::stage_task(family, stage, start);
    if (task.probe.size() == 0) throw ConfigError("alignment_tax: task '" + task.name + "' has no probe data");
    StageSafety st;
    st.stage = stage.task;
    st.loss_start = task.probe_loss(start);
    st.loss_end = task.probe_loss(end);
    st.gain = st.loss_start - st.loss_end;
    report.safety_gain += st.gain;
    report.stages.push_back(st);
  }
  return report;
}

ComparisonTable summarize(std::span<const optimizer::TrainResult> results,
                          const tasks::TaskFamily& family) {
  ComparisonTable table;
  for (const auto& cap : family.capability) table.task_names.push_back(cap.name);
  const auto fingerprint = family.fingerprint();
  for (const auto& r : results) {
    if (r.family_fingerprint != fingerprint) {
      throw ConfigError("summarize: result '" + r.label + "' comes from a different family");
    }
    const auto report = alignment_tax(r, family);
    SummaryRow row;
    row.label = r.label;
    row.method = std::string(optimizer::to_string(r.config.method));
    row.safety_gain = report.safety_gain;
    for (const auto& t : report.tasks) row.delta_tax.push_back(t.delta_tax);
    row.total_tax = report.total_tax();
    double removed = 0.0;
    double rank = 0.0;
    for (const auto& rec : r.records) {
      removed += rec.removed_fraction;
      rank += static_cast<double>(rec.rank);
    }
    if (!r.records.empty()) {
      removed /= static_cast<double>(r.records.size());
      rank /= static_cast<double>(r.records.size());
    }
    row.mean_removed_fraction = removed;
    row.mean_rank = rank;
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return a.method != b.method ? a.method < b.method : a.label < b.label;
  });
  return table;
}

std::string records_csv(const optimizer::TrainResult& result) {
  std::ostringstream out;
  const std::size_t n_ref = result.records.empty() ? 0 : result.records.front().ref_losses.size();
  out << "step,stage,safety_loss";
  for (std::size_t i = 0; i < n_ref; ++i) out << ",ref_loss_" << i;
  out << ",g_norm,g_tilde_norm,removed_fraction,rank,age\n";
  for (const auto& r : result.records) {
    out << r.step << ',' << r.stage << ',' << format_double(r.safety_loss);
    for (double l : r.ref_losses) out << ',' << format_double(l);
    out << ',' << format_double(r.g_norm) << ',' << format_double(r.g_tilde_norm) << ','
        << format_double(r.removed_fraction) << ',' << r.rank << ',' << r.age << '\n';
  }
  return out.str();
}

std::string tax_csv(const TaxReport& report) {
  std::ostringstream out;
  out << "section,name,start,end,delta\n";
  for (const auto& t : report.tasks) {
    out << "capability," << t.task << ',' << format_double(t.phi_pre) << ','
        << format_double(t.phi_post) << ',' << format_double(t.delta_tax) << '\n';
  }
  for (const auto& s : report.stages) {
    out << "safety," << s.stage << ',' << format_double(s.loss_start) << ','
        << format_double(s.loss_end) << ',' << format_double(s.gain) << '\n';
  }
  out << "total,delta_tax,,," << format_double(report.total_tax()) << '\n';
  out << "total,safety_gain,,," << format_double(report.safety_gain) << '\n';
  return out.str();
}

std::string summary_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "label,method,safety_gain";
  for (const auto& name : table.task_names) out << ",delta_tax_" << name;
  out << ",total_delta_tax,mean_removed_fraction,mean_rank\n";
  for (const auto& row : table.rows) {
    out << row.label << ',' << row.method << ',' << format_double(row.safety_gain);
    for (double d : row.delta_tax) out << ',' << format_double(d);
    out << ',' << format_double(row.total_tax) << ',' << format_double(row.mean_removed_fraction)
        << ',' << format_double(row.mean_rank) << '\n';
  }
  return out.str();
}

std::string subspace_csv(const optimizer::TrainResult& result) {
  std::ostringstream out;
  out << "tau,rank,candidates\n";
  for (const auto& e : result.subspace_history) out << e.tau << ',' << e.rank << ',' << e.candidates << '\n';
  return out.str();
}

}  // namespace ogpsa::metrics

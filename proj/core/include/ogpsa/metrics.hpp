#pragma once

// Alignment-tax accounting and comparison tables.
//
// Capability is scored as Phi := -(reference probe loss), so the tax
// Phi(theta_0) - Phi(theta_T) is positive exactly when the probe loss rose.

#include <span>
#include <string>
#include <vector>

#include "ogpsa/optimizer.hpp"

namespace ogpsa::metrics {

struct TaskTax {
  std::string task;
  double phi_pre = 0.0;
  double phi_post = 0.0;
  double delta_tax = 0.0;
};

struct StageSafety {
  std::string stage;
  double loss_start = 0.0;
  double loss_end = 0.0;
  double gain = 0.0;
};

struct TaxReport {
  std::vector<TaskTax> tasks;
  std::vector<StageSafety> stages;
  double safety_gain = 0.0;  // sum of stage gains

  double total_tax() const;
};

/// Evaluates every capability probe at theta_0 and theta_T, and every stage's
/// safety probe at the stage's first and last parameters. ConfigError when a
/// task has no probe data.
TaxReport alignment_tax(const optimizer::TrainResult& result, const tasks::TaskFamily& family);

struct SummaryRow {
  std::string label;
  std::string method;
  double safety_gain = 0.0;
  std::vector<double> delta_tax;  // per capability task
  double total_tax = 0.0;
  double mean_removed_fraction = 0.0;
  double mean_rank = 0.0;
};

struct ComparisonTable {
  std::vector<std::string> task_names;
  std::vector<SummaryRow> rows;  // sorted by (method, label)
};

/// One row per result. Every result must come from `family`
/// (fingerprint match), otherwise ConfigError.
ComparisonTable summarize(std::span<const optimizer::TrainResult> results,
                          const tasks::TaskFamily& family);

/// step,stage,safety_loss,ref_loss_0,...,g_norm,g_tilde_norm,removed_fraction,rank,age
std::string records_csv(const optimizer::TrainResult& result);
/// section,name,start,end,delta
std::string tax_csv(const TaxReport& report);
/// label,method,safety_gain,delta_tax_<task>...,total_delta_tax,mean_removed_fraction,mean_rank
std::string summary_csv(const ComparisonTable& table);
/// tau,rank,candidates
std::string subspace_csv(const optimizer::TrainResult& result);

}  // namespace ogpsa::metrics

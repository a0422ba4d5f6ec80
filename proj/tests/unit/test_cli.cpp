#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "ogpsa/io.hpp"
#include "ogpsa_tools/commands.hpp"
#include "ogpsa_tools/experiment_file.hpp"
#include "test_support.hpp"

namespace ogpsa {
namespace {

namespace fs = std::filesystem;
using tools::CommonOptions;
using tools::ExperimentFile;
using tools::ParseError;

const std::string kConfigDir = OGPSA_CONFIG_DIR;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("ogpsa_test_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string write_config(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string quadratic_text(double alpha, const std::string& extra_train = "") {
  std::ostringstream s;
  s << "version = 1\n[family]\nkind = quadratic_pair\ndim = 10\nalpha = " << io::format_double(alpha)
    << "\nseed = 0\n[train]\nmethod = ogpsa\neta = 0.05\nK = 5\nsafety_batch = 0\nseed = 0\n"
    << extra_train << "[stage safety]\nloss = squared_error\nsteps = 100\n";
  return s.str();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const CommonOptions& opts) {
  std::ostringstream out, err;
  const int code = tools::cmd_run(opts, out, err);
  return {code, out.str(), err.str()};
}

CommonOptions options(const std::string& config, const fs::path& out) {
  CommonOptions o;
  o.config_path = config;
  o.out_dir = out.string();
  return o;
}

ParseError parse_failure(const std::string& text) {
  try {
    tools::parse_experiment(text, "t.cfg");
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ParseError for:\n" << text;
  return ParseError("t.cfg", 0, 0, "none");
}

TEST(ExperimentFile, ShippedConfigsRoundTrip) {
  for (const char* name : {"quadratic.cfg", "regression.cfg", "policy.cfg"}) {
    const auto file = tools::load_experiment(kConfigDir + "/" + name);
    const auto echo = tools::to_text(file);
    const auto again = tools::parse_experiment(echo);
    EXPECT_EQ(again, file) << name;
    EXPECT_EQ(tools::to_text(again), echo) << name;
  }
}

TEST(ExperimentFile, FieldsAreApplied) {
  const auto file = tools::load_experiment(kConfigDir + "/policy.cfg");
  EXPECT_EQ(file.family.kind, tasks::FamilyKind::policy_sft_dpo);
  EXPECT_EQ(file.train.eta, 0.2);
  ASSERT_EQ(file.train.stages.size(), 2u);
  EXPECT_EQ(file.train.stages[0].task, "sft");
  EXPECT_EQ(file.train.stages[0].refresh, subspace::RefreshPeriod(30));
  EXPECT_EQ(file.train.stages[1].loss, models::LossTag::dpo_pairwise);
  EXPECT_EQ(file.output_dir, "runs/policy");
}

TEST(ExperimentFile, ErrorsCarryLineAndColumn) {
  auto e = parse_failure("version = 1\n[family]\nkind = quadratic_pair\ncolour = red\n");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.column(), 1u);
  EXPECT_NE(std::string(e.what()).find("t.cfg:4:1"), std::string::npos);

  e = parse_failure("version = 1\n[train]\neta =   abc\n");
  EXPECT_EQ(e.line(), 3u);
  EXPECT_EQ(e.column(), 9u);

  e = parse_failure("version = 2\n");
  EXPECT_EQ(e.line(), 1u);

  e = parse_failure("[family]\nkind = quadratic_pair\n");
  EXPECT_EQ(e.line(), 1u);

  e = parse_failure(quadratic_text(0.5) + "[bogus]\n");
  EXPECT_EQ(e.line(), 16u);

  e = parse_failure("version = 1\n[train]\neta = 0.1\neta = 0.2\n");
  EXPECT_EQ(e.line(), 4u);

  e = parse_failure("version = 1\n[train]\njust some words\n");
  EXPECT_EQ(e.line(), 3u);
}

TEST(ExperimentFile, InvariantsAreChecked) {
  EXPECT_THROW(tools::parse_experiment("version = 1\n[family]\nkind = quadratic_pair\n"), ConfigError);
  EXPECT_THROW(tools::parse_experiment(quadratic_text(0.5, "eta = -1\n")), ConfigError);
  EXPECT_THROW(tools::parse_experiment("version = 1\n[stage safety]\nloss = squared_error\n"), ConfigError);
}

TEST(CmdRun, WritesOutputs) {
  TempDir dir;
  const auto cfg = write_config(dir, "q.cfg", quadratic_text(std::numbers::pi / 4));
  const auto r = run(options(cfg, dir / "out"));
  ASSERT_EQ(r.code, tools::kOk) << r.err;
  for (const char* f : {"records.csv", "tax.csv", "subspace.csv", "config.resolved", "chart.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto records = testing::read_csv(testing::slurp((dir / "out" / "records.csv").string()));
  EXPECT_EQ(records.rows.size(), 100u);
  EXPECT_EQ(testing::slurp((dir / "out" / "chart.svg").string()).rfind("<svg", 0), 0u);
  // The echo is itself a valid config.
  EXPECT_NO_THROW(tools::load_experiment((dir / "out" / "config.resolved").string()));
}

TEST(CmdRun, RefreshStepsFollowK) {
  TempDir dir;
  const auto cfg = write_config(dir, "q.cfg", quadratic_text(std::numbers::pi / 4));
  ASSERT_EQ(run(options(cfg, dir / "out")).code, tools::kOk);
  const auto sub = testing::read_csv(testing::slurp((dir / "out" / "subspace.csv").string()));
  ASSERT_EQ(sub.rows.size(), 20u);
  for (std::size_t i = 0; i < sub.rows.size(); ++i) EXPECT_EQ(std::stoul(sub.rows[i][0]), 5 * i);
}

TEST(CmdRun, RepeatedRunsAreBitwiseIdentical) {
  TempDir dir;
  const auto cfg = kConfigDir + "/policy.cfg";
  ASSERT_EQ(run(options(cfg, dir / "a")).code, tools::kOk);
  ASSERT_EQ(run(options(cfg, dir / "b")).code, tools::kOk);
  for (const char* f : {"records.csv", "tax.csv", "subspace.csv"}) {
    EXPECT_EQ(testing::slurp((dir / "a" / f).string()), testing::slurp((dir / "b" / f).string())) << f;
  }
}

TEST(CmdRun, SeedOverrideChangesResults) {
  TempDir dir;
  const auto cfg = kConfigDir + "/quadratic.cfg";
  auto a = options(cfg, dir / "a");
  auto b = options(cfg, dir / "b");
  b.seed = 7;
  ASSERT_EQ(run(a).code, tools::kOk);
  ASSERT_EQ(run(b).code, tools::kOk);
  EXPECT_NE(testing::slurp((dir / "a" / "records.csv").string()), testing::slurp((dir / "b" / "records.csv").string()));
  EXPECT_EQ(tools::load_experiment((dir / "b" / "config.resolved").string()).train.seed, 7u);
}

TEST(CmdRun, ExitCodes) {
  TempDir dir;
  const auto bad = write_config(dir, "bad.cfg", "version = 1\n[train]\neta = x\n");
  auto r = run(options(bad, dir / "out"));
  EXPECT_EQ(r.code, tools::kConfigError);
  EXPECT_NE(r.err.find("bad.cfg:3:"), std::string::npos) << r.err;

  r = run(options((dir / "missing.cfg").string(), dir / "out"));
  EXPECT_EQ(r.code, tools::kConfigError);

  std::string text = quadratic_text(std::numbers::pi / 4);
  text.replace(text.find("eta = 0.05"), 10, "eta = 1e10");
  const auto blowup = write_config(dir, "blow.cfg", text);
  r = run(options(blowup, dir / "out"));
  EXPECT_EQ(r.code, tools::kNumericFailure);
  EXPECT_NE(r.err.find("at step "), std::string::npos) << r.err;
}

struct SummaryRow {
  double gain;
  double tax;
};

std::map<std::string, SummaryRow> compare_rows(const fs::path& dir) {
  const auto t = testing::read_csv(testing::slurp((dir / "summary.csv").string()));
  std::map<std::string, SummaryRow> out;
  for (const auto& row : t.rows) {
    out[row[t.column("method")]] = {std::stod(row[t.column("safety_gain")]),
                                    std::stod(row[t.column("total_delta_tax")])};
  }
  return out;
}

int compare(const std::string& cfg, const fs::path& out_dir, std::ostream& out) {
  std::ostringstream err;
  return tools::cmd_compare(options(cfg, out_dir), out, err);
}

TEST(CmdCompare, OrthogonalFamilyNaiveEqualsOgpsa) {
  TempDir dir;
  const auto cfg = write_config(dir, "q.cfg", quadratic_text(std::numbers::pi / 2));
  std::ostringstream out;
  ASSERT_EQ(compare(cfg, dir / "out", out), tools::kOk);
  const auto rows = compare_rows(dir / "out");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows.at("naive").gain, rows.at("ogpsa").gain, 1e-9);
  EXPECT_NEAR(rows.at("naive").tax, rows.at("ogpsa").tax, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "out" / "compare.svg"));
  for (const char* m : {"naive", "replay", "ogpsa"}) EXPECT_TRUE(fs::exists(dir / "out" / m / "records.csv"));
}

TEST(CmdCompare, CollinearFamilyStallsOgpsa) {
  TempDir dir;
  const auto cfg = write_config(dir, "q.cfg", quadratic_text(0.0));
  std::ostringstream out;
  ASSERT_EQ(compare(cfg, dir / "out", out), tools::kOk);
  const auto rows = compare_rows(dir / "out");
  EXPECT_EQ(rows.at("ogpsa").gain, 0.0);
  EXPECT_EQ(rows.at("ogpsa").tax, 0.0);
  EXPECT_GT(rows.at("naive").gain, 0.0);
  EXPECT_GT(rows.at("naive").tax, 0.0);
}

TEST(CmdCompare, RegressionOgpsaDominatesNaive) {
  TempDir dir;
  std::ostringstream out;
  ASSERT_EQ(compare(kConfigDir + "/regression.cfg", dir / "out", out), tools::kOk);
  const auto rows = compare_rows(dir / "out");
  EXPECT_LT(rows.at("ogpsa").tax, rows.at("naive").tax);
  EXPECT_GE(rows.at("ogpsa").gain, 0.7 * rows.at("naive").gain);
  EXPECT_NE(out.str().find("ogpsa"), std::string::npos);
}

std::vector<std::pair<std::string, double>> sweep_tax(const fs::path& dir) {
  const auto t = testing::read_csv(testing::slurp((dir / "sweep.csv").string()));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& row : t.rows) out.emplace_back(row[t.column("label")], std::stod(row[t.column("total_delta_tax")]));
  return out;
}

int sweep(const std::string& cfg, const fs::path& out_dir, const std::string& axis,
          const std::vector<std::string>& values) {
  std::ostringstream out, err;
  return tools::cmd_sweep(options(cfg, out_dir), axis, values, out, err);
}

TEST(CmdSweep, NeverRefreshIsWorst) {
  TempDir dir;
  ASSERT_EQ(sweep(kConfigDir + "/policy.cfg", dir / "k", "K", {"2", "5", "10", "inf"}), tools::kOk);
  const auto rows = sweep_tax(dir / "k");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].first, "K=inf");
  for (int i = 0; i < 3; ++i) EXPECT_GT(rows[3].second, rows[i].second) << rows[i].first;
  EXPECT_TRUE(fs::exists(dir / "k" / "sweep.svg"));
  EXPECT_TRUE(fs::exists(dir / "k" / "K_inf" / "records.csv"));
}

TEST(CmdSweep, TwoFacetsDominateOne) {
  TempDir dir;
  ASSERT_EQ(sweep(kConfigDir + "/policy.cfg", dir / "m", "M", {"0", "1", "2"}), tools::kOk);
  const auto rows = sweep_tax(dir / "m");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].first, "M=0");
  EXPECT_EQ(rows[3].first, "M=2");
  EXPECT_LE(rows[3].second, rows[1].second);
  EXPECT_LE(rows[3].second, rows[2].second);
}

TEST(CmdSweep, ReferenceSizeIsFlat) {
  TempDir dir;
  ASSERT_EQ(sweep(kConfigDir + "/policy.cfg", dir / "r", "refsize", {"50", "100", "200"}), tools::kOk);
  const auto rows = sweep_tax(dir / "r");
  ASSERT_EQ(rows.size(), 3u);
  double lo = rows[0].second, hi = rows[0].second;
  for (const auto& [label, tax] : rows) {
    lo = std::min(lo, tax);
    hi = std::max(hi, tax);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 2.0 * lo);
}

TEST(CmdSweep, FailedLegsAreListed) {
  TempDir dir;
  // Collinear family with a huge step: the projected legs stall, the naive leg diverges.
  std::string text = quadratic_text(0.0);
  text.replace(text.find("eta = 0.05"), 10, "eta = 1e10");
  const auto cfg = write_config(dir, "q.cfg", text);
  EXPECT_EQ(sweep(cfg, dir / "s", "M", {"0", "1"}), tools::kNumericFailure);
  const auto manifest = testing::slurp((dir / "s" / "failures.txt").string());
  EXPECT_NE(manifest.find("M=0\texit 3"), std::string::npos) << manifest;
  const auto rows = sweep_tax(dir / "s");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].first, "M=1");
}

TEST(CmdSweep, BadAxisIsConfigError) {
  TempDir dir;
  EXPECT_EQ(sweep(kConfigDir + "/quadratic.cfg", dir / "x", "depth", {"1"}), tools::kConfigError);
  EXPECT_EQ(sweep(kConfigDir + "/quadratic.cfg", dir / "x", "K", {"0"}), tools::kConfigError);
}

}  // namespace
}  // namespace ogpsa

// Tests for the Monte Carlo scenario harness: configuration validation,
// population limits, the paired-replication runner, and report/config
// serialization.

#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "addow/harness.hpp"
#include "testutil.hpp"

namespace aw = addow;

namespace {

aw::ScenarioConfig small_config() {
  aw::ScenarioConfig c;
  c.group_fractions = {0.5, 0.5};
  c.pi0 = {0.7, 0.8};
  c.mu_base = {0.0, 0.0};
  c.mu_scale = {1.0, 2.0};
  c.alpha = 0.1;
  c.beta = 0.2;
  c.sweep = aw::SweepKind::kSignal;
  c.sweep_values = {2.0, 3.0};
  c.total = 200;
  c.replications = 50;
  c.quantile_replicates = 200;
  c.seed = 42;
  c.threads = 1;

  aw::Pi0Spec ne;
  aw::Pi0Spec ce;
  ce.mode = aw::EstimateMode::kOracle;
  ce.oracle = {0.7, 0.8};
  aw::Pi0Spec storey;
  storey.mode = aw::EstimateMode::kFixedLambda;
  storey.lambda = 0.5;
  aw::Pi0Spec mwbh_ce;
  mwbh_ce.mode = aw::EstimateMode::kOracle;  // limits come from the model

  c.procedures = {{"bh", aw::ProcedureKind::kBh, ne},
                  {"ihw", aw::ProcedureKind::kIhw, ne},
                  {"addow-ce", aw::ProcedureKind::kAddow, ce},
                  {"lcm-ce", aw::ProcedureKind::kAddowLcm, ce},
                  {"abh-storey", aw::ProcedureKind::kAbh, storey},
                  {"hzz-ce", aw::ProcedureKind::kHzz, ce},
                  {"pro1-ce", aw::ProcedureKind::kPro1, ce},
                  {"pro2-ce", aw::ProcedureKind::kPro2, ce},
                  {"saddow-ne", aw::ProcedureKind::kSaddow, ne},
                  {"oracle-mwbh-ce", aw::ProcedureKind::kOracleMwbh, mwbh_ce}};
  return c;
}

std::string emit_json(const aw::ScenarioReport& report) {
  std::stringstream buf;
  aw::emit_report(report, aw::ReportFormat::kJson, buf);
  return buf.str();
}

}  // namespace

TEST(Config, ValidationCatchesBadRows) {
  aw::ScenarioConfig base = small_config();
  EXPECT_NO_THROW(base.validate());

  aw::ScenarioConfig c = base;
  c.procedures[0].pi0.mode = aw::EstimateMode::kFixedLambda;  // bh row
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures[1].pi0.mode = aw::EstimateMode::kOracle;  // ihw row
  c.procedures[1].pi0.oracle = {0.7, 0.8};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures.back().pi0.oracle = {0.7, 0.8};  // oracle-mwbh with explicit list
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures[2].name = "bh";  // duplicate
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures[2].name = "a,b";  // csv-hostile
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures[2].pi0.oracle = {0.7};  // wrong length
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures[4].pi0.lambda = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.group_fractions = {0.5, 0.6};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.pi0 = {0.7, 1.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.beta = 0.0;  // saddow row present
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.sweep_values.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.replications = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = base;
  c.procedures.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, ModelRoundingKeepsTheTotal) {
  aw::ScenarioConfig c = small_config();
  c.total = 999;
  const aw::GaussianModel model = c.model_at(0);
  EXPECT_EQ(model.group_sizes[0] + model.group_sizes[1], 999u);
  EXPECT_EQ(model.group_sizes[0], 500u);  // llround(0.5 * 999)
  EXPECT_EQ(model.group_sizes[1], 499u);
  EXPECT_EQ(model.null_counts[0], 350u);  // llround(0.7 * 500)
  EXPECT_EQ(model.null_counts[1], 399u);  // llround(0.8 * 499)
  EXPECT_DOUBLE_EQ(model.mu[0], 2.0);
  EXPECT_DOUBLE_EQ(model.mu[1], 4.0);
  EXPECT_THROW(c.model_at(5), std::invalid_argument);

  c = small_config();
  c.sweep = aw::SweepKind::kTotalCount;
  c.sweep_values = {100.5};
  EXPECT_THROW(c.model_at(0), std::invalid_argument);
  c.sweep_values = {400.0};
  c.mubar = 1.5;
  const aw::GaussianModel swept = c.model_at(0);
  EXPECT_EQ(swept.total(), 400u);
  EXPECT_DOUBLE_EQ(swept.mu[0], 1.5);
  EXPECT_DOUBLE_EQ(swept.mu[1], 3.0);
}

TEST(Population, LimitsFollowTheEstimateMode) {
  const aw::GaussianModel model{{2.0, 3.0}, {100, 100}, {70, 80}};
  aw::Pi0Spec ne;
  EXPECT_EQ(aw::population_pi0bar(model, ne), (std::vector<double>{1.0, 1.0}));

  aw::Pi0Spec ce;
  ce.mode = aw::EstimateMode::kOracle;
  const auto oracle = aw::population_pi0bar(model, ce);
  EXPECT_DOUBLE_EQ(oracle[0], 0.7);
  EXPECT_DOUBLE_EQ(oracle[1], 0.8);

  aw::Pi0Spec storey;
  storey.mode = aw::EstimateMode::kFixedLambda;
  storey.lambda = 0.5;
  const auto fixed = aw::population_pi0bar(model, storey);
  for (std::size_t g = 0; g < 2; ++g) {
    const aw::AlternativeCdf alt{model.mu[g]};
    const double tail = (1.0 - alt.F(0.5)) / (1.0 - 0.5);
    EXPECT_DOUBLE_EQ(fixed[g], std::min(1.0, model.pi_g0(g) + model.pi_g1(g) * tail));
    EXPECT_GT(fixed[g], model.pi_g0(g));
    EXPECT_LE(fixed[g], 1.0);
  }

  aw::Pi0Spec sched;
  sched.mode = aw::EstimateMode::kSchedule;
  sched.exponent = 0.25;
  const double lambda = 1.0 - std::pow(200.0, -0.25);
  const auto scheduled = aw::population_pi0bar(model, sched);
  for (std::size_t g = 0; g < 2; ++g) {
    const aw::AlternativeCdf alt{model.mu[g]};
    const double tail = (1.0 - alt.F(lambda)) / (1.0 - lambda);
    EXPECT_DOUBLE_EQ(scheduled[g], std::min(1.0, model.pi_g0(g) + model.pi_g1(g) * tail));
  }
}

TEST(Run, SmallScenarioProducesCoherentRows) {
  const aw::ScenarioConfig c = small_config();
  const aw::ScenarioReport report = aw::run_scenario(c);
  const std::size_t P = c.procedures.size();
  ASSERT_EQ(report.rows.size(), c.sweep_values.size() * P);

  for (std::size_t si = 0; si < c.sweep_values.size(); ++si) {
    for (std::size_t pi = 0; pi < P; ++pi) {
      const aw::ReportRow& row = report.rows[si * P + pi];
      EXPECT_EQ(row.sweep, c.sweep_values[si]);
      EXPECT_EQ(row.procedure, c.procedures[pi].name);
      EXPECT_EQ(row.replications, c.replications);
      EXPECT_EQ(row.errors, 0u);
      EXPECT_EQ(row.m, 200u);
      EXPECT_EQ(row.m1, 50u);  // 30 + 20 alternatives
      EXPECT_GE(row.fdr, 0.0);
      EXPECT_LE(row.fdr, 1.0);
      EXPECT_GE(row.pow, 0.0);
      EXPECT_LE(row.pow, 1.0);
      EXPECT_GE(row.fdr_se, 0.0);
      EXPECT_GE(row.pow_se, 0.0);
      EXPECT_DOUBLE_EQ(row.pow_m1, row.pow * 200.0 / 50.0);
      if (c.procedures[pi].kind == aw::ProcedureKind::kSaddow) {
        EXPECT_FALSE(std::isnan(row.branch_rate));
        EXPECT_GE(row.branch_rate, 0.0);
        EXPECT_LE(row.branch_rate, 1.0);
      } else {
        EXPECT_TRUE(std::isnan(row.branch_rate));
      }
      if (c.procedures[pi].kind == aw::ProcedureKind::kBh) {
        EXPECT_EQ(row.diffpow, 0.0);
        EXPECT_EQ(row.fallbacks, 0u);
      }
    }
  }
}

TEST(Run, DeterministicAcrossCallsAndThreadCounts) {
  aw::ScenarioConfig c = small_config();
  c.replications = 20;
  c.sweep_values = {3.0};
  const std::string first = emit_json(aw::run_scenario(c));
  const std::string second = emit_json(aw::run_scenario(c));
  EXPECT_EQ(first, second);
  c.threads = 4;
  const std::string threaded = emit_json(aw::run_scenario(c));
  EXPECT_EQ(first, threaded);
}

TEST(Run, SaddowRowReplaysByHand) {
  aw::ScenarioConfig c = small_config();
  c.sweep_values = {2.5};
  c.replications = 3;
  c.total = 60;
  c.quantile_replicates = 100;
  aw::Pi0Spec ne;
  c.procedures = {{"saddow-ne", aw::ProcedureKind::kSaddow, ne}};
  const aw::ScenarioReport report = aw::run_scenario(c);
  ASSERT_EQ(report.rows.size(), 1u);
  const aw::ReportRow& row = report.rows[0];

  const aw::GaussianModel model = c.model_at(0);
  const auto table = aw::null_quantile_table(60, model.group_sizes, c.alpha, 100,
                                             aw::derive_seed(c.seed, 0x7ab1e, 60));
  int branches = 0;
  double fdr = 0.0, pw = 0.0;
  for (std::size_t rep = 0; rep < 3; ++rep) {
    const aw::GroupedPValues data = aw::generate(model, aw::derive_seed(c.seed, 0, rep));
    const aw::SaddowOutcome out = aw::saddow(data, aw::ne_estimates(data), c.alpha, c.beta, table);
    branches += out.used_addow ? 1 : 0;
    const aw::MetricSample ms = aw::metric_sample(out.outcome.rejections, data);
    fdr += ms.fdp;
    pw += ms.power;
  }
  EXPECT_DOUBLE_EQ(row.branch_rate, static_cast<double>(branches) / 3.0);
  EXPECT_DOUBLE_EQ(row.fdr, fdr / 3.0);
  EXPECT_DOUBLE_EQ(row.pow, pw / 3.0);
}

TEST(Run, DegenerateEstimatesFallBackToBh) {
  aw::ScenarioConfig c = small_config();
  c.sweep_values = {2.0};
  c.replications = 10;
  aw::Pi0Spec ne;
  c.procedures = {{"bh", aw::ProcedureKind::kBh, ne},
                  {"hzz-ne", aw::ProcedureKind::kHzz, ne},
                  {"pro2-ne", aw::ProcedureKind::kPro2, ne}};
  const aw::ScenarioReport report = aw::run_scenario(c);
  ASSERT_EQ(report.rows.size(), 3u);
  const aw::ReportRow& bh_row = report.rows[0];
  for (std::size_t pi = 1; pi < 3; ++pi) {
    const aw::ReportRow& row = report.rows[pi];
    EXPECT_EQ(row.fallbacks, 10u);
    EXPECT_EQ(row.errors, 0u);
    EXPECT_EQ(row.note, "pi0 estimate degenerate; bh substituted");
    EXPECT_DOUBLE_EQ(row.fdr, bh_row.fdr);
    EXPECT_DOUBLE_EQ(row.pow, bh_row.pow);
    EXPECT_EQ(row.diffpow, 0.0);
  }
}

TEST(Report, JsonRoundTripIsLossless) {
  aw::ScenarioReport report;
  aw::ReportRow a;
  a.sweep = 1.7;
  a.procedure = "addow-storey";
  a.replications = 250;
  a.fdr = 0.0489123456789;
  a.fdr_se = 0.00123456;
  a.pow = 0.3219876;
  a.pow_se = 0.0045;
  a.diffpow = -0.0123456789;
  a.pow_m1 = 0.58;
  a.m = 4000;
  a.m1 = 900;
  a.fallbacks = 3;
  a.errors = 1;
  a.note = "pi0 estimate degenerate; bh substituted";
  aw::ReportRow b;
  b.sweep = 2.0;
  b.procedure = "saddow-ne";
  b.branch_rate = 0.25;
  report.rows = {a, b};

  std::stringstream buf;
  aw::emit_report(report, aw::ReportFormat::kJson, buf);
  const aw::ScenarioReport back = aw::load_report(buf);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].sweep, a.sweep);
  EXPECT_EQ(back.rows[0].procedure, a.procedure);
  EXPECT_EQ(back.rows[0].replications, a.replications);
  EXPECT_EQ(back.rows[0].fdr, a.fdr);
  EXPECT_EQ(back.rows[0].fdr_se, a.fdr_se);
  EXPECT_EQ(back.rows[0].pow, a.pow);
  EXPECT_EQ(back.rows[0].pow_se, a.pow_se);
  EXPECT_EQ(back.rows[0].diffpow, a.diffpow);
  EXPECT_EQ(back.rows[0].pow_m1, a.pow_m1);
  EXPECT_EQ(back.rows[0].m, a.m);
  EXPECT_EQ(back.rows[0].m1, a.m1);
  EXPECT_EQ(back.rows[0].fallbacks, a.fallbacks);
  EXPECT_EQ(back.rows[0].errors, a.errors);
  EXPECT_EQ(back.rows[0].note, a.note);
  EXPECT_TRUE(std::isnan(back.rows[0].branch_rate));
  EXPECT_EQ(back.rows[1].branch_rate, 0.25);

  std::stringstream garbage("nope");
  EXPECT_THROW(aw::load_report(garbage), std::runtime_error);
}

TEST(Report, CsvCarriesThePlottedColumns) {
  aw::ScenarioReport report;
  aw::ReportRow a;
  a.sweep = 1.7;
  a.procedure = "ihw";
  a.fdr = 0.0489123456789;
  a.fdr_se = 0.00123456;
  a.pow = 0.3219876;
  a.pow_se = 0.0045;
  a.diffpow = -0.0123456789;
  aw::ReportRow b;
  b.sweep = 2.0;
  b.procedure = "saddow-ne";
  b.branch_rate = 0.25;
  report.rows = {a, b};

  std::stringstream buf;
  aw::emit_report(report, aw::ReportFormat::kCsv, buf);
  std::string header;
  std::getline(buf, header);
  EXPECT_EQ(header, "sweep,procedure,fdr,fdr_se,pow,pow_se,diffpow,branch_rate");
  std::string line1;
  std::getline(buf, line1);
  EXPECT_EQ(line1, "1.7,ihw,0.0489123,0.00123456,0.321988,0.0045,-0.0123457,");

  buf.clear();
  buf.seekg(0);
  const aw::ScenarioReport back = aw::load_report_csv(buf);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_NEAR(back.rows[0].fdr, a.fdr, 1e-6);
  EXPECT_NEAR(back.rows[0].diffpow, a.diffpow, 1e-6);
  EXPECT_EQ(back.rows[0].procedure, "ihw");
  EXPECT_TRUE(std::isnan(back.rows[0].branch_rate));
  EXPECT_EQ(back.rows[1].branch_rate, 0.25);

  std::stringstream bad_header("sweep,procedure\n");
  EXPECT_THROW(aw::load_report_csv(bad_header), std::runtime_error);
  std::stringstream short_row(
      "sweep,procedure,fdr,fdr_se,pow,pow_se,diffpow,branch_rate\n1.7,ihw,0.1\n");
  EXPECT_THROW(aw::load_report_csv(short_row), std::runtime_error);
}

TEST(Config, SaveLoadRoundTrip) {
  const aw::ScenarioConfig c = small_config();
  std::stringstream buf;
  aw::save_config(c, buf);
  const aw::ScenarioConfig back = aw::load_config(buf);
  EXPECT_EQ(back.group_fractions, c.group_fractions);
  EXPECT_EQ(back.pi0, c.pi0);
  EXPECT_EQ(back.mu_base, c.mu_base);
  EXPECT_EQ(back.mu_scale, c.mu_scale);
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_EQ(back.beta, c.beta);
  EXPECT_EQ(back.mubar, c.mubar);
  EXPECT_EQ(back.sweep == aw::SweepKind::kSignal, c.sweep == aw::SweepKind::kSignal);
  EXPECT_EQ(back.sweep_values, c.sweep_values);
  EXPECT_EQ(back.total, c.total);
  EXPECT_EQ(back.replications, c.replications);
  EXPECT_EQ(back.quantile_replicates, c.quantile_replicates);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.threads, c.threads);
  ASSERT_EQ(back.procedures.size(), c.procedures.size());
  for (std::size_t i = 0; i < c.procedures.size(); ++i) {
    EXPECT_EQ(back.procedures[i].name, c.procedures[i].name);
    EXPECT_EQ(back.procedures[i].kind, c.procedures[i].kind);
    EXPECT_EQ(back.procedures[i].pi0.mode, c.procedures[i].pi0.mode);
    EXPECT_EQ(back.procedures[i].pi0.oracle, c.procedures[i].pi0.oracle);
  }

  std::stringstream garbage("[1,2");
  EXPECT_THROW(aw::load_config(garbage), std::runtime_error);
}

TEST(Config, PresetsResolveAndValidate) {
  for (const char* name : {"scenario1", "scenario2", "scenario3"}) {
    const aw::ScenarioConfig c = aw::preset(name);
    EXPECT_NO_THROW(c.validate()) << name;
  }
  EXPECT_DOUBLE_EQ(aw::preset("scenario2").alpha, 0.7);
  EXPECT_EQ(aw::preset("scenario3").sweep == aw::SweepKind::kTotalCount, true);
  EXPECT_DOUBLE_EQ(aw::scenario3(2.5).mubar, 2.5);
  EXPECT_THROW(aw::preset("nope"), std::invalid_argument);
  EXPECT_THROW(aw::kind_from_name("nope"), std::invalid_argument);
  EXPECT_EQ(std::string(aw::kind_name(aw::ProcedureKind::kOracleMwbh)), "oracle-mwbh");
  EXPECT_EQ(aw::kind_from_name("addow-lcm"), aw::ProcedureKind::kAddowLcm);
  EXPECT_EQ(aw::mode_from_name("storey"), aw::EstimateMode::kFixedLambda);
  EXPECT_THROW(aw::mode_from_name("bogus"), std::invalid_argument);
}

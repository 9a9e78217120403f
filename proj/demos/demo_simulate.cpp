// Small Monte Carlo comparison across a rising signal: plain step-up,
// non-adaptive weighting, and the adaptive optimizer.  Writes the report as
// csv on stdout; the diffpow column is the paired power gain over plain
// step-up, scaled to the alternative count.

#include <iostream>

#include "addow/harness.hpp"

namespace aw = addow;

int main() {
  aw::ScenarioConfig config;
  config.group_fractions = {0.5, 0.5};
  config.pi0 = {0.7, 0.9};
  config.mu_base = {0.0, 0.0};
  config.mu_scale = {1.0, 2.0};
  config.alpha = 0.1;
  config.sweep = aw::SweepKind::kSignal;
  config.sweep_values = {1.5, 2.5, 3.5};
  config.total = 400;
  config.replications = 200;
  config.seed = 7;
  config.threads = 0;

  aw::Pi0Spec storey;
  storey.mode = aw::EstimateMode::kFixedLambda;
  storey.lambda = 0.5;
  config.procedures = {{"bh", aw::ProcedureKind::kBh, {}},
                       {"ihw", aw::ProcedureKind::kIhw, {}},
                       {"addow-storey", aw::ProcedureKind::kAddow, storey}};

  aw::emit_report(aw::run_scenario(config), aw::ReportFormat::kCsv, std::cout);
  return 0;
}

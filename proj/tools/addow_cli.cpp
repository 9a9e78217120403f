// Command-line frontend: run one procedure on a dataset, drive the Monte
// Carlo harness, build calibration tables, and query the population oracle.
// Exit codes: 0 success, 1 runtime failure, 2 usage error; every failure
// prints one "error: ..." line to standard error.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "addow/addow.hpp"
#include "addow/classic.hpp"
#include "addow/estimation.hpp"
#include "addow/harness.hpp"
#include "addow/model.hpp"
#include "addow/oracle.hpp"
#include "addow/stabilize.hpp"
#include "addow/stepup.hpp"

namespace {

namespace aw = addow;

// Flag combinations and values the parser accepts but the tool cannot serve.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text, const std::string& flag) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size()) throw UsageError(flag + ": could not parse number '" + text + "'");
  return v;
}

aw::Pi0Spec parse_pi0_mode(const std::string& text) {
  aw::Pi0Spec spec;
  if (text == "ne") return spec;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (colon != std::string::npos && !tail.empty()) {
    if (head == "storey") {
      spec.mode = aw::EstimateMode::kFixedLambda;
      spec.lambda = parse_number(tail, "--pi0-mode storey");
      return spec;
    }
    if (head == "schedule") {
      spec.mode = aw::EstimateMode::kSchedule;
      spec.exponent = parse_number(tail, "--pi0-mode schedule");
      return spec;
    }
    if (head == "oracle") {
      spec.mode = aw::EstimateMode::kOracle;
      std::stringstream parts(tail);
      std::string item;
      while (std::getline(parts, item, ','))
        spec.oracle.push_back(parse_number(item, "--pi0-mode oracle"));
      if (!spec.oracle.empty()) return spec;
    }
  }
  throw UsageError("--pi0-mode: expected ne, storey:L, schedule:E, or oracle:v1,v2,... (got '" +
                   text + "')");
}

void check_alpha_flag(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
}

int with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(std::cout);
    return 0;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  body(out);
  if (!out) throw std::runtime_error("write failed: " + path);
  return 0;
}

unsigned env_threads(unsigned fallback) {
  const char* env = std::getenv("ADDOW_THREADS");
  if (env == nullptr || *env == '\0') return fallback;
  const double v = parse_number(env, "ADDOW_THREADS");
  if (v < 0.0 || v != static_cast<double>(static_cast<unsigned>(v)))
    throw UsageError("ADDOW_THREADS: expected a small nonnegative integer");
  return static_cast<unsigned>(v);
}

struct AnalyzeArgs {
  std::string input, procedure, pi0_mode = "ne", table_path, format = "json", out_path;
  double alpha = 0.0, beta = 0.0;
  bool lcm = false, beta_given = false, table_given = false;
};

int run_analyze(const AnalyzeArgs& args) {
  aw::ProcedureKind kind;
  try {
    kind = aw::kind_from_name(args.procedure);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kind == aw::ProcedureKind::kOracleMwbh)
    throw UsageError("procedure: oracle-mwbh works on a population model; use the oracle subcommand");
  if (args.lcm) {
    if (kind != aw::ProcedureKind::kAddow) throw UsageError("--lcm applies only to --procedure addow");
    kind = aw::ProcedureKind::kAddowLcm;
  }
  check_alpha_flag(args.alpha);
  const aw::Pi0Spec pi0 = parse_pi0_mode(args.pi0_mode);
  if ((kind == aw::ProcedureKind::kBh || kind == aw::ProcedureKind::kIhw) &&
      pi0.mode != aw::EstimateMode::kNonAdaptive)
    throw UsageError("bh and ihw are fixed to --pi0-mode ne");
  if (kind == aw::ProcedureKind::kSaddow) {
    if (!args.beta_given || !args.table_given) throw UsageError("saddow needs --beta and --table");
    if (!(args.beta > 0.0 && args.beta < 1.0)) throw UsageError("--beta must lie in (0,1)");
  }

  std::ifstream in(args.input);
  if (!in) throw std::runtime_error("cannot open " + args.input);
  const aw::GroupedPValues data = aw::load_dataset(in);
  if (pi0.mode == aw::EstimateMode::kOracle && pi0.oracle.size() != data.n_groups())
    throw UsageError("--pi0-mode oracle: need one value per group");
  const aw::SortedPValues view(data);

  aw::StepUpOutcome out;
  bool is_saddow = false;
  aw::SaddowOutcome sad;
  switch (kind) {
    case aw::ProcedureKind::kBh:
      out = aw::bh(view, args.alpha);
      break;
    case aw::ProcedureKind::kIhw:
      out = aw::ihw(view, args.alpha);
      break;
    case aw::ProcedureKind::kAddow:
      out = aw::addow(view, pi0.resolve(data), args.alpha);
      break;
    case aw::ProcedureKind::kAddowLcm:
      out = aw::addow_lcm(view, pi0.resolve(data), args.alpha);
      break;
    case aw::ProcedureKind::kAbh:
      out = aw::abh(view, pi0.resolve(data), args.alpha);
      break;
    case aw::ProcedureKind::kHzz:
      out = aw::hzz(view, pi0.resolve(data), args.alpha);
      break;
    case aw::ProcedureKind::kPro1:
      out = aw::pro1_pro2(view, pi0.resolve(data), args.alpha).pro1;
      break;
    case aw::ProcedureKind::kPro2:
      out = aw::pro1_pro2(view, pi0.resolve(data), args.alpha).pro2;
      break;
    case aw::ProcedureKind::kSaddow: {
      std::ifstream tin(args.table_path);
      if (!tin) throw std::runtime_error("cannot open " + args.table_path);
      const aw::NullQuantileTable table = aw::load_table(tin);
      sad = aw::saddow(view, pi0.resolve(data), args.alpha, args.beta, table);
      out = sad.outcome;
      is_saddow = true;
      break;
    }
    case aw::ProcedureKind::kOracleMwbh:
      break;  // rejected above
  }

  return with_output(args.out_path, [&](std::ostream& os) {
    if (args.format == "json") {
      nlohmann::json j;
      j["procedure"] = aw::kind_name(kind);
      j["alpha"] = args.alpha;
      j["m"] = view.m;
      j["u_hat"] = out.u_hat;
      j["rejected"] = out.rejections.total();
      nlohmann::json groups = nlohmann::json::array();
      for (std::size_t g = 0; g < data.n_groups(); ++g) {
        nlohmann::json row;
        row["group"] = data.names[g];
        row["weight"] = out.weights[g];
        row["rejections"] = out.rejections.by_group[g];
        nlohmann::json ps = nlohmann::json::array();
        for (std::uint32_t i : out.rejections.by_group[g]) ps.push_back(data.pvalues[g][i]);
        row["pvalues"] = std::move(ps);
        groups.push_back(std::move(row));
      }
      j["groups"] = std::move(groups);
      if (is_saddow) {
        j["z"] = sad.z;
        j["q"] = sad.q;
        j["used_addow"] = sad.used_addow;
      }
      os << j.dump(2) << '\n';
    } else {
      // rejection listing in the dataset's own csv shape
      os << (data.labeled() ? "group,pvalue,label\n" : "group,pvalue\n");
      os.precision(17);
      for (std::size_t g = 0; g < data.n_groups(); ++g)
        for (std::uint32_t i : out.rejections.by_group[g]) {
          os << data.names[g] << ',' << data.pvalues[g][i];
          if (data.labeled()) os << ',' << static_cast<int>(data.labels[g][i]);
          os << '\n';
        }
      std::cerr.precision(17);
      std::cerr << "note: procedure=" << aw::kind_name(kind) << " alpha=" << args.alpha
                << " m=" << view.m << " u_hat=" << out.u_hat
                << " rejected=" << out.rejections.total();
      if (is_saddow)
        std::cerr << " z=" << sad.z << " q=" << sad.q << " used_addow=" << (sad.used_addow ? 1 : 0);
      std::cerr << '\n';
    }
  });
}

struct SimulateArgs {
  std::string preset, config_path, format = "csv", out_path;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  unsigned threads = 0;
  double mubar = 0.0;
  bool preset_given = false, config_given = false, seed_given = false, reps_given = false,
       threads_given = false, mubar_given = false;
};

int run_simulate(const SimulateArgs& args) {
  aw::ScenarioConfig config;
  if (args.preset_given == args.config_given)
    throw UsageError("simulate: give exactly one of --preset and --config");
  if (args.preset_given) {
    if (args.preset == "scenario3")
      config = args.mubar_given ? aw::scenario3(args.mubar) : aw::scenario3();
    else if (args.preset == "scenario1" || args.preset == "scenario2")
      config = aw::preset(args.preset);
    else
      throw UsageError("--preset: unknown name '" + args.preset +
                       "' (expected scenario1, scenario2, or scenario3)");
  } else {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open " + args.config_path);
    config = aw::load_config(in);
    if (args.mubar_given) config.mubar = args.mubar;
  }
  if (args.reps_given) {
    if (args.reps == 0) throw UsageError("--reps must be positive");
    config.replications = args.reps;
  }
  if (args.seed_given) config.seed = args.seed;
  config.threads = args.threads_given ? args.threads : env_threads(config.threads);
  config.validate();

  const aw::ScenarioReport report = aw::run_scenario(config);
  const aw::ReportFormat format =
      args.format == "json" ? aw::ReportFormat::kJson : aw::ReportFormat::kCsv;
  return with_output(args.out_path, [&](std::ostream& os) { aw::emit_report(report, format, os); });
}

struct TableArgs {
  std::size_t m = 0, replicates = 0;
  std::vector<std::size_t> group_sizes;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_null_quantile(const TableArgs& args) {
  check_alpha_flag(args.alpha);
  if (args.replicates == 0) throw UsageError("--replicates must be positive");
  std::size_t total = 0;
  for (std::size_t s : args.group_sizes) total += s;
  if (args.group_sizes.empty() || total != args.m)
    throw UsageError("--group-sizes must be nonempty and sum to --m");
  const aw::NullQuantileTable table =
      aw::null_quantile_table(args.m, args.group_sizes, args.alpha, args.replicates, args.seed);
  return with_output(args.out_path, [&](std::ostream& os) { aw::save_table(table, os); });
}

struct OracleArgs {
  std::string model_path, out_path;
  double alpha = 0.0, u = 1.0;
};

int run_oracle(const OracleArgs& args) {
  check_alpha_flag(args.alpha);
  if (!(args.u > 0.0 && args.u <= 1.0)) throw UsageError("--u must lie in (0,1]");
  std::ifstream in(args.model_path);
  if (!in) throw std::runtime_error("cannot open " + args.model_path);
  const aw::GaussianModel model = aw::load_model(in);
  const aw::CostVector costs = aw::cost_vector(model.group_sizes, model.pi0_by_group());
  const aw::WeightVector weights = aw::oracle_weights(model, costs, args.alpha, args.u);
  const double critical = aw::critical_alpha(model, model.pi0_by_group());
  return with_output(args.out_path, [&](std::ostream& os) {
    nlohmann::json j;
    j["alpha"] = args.alpha;
    j["u"] = args.u;
    j["mu"] = model.mu;
    j["group_sizes"] = model.group_sizes;
    j["pi0"] = model.pi0_by_group();
    j["costs"] = costs;
    j["weights"] = weights;
    j["critical_alpha"] = critical;
    os << j.dump(2) << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouped weighted step-up multiple-testing toolkit"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand("analyze", "run one procedure on a dataset");
  analyze->add_option("--input", an.input, "dataset csv (group,pvalue[,label])")->required();
  analyze->add_option("--procedure", an.procedure,
                      "bh|ihw|addow|addow-lcm|abh|hzz|pro1|pro2|saddow")
      ->required();
  analyze->add_option("--alpha", an.alpha, "target level in (0,1)")->required();
  analyze->add_option("--pi0-mode", an.pi0_mode, "ne | storey:L | schedule:E | oracle:v1,v2,...");
  CLI::Option* beta_opt = analyze->add_option("--beta", an.beta, "saddow pre-test level");
  CLI::Option* table_opt = analyze->add_option("--table", an.table_path, "saddow null-quantile table");
  analyze->add_flag("--lcm", an.lcm, "relax the optimizer to the concave-majorant variant");
  analyze->add_option("--format", an.format, "csv|json (default json)")
      ->check(CLI::IsMember({"csv", "json"}));
  analyze->add_option("--out", an.out_path, "output file (default stdout)");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario");
  CLI::Option* preset_opt =
      simulate->add_option("--preset", sim.preset, "scenario1|scenario2|scenario3");
  CLI::Option* config_opt = simulate->add_option("--config", sim.config_path, "scenario json");
  preset_opt->excludes(config_opt);
  CLI::Option* reps_opt = simulate->add_option("--reps", sim.reps, "override replications");
  CLI::Option* seed_opt = simulate->add_option("--seed", sim.seed, "override master seed");
  CLI::Option* threads_opt =
      simulate->add_option("--threads", sim.threads, "worker threads (ADDOW_THREADS, 0 = all cores)");
  CLI::Option* mubar_opt = simulate->add_option("--mubar", sim.mubar, "signal knob for total-count sweeps");
  simulate->add_option("--format", sim.format, "csv|json (default csv)")
      ->check(CLI::IsMember({"csv", "json"}));
  simulate->add_option("--out", sim.out_path, "output file (default stdout)");

  TableArgs tab;
  CLI::App* table = app.add_subcommand("null-quantile", "build a calibration table");
  table->add_option("--m", tab.m, "total hypothesis count")->required();
  table->add_option("--group-sizes", tab.group_sizes, "comma-separated sizes, summing to m")
      ->required()
      ->delimiter(',');
  table->add_option("--alpha", tab.alpha, "target level in (0,1)")->required();
  table->add_option("--replicates", tab.replicates, "simulated null datasets")->required();
  table->add_option("--seed", tab.seed, "table seed");
  table->add_option("--out", tab.out_path, "output file (default stdout)");

  OracleArgs orc;
  CLI::App* oracle = app.add_subcommand("oracle", "population weights and the critical level");
  oracle->add_option("--model", orc.model_path, "model json")->required();
  oracle->add_option("--alpha", orc.alpha, "target level in (0,1)")->required();
  oracle->add_option("--u", orc.u, "threshold point in (0,1] (default 1)");
  oracle->add_option("--out", orc.out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  an.beta_given = beta_opt->count() > 0;
  an.table_given = table_opt->count() > 0;
  sim.preset_given = preset_opt->count() > 0;
  sim.config_given = config_opt->count() > 0;
  sim.reps_given = reps_opt->count() > 0;
  sim.seed_given = seed_opt->count() > 0;
  sim.threads_given = threads_opt->count() > 0;
  sim.mubar_given = mubar_opt->count() > 0;

  try {
    if (analyze->parsed()) return run_analyze(an);
    if (simulate->parsed()) return run_simulate(sim);
    if (table->parsed()) return run_null_quantile(tab);
    if (oracle->parsed()) return run_oracle(orc);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

#pragma once

// Monte Carlo scenario harness: grouped Gaussian models with a signal knob,
// paired replications, aggregation into FDR / power / DiffPow tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "addow/addow.hpp"
#include "addow/classic.hpp"
#include "addow/estimation.hpp"
#include "addow/model.hpp"
#include "addow/oracle.hpp"
#include "addow/rng.hpp"
#include "addow/stabilize.hpp"
#include "addow/stepup.hpp"

namespace addow {

// How a procedure obtains its per-group null-proportion estimates.
struct Pi0Spec {
  EstimateMode mode = EstimateMode::kNonAdaptive;
  double lambda = kDefaultLambda;              // kFixedLambda
  double exponent = kDefaultScheduleExponent;  // kSchedule
  std::vector<double> oracle;                  // kOracle: true per-group pi0

  NullEstimates resolve(const GroupedPValues& data) const {
    switch (mode) {
      case EstimateMode::kNonAdaptive: return ne_estimates(data);
      case EstimateMode::kFixedLambda: return storey_estimate(data, lambda);
      case EstimateMode::kSchedule: return storey_schedule(data, exponent);
      case EstimateMode::kOracle: return oracle_estimates(data, oracle);
    }
    throw std::logic_error("pi0 spec: unknown mode");
  }

  // Stable key for sharing estimates/profiles between rows of one replication.
  std::string cache_key() const {
    char buf[48];
    switch (mode) {
      case EstimateMode::kNonAdaptive:
        return "ne";
      case EstimateMode::kFixedLambda:
        std::snprintf(buf, sizeof(buf), "storey:%.17g", lambda);
        return buf;
      case EstimateMode::kSchedule:
        std::snprintf(buf, sizeof(buf), "schedule:%.17g", exponent);
        return buf;
      case EstimateMode::kOracle: {
        std::string key = "oracle";
        for (double v : oracle) {
          std::snprintf(buf, sizeof(buf), ":%.17g", v);
          key += buf;
        }
        return key;
      }
    }
    throw std::logic_error("pi0 spec: unknown mode");
  }
};

enum class ProcedureKind { kBh, kIhw, kAddow, kAddowLcm, kSaddow, kAbh, kHzz, kPro1, kPro2, kOracleMwbh };

inline const char* kind_name(ProcedureKind kind) {
  switch (kind) {
    case ProcedureKind::kBh: return "bh";
    case ProcedureKind::kIhw: return "ihw";
    case ProcedureKind::kAddow: return "addow";
    case ProcedureKind::kAddowLcm: return "addow-lcm";
    case ProcedureKind::kSaddow: return "saddow";
    case ProcedureKind::kAbh: return "abh";
    case ProcedureKind::kHzz: return "hzz";
    case ProcedureKind::kPro1: return "pro1";
    case ProcedureKind::kPro2: return "pro2";
    case ProcedureKind::kOracleMwbh: return "oracle-mwbh";
  }
  throw std::logic_error("procedure: unknown kind");
}

inline ProcedureKind kind_from_name(const std::string& name) {
  for (ProcedureKind kind :
       {ProcedureKind::kBh, ProcedureKind::kIhw, ProcedureKind::kAddow, ProcedureKind::kAddowLcm,
        ProcedureKind::kSaddow, ProcedureKind::kAbh, ProcedureKind::kHzz, ProcedureKind::kPro1,
        ProcedureKind::kPro2, ProcedureKind::kOracleMwbh})
    if (name == kind_name(kind)) return kind;
  throw std::invalid_argument("procedure: unknown kind '" + name + "'");
}

struct ProcedureSpec {
  std::string name;  // report label
  ProcedureKind kind = ProcedureKind::kBh;
  Pi0Spec pi0;
};

enum class SweepKind { kSignal, kTotalCount };

// One grouped Gaussian template; the sweep moves either the signal knob or
// the total count.  Per-group means follow mu_g = mu_base_g + mu_scale_g * knob.
struct ScenarioConfig {
  std::vector<double> group_fractions;  // positive, sum to 1
  std::vector<double> pi0;              // true per-group null proportions
  std::vector<double> mu_base;
  std::vector<double> mu_scale;
  double alpha = 0.05;
  double beta = 0.0;   // pre-test level for saddow rows
  double mubar = 3.0;  // signal knob in force while sweeping the total count
  SweepKind sweep = SweepKind::kSignal;
  std::vector<double> sweep_values;
  std::size_t total = 4000;  // total count in force while sweeping the signal
  std::vector<ProcedureSpec> procedures;
  std::size_t replications = 1000;
  std::size_t quantile_replicates = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  GaussianModel model_at(std::size_t sweep_idx) const {
    if (sweep_idx >= sweep_values.size())
      throw std::invalid_argument("scenario: sweep index out of range");
    const double v = sweep_values[sweep_idx];
    const double signal = sweep == SweepKind::kSignal ? v : mubar;
    std::size_t m = total;
    if (sweep == SweepKind::kTotalCount) {
      if (!(v > 0.0) || v != std::floor(v))
        throw std::invalid_argument("scenario: total-count sweep values must be positive integers");
      m = static_cast<std::size_t>(v);
    }
    const std::size_t G = group_fractions.size();
    GaussianModel model;
    model.mu.resize(G);
    model.group_sizes.resize(G);
    model.null_counts.resize(G);
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < G; ++g) {
      if (g + 1 == G) {
        if (assigned >= m) throw std::invalid_argument("scenario: group fractions leave the last group empty");
        model.group_sizes[g] = m - assigned;  // last group absorbs rounding
      } else {
        model.group_sizes[g] =
            static_cast<std::size_t>(std::llround(group_fractions[g] * static_cast<double>(m)));
      }
      assigned += model.group_sizes[g];
      model.null_counts[g] = static_cast<std::size_t>(
          std::llround(pi0[g] * static_cast<double>(model.group_sizes[g])));
      model.mu[g] = mu_base[g] + mu_scale[g] * signal;
    }
    model.validate();
    return model;
  }

  void validate() const {
    const std::size_t G = group_fractions.size();
    if (G == 0) throw std::invalid_argument("scenario: no groups");
    if (pi0.size() != G || mu_base.size() != G || mu_scale.size() != G)
      throw std::invalid_argument("scenario: per-group fields must share one length");
    double fsum = 0.0;
    for (double f : group_fractions) {
      if (!(f > 0.0)) throw std::invalid_argument("scenario: group fractions must be positive");
      fsum += f;
    }
    if (std::abs(fsum - 1.0) > 1e-9)
      throw std::invalid_argument("scenario: group fractions must sum to 1");
    for (double p : pi0)
      if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("scenario: true pi0 must lie in (0,1)");
    detail::check_alpha(alpha);
    if (replications == 0) throw std::invalid_argument("scenario: need at least one replication");
    if (sweep_values.empty()) throw std::invalid_argument("scenario: empty sweep");
    if (procedures.empty()) throw std::invalid_argument("scenario: no procedures");

    bool any_saddow = false;
    std::set<std::string> names;
    for (const ProcedureSpec& spec : procedures) {
      if (spec.name.empty() || spec.name.find_first_of(",\"\n") != std::string::npos)
        throw std::invalid_argument("scenario: procedure names must be nonempty and csv-safe");
      if (!names.insert(spec.name).second)
        throw std::invalid_argument("scenario: duplicate procedure name '" + spec.name + "'");
      switch (spec.pi0.mode) {
        case EstimateMode::kNonAdaptive:
          break;
        case EstimateMode::kFixedLambda:
          if (!(spec.pi0.lambda > 0.0 && spec.pi0.lambda < 1.0))
            throw std::invalid_argument("scenario: storey lambda must lie in (0,1)");
          break;
        case EstimateMode::kSchedule:
          if (!(spec.pi0.exponent > 0.0 && spec.pi0.exponent < 0.5))
            throw std::invalid_argument("scenario: schedule exponent must lie in (0, 1/2)");
          break;
        case EstimateMode::kOracle:
          if (spec.kind == ProcedureKind::kOracleMwbh) break;  // limits come from the model
          if (spec.pi0.oracle.size() != G)
            throw std::invalid_argument("scenario: oracle pi0 lists must give one value per group");
          for (double v : spec.pi0.oracle)
            if (!(v > 0.0 && v <= 1.0))
              throw std::invalid_argument("scenario: oracle pi0 values must lie in (0,1]");
          break;
      }
      if ((spec.kind == ProcedureKind::kBh || spec.kind == ProcedureKind::kIhw) &&
          spec.pi0.mode != EstimateMode::kNonAdaptive)
        throw std::invalid_argument("scenario: bh and ihw rows are fixed to the non-estimating mode");
      if (spec.kind == ProcedureKind::kOracleMwbh && !spec.pi0.oracle.empty())
        throw std::invalid_argument(
            "scenario: oracle-mwbh rows derive population limits from the model; drop the explicit list");
      if (spec.kind == ProcedureKind::kSaddow) any_saddow = true;
    }
    if (any_saddow) {
      if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("scenario: saddow rows need beta in (0,1)");
      if (quantile_replicates == 0)
        throw std::invalid_argument("scenario: saddow rows need quantile replicates");
    }
    for (std::size_t i = 0; i < sweep_values.size(); ++i) model_at(i);  // throws if degenerate
  }
};

// Population limit of the per-group null-proportion estimator under the
// model.  The oracle rows build their weight budget from these limits rather
// than from data: 1 in the non-estimating mode, the true pi0 in oracle mode,
// and pi0 + (1-pi0) * (1-F(lambda))/(1-lambda) for a fixed-lambda estimator.
inline std::vector<double> population_pi0bar(const GaussianModel& model, const Pi0Spec& spec) {
  const std::size_t G = model.n_groups();
  std::vector<double> pibar(G, 1.0);
  switch (spec.mode) {
    case EstimateMode::kNonAdaptive:
      break;
    case EstimateMode::kOracle:
      for (std::size_t g = 0; g < G; ++g) pibar[g] = model.pi_g0(g);
      break;
    case EstimateMode::kFixedLambda:
    case EstimateMode::kSchedule: {
      const double lambda =
          spec.mode == EstimateMode::kSchedule
              ? 1.0 - std::pow(static_cast<double>(model.total()), -spec.exponent)
              : spec.lambda;
      if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("population pi0: lambda must lie in (0,1)");
      for (std::size_t g = 0; g < G; ++g) {
        const AlternativeCdf alt{model.mu[g]};
        // F concave with F(x) >= x, so the tail ratio never exceeds 1; the
        // min guards the float edge at tiny mu.
        const double tail = (1.0 - alt.F(lambda)) / (1.0 - lambda);
        pibar[g] = std::min(1.0, model.pi_g0(g) + model.pi_g1(g) * tail);
      }
      break;
    }
  }
  return pibar;
}

struct ReportRow {
  double sweep = 0.0;
  std::string procedure;
  std::size_t replications = 0;  // successful replications behind the means
  double fdr = 0.0, fdr_se = 0.0;
  double pow = 0.0, pow_se = 0.0;  // power with the m denominator
  double diffpow = 0.0;            // (m/m1) * (pow - pow_bh), paired
  double branch_rate = std::numeric_limits<double>::quiet_NaN();  // saddow rows only
  double pow_m1 = 0.0;             // power with the m1 denominator
  std::size_t m = 0, m1 = 0;
  std::size_t fallbacks = 0;  // degenerate estimates, bh substituted
  std::size_t errors = 0;     // failed replications, excluded from the means
  std::string note;
};

struct ScenarioReport {
  std::vector<ReportRow> rows;
};

namespace detail {
constexpr std::uint64_t kTableStream = 0x7ab1e;  // keeps table seeds off the data streams
}

inline ScenarioReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  const std::size_t P = config.procedures.size();
  const double alpha = config.alpha;
  const unsigned threads =
      config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());

  bool wants_table = false;
  for (const ProcedureSpec& spec : config.procedures)
    wants_table |= spec.kind == ProcedureKind::kSaddow;

  // Calibration tables depend on the shape only, so signal sweeps share one.
  std::map<std::size_t, NullQuantileTable> tables;

  struct Cell {
    MetricSample metric;
    double diff = 0.0;
    bool branch = false;
    std::uint8_t status = 0;  // 0 ok, 1 degenerate estimate (bh substituted), 2 failed
    std::string note;
  };

  ScenarioReport report;
  for (std::size_t si = 0; si < config.sweep_values.size(); ++si) {
    const GaussianModel model = config.model_at(si);
    const std::size_t m = model.total();
    std::size_t m1 = 0;
    for (std::size_t g = 0; g < model.n_groups(); ++g)
      m1 += model.group_sizes[g] - model.null_counts[g];

    // Population weight functions for the oracle rows, one per estimate mode.
    std::map<std::string, WeightFunction> oracle_w;
    for (const ProcedureSpec& spec : config.procedures) {
      if (spec.kind != ProcedureKind::kOracleMwbh) continue;
      const std::string key = spec.pi0.cache_key();
      if (oracle_w.count(key)) continue;
      const CostVector costs = cost_vector(model.group_sizes, population_pi0bar(model, spec.pi0));
      oracle_w.emplace(key, oracle_weight_function(model, costs, alpha));
    }

    const NullQuantileTable* table = nullptr;
    if (wants_table) {
      auto it = tables.find(m);
      if (it == tables.end())
        it = tables
                 .emplace(m, null_quantile_table(m, model.group_sizes, alpha,
                                                 config.quantile_replicates,
                                                 derive_seed(config.seed, detail::kTableStream, m)))
                 .first;
      table = &it->second;
    }

    std::vector<std::vector<Cell>> cells(config.replications, std::vector<Cell>(P));

    const auto run_rep = [&](std::size_t rep) {
      try {
        const GroupedPValues data = generate(model, derive_seed(config.seed, si, rep));
        const SortedPValues view(data);
        const StepUpOutcome bh_out = bh(view, alpha);
        const MetricSample bh_metric = metric_sample(bh_out.rejections, data);

        // Estimates, cost profiles, and pro pairs shared across this
        // replication's rows; keys follow the estimate mode.
        std::map<std::string, NullEstimates> est;
        std::map<std::string, MinCostProfile> prof;
        std::map<std::string, ProPair> pros;
        const auto est_for = [&](const Pi0Spec& s) -> const NullEstimates& {
          auto it = est.find(s.cache_key());
          if (it == est.end()) it = est.emplace(s.cache_key(), s.resolve(data)).first;
          return it->second;
        };
        const auto prof_for = [&](const Pi0Spec& s) -> const MinCostProfile& {
          auto it = prof.find(s.cache_key());
          if (it == prof.end())
            it = prof.emplace(s.cache_key(), min_cost_profile(view, cost_vector(view, est_for(s))))
                     .first;
          return it->second;
        };
        const Pi0Spec ne_spec{};

        for (std::size_t pi = 0; pi < P; ++pi) {
          const ProcedureSpec& spec = config.procedures[pi];
          Cell& cell = cells[rep][pi];
          try {
            StepUpOutcome out;
            switch (spec.kind) {
              case ProcedureKind::kBh:
                out = bh_out;
                break;
              case ProcedureKind::kIhw:
                out = addow_from_profile(view, prof_for(ne_spec), alpha);
                break;
              case ProcedureKind::kAddow:
                out = addow_from_profile(view, prof_for(spec.pi0), alpha);
                break;
              case ProcedureKind::kAddowLcm:
                out = addow_lcm(view, est_for(spec.pi0), alpha);
                break;
              case ProcedureKind::kAbh:
                out = abh(view, est_for(spec.pi0), alpha);
                break;
              case ProcedureKind::kHzz:
                try {
                  out = hzz(view, est_for(spec.pi0), alpha);
                } catch (const WeightsUndefinedError&) {
                  out = bh_out;
                  cell.status = 1;
                }
                break;
              case ProcedureKind::kPro1:
              case ProcedureKind::kPro2:
                try {
                  auto it = pros.find(spec.pi0.cache_key());
                  if (it == pros.end())
                    it = pros.emplace(spec.pi0.cache_key(),
                                      pro1_pro2(view, prof_for(spec.pi0), est_for(spec.pi0), alpha))
                             .first;
                  out = spec.kind == ProcedureKind::kPro1 ? it->second.pro1 : it->second.pro2;
                } catch (const WeightsUndefinedError&) {
                  out = bh_out;
                  cell.status = 1;
                }
                break;
              case ProcedureKind::kSaddow: {
                const double z = z_statistic(prof_for(ne_spec), alpha);
                const double q = table_quantile(*table, config.beta);
                cell.branch = z > q;
                out = cell.branch ? addow_from_profile(view, prof_for(spec.pi0), alpha) : bh_out;
                break;
              }
              case ProcedureKind::kOracleMwbh:
                out = mwbh(view, oracle_w.at(spec.pi0.cache_key()), alpha);
                break;
            }
            cell.metric = metric_sample(out.rejections, data);
            cell.diff = diff_pow(cell.metric.power, bh_metric.power, m, m1);
          } catch (const std::exception& e) {
            cell.status = 2;
            cell.note = e.what();
          }
        }
      } catch (const std::exception& e) {
        for (Cell& cell : cells[rep])
          if (cell.status != 2) {
            cell.status = 2;
            cell.note = e.what();
          }
      }
    };

    if (threads <= 1 || config.replications <= 1) {
      for (std::size_t r = 0; r < config.replications; ++r) run_rep(r);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      const std::size_t n = std::min<std::size_t>(threads, config.replications);
      for (std::size_t t = 0; t < n; ++t)
        pool.emplace_back([&] {
          for (std::size_t r = next.fetch_add(1); r < config.replications; r = next.fetch_add(1))
            run_rep(r);
        });
      for (std::thread& th : pool) th.join();
    }

    // Ordered reduction over the replication index: identical output for any
    // thread count.
    for (std::size_t pi = 0; pi < P; ++pi) {
      ReportRow row;
      row.sweep = config.sweep_values[si];
      row.procedure = config.procedures[pi].name;
      row.m = m;
      row.m1 = m1;
      std::size_t n = 0, branches = 0;
      double fdr = 0.0, pw = 0.0, diff = 0.0;
      for (std::size_t r = 0; r < config.replications; ++r) {
        const Cell& cell = cells[r][pi];
        if (cell.status == 2) {
          ++row.errors;
          if (row.note.empty()) row.note = cell.note;
          continue;
        }
        if (cell.status == 1) ++row.fallbacks;
        ++n;
        fdr += cell.metric.fdp;
        pw += cell.metric.power;
        diff += cell.diff;
        branches += cell.branch;
      }
      row.replications = n;
      if (n > 0) {
        const double dn = static_cast<double>(n);
        row.fdr = fdr / dn;
        row.pow = pw / dn;
        row.diffpow = diff / dn;
        row.pow_m1 = row.pow * static_cast<double>(m) / static_cast<double>(m1);
        if (n > 1) {
          double vf = 0.0, vp = 0.0;
          for (std::size_t r = 0; r < config.replications; ++r) {
            const Cell& cell = cells[r][pi];
            if (cell.status == 2) continue;
            vf += (cell.metric.fdp - row.fdr) * (cell.metric.fdp - row.fdr);
            vp += (cell.metric.power - row.pow) * (cell.metric.power - row.pow);
          }
          row.fdr_se = std::sqrt(vf / (dn - 1.0) / dn);
          row.pow_se = std::sqrt(vp / (dn - 1.0) / dn);
        }
        if (config.procedures[pi].kind == ProcedureKind::kSaddow)
          row.branch_rate = static_cast<double>(branches) / dn;
      }
      if (row.fallbacks > 0 && row.note.empty())
        row.note = "pi0 estimate degenerate; bh substituted";
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---- report serialization ----

enum class ReportFormat { kCsv, kJson };

namespace detail {
inline std::string format_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace detail

// CSV carries the plotted columns at 6 significant digits; JSON carries the
// full row and round-trips exactly.
inline void emit_report(const ScenarioReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::kCsv) {
    out << "sweep,procedure,fdr,fdr_se,pow,pow_se,diffpow,branch_rate\n";
    for (const ReportRow& row : report.rows) {
      out << detail::format_g6(row.sweep) << ',' << row.procedure << ','
          << detail::format_g6(row.fdr) << ',' << detail::format_g6(row.fdr_se) << ','
          << detail::format_g6(row.pow) << ',' << detail::format_g6(row.pow_se) << ','
          << detail::format_g6(row.diffpow) << ',';
      if (!std::isnan(row.branch_rate)) out << detail::format_g6(row.branch_rate);
      out << '\n';
    }
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const ReportRow& row : report.rows) {
      nlohmann::json j{{"sweep", row.sweep},
                       {"procedure", row.procedure},
                       {"replications", row.replications},
                       {"fdr", row.fdr},
                       {"fdr_se", row.fdr_se},
                       {"pow", row.pow},
                       {"pow_se", row.pow_se},
                       {"diffpow", row.diffpow},
                       {"pow_m1", row.pow_m1},
                       {"m", row.m},
                       {"m1", row.m1},
                       {"fallbacks", row.fallbacks},
                       {"errors", row.errors},
                       {"note", row.note}};
      if (std::isnan(row.branch_rate))
        j["branch_rate"] = nullptr;
      else
        j["branch_rate"] = row.branch_rate;
      rows.push_back(std::move(j));
    }
    out << nlohmann::json{{"rows", std::move(rows)}}.dump(2) << '\n';
  }
  if (!out) throw std::runtime_error("report: write failed");
}

inline void emit_report(const ScenarioReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path);
  emit_report(report, format, out);
}

inline ScenarioReport load_report(std::istream& in) {
  ScenarioReport report;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const nlohmann::json& r : j.at("rows")) {
      ReportRow row;
      row.sweep = r.at("sweep").get<double>();
      row.procedure = r.at("procedure").get<std::string>();
      row.replications = r.at("replications").get<std::size_t>();
      row.fdr = r.at("fdr").get<double>();
      row.fdr_se = r.at("fdr_se").get<double>();
      row.pow = r.at("pow").get<double>();
      row.pow_se = r.at("pow_se").get<double>();
      row.diffpow = r.at("diffpow").get<double>();
      row.pow_m1 = r.at("pow_m1").get<double>();
      row.m = r.at("m").get<std::size_t>();
      row.m1 = r.at("m1").get<std::size_t>();
      row.fallbacks = r.at("fallbacks").get<std::size_t>();
      row.errors = r.at("errors").get<std::size_t>();
      row.note = r.at("note").get<std::string>();
      if (!r.at("branch_rate").is_null()) row.branch_rate = r.at("branch_rate").get<double>();
      report.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("report: ") + e.what());
  }
  return report;
}

inline ScenarioReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  return load_report(in);
}

// Reads back the CSV emission; only the plotted columns survive, at the
// 6-digit precision they were written with.
inline ScenarioReport load_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line) != "sweep,procedure,fdr,fdr_se,pow,pow_se,diffpow,branch_rate")
    throw std::runtime_error("report: unexpected csv header");
  ScenarioReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != 8)
      throw std::runtime_error("report: line " + std::to_string(line_no) + ": expected 8 fields");
    ReportRow row;
    row.sweep = detail::parse_double(tok[0], line_no);
    row.procedure = std::string(detail::trim(tok[1]));
    row.fdr = detail::parse_double(tok[2], line_no);
    row.fdr_se = detail::parse_double(tok[3], line_no);
    row.pow = detail::parse_double(tok[4], line_no);
    row.pow_se = detail::parse_double(tok[5], line_no);
    row.diffpow = detail::parse_double(tok[6], line_no);
    if (!detail::trim(tok[7]).empty()) row.branch_rate = detail::parse_double(tok[7], line_no);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---- scenario configuration serialization ----

inline const char* mode_name(EstimateMode mode) {
  switch (mode) {
    case EstimateMode::kNonAdaptive: return "ne";
    case EstimateMode::kFixedLambda: return "storey";
    case EstimateMode::kSchedule: return "schedule";
    case EstimateMode::kOracle: return "oracle";
  }
  throw std::logic_error("estimate mode: unknown value");
}

inline EstimateMode mode_from_name(const std::string& name) {
  for (EstimateMode mode : {EstimateMode::kNonAdaptive, EstimateMode::kFixedLambda,
                            EstimateMode::kSchedule, EstimateMode::kOracle})
    if (name == mode_name(mode)) return mode;
  throw std::invalid_argument("estimate mode: unknown name '" + name + "'");
}

inline void save_config(const ScenarioConfig& config, std::ostream& out) {
  nlohmann::json procs = nlohmann::json::array();
  for (const ProcedureSpec& spec : config.procedures) {
    nlohmann::json p{{"name", spec.name}, {"kind", kind_name(spec.kind)}};
    nlohmann::json e{{"mode", mode_name(spec.pi0.mode)}};
    if (spec.pi0.mode == EstimateMode::kFixedLambda) e["lambda"] = spec.pi0.lambda;
    if (spec.pi0.mode == EstimateMode::kSchedule) e["exponent"] = spec.pi0.exponent;
    if (spec.pi0.mode == EstimateMode::kOracle && !spec.pi0.oracle.empty())
      e["oracle"] = spec.pi0.oracle;
    p["pi0"] = std::move(e);
    procs.push_back(std::move(p));
  }
  const nlohmann::json j{{"group_fractions", config.group_fractions},
                         {"pi0", config.pi0},
                         {"mu_base", config.mu_base},
                         {"mu_scale", config.mu_scale},
                         {"alpha", config.alpha},
                         {"beta", config.beta},
                         {"mubar", config.mubar},
                         {"sweep", config.sweep == SweepKind::kSignal ? "signal" : "total"},
                         {"sweep_values", config.sweep_values},
                         {"total", config.total},
                         {"procedures", std::move(procs)},
                         {"replications", config.replications},
                         {"quantile_replicates", config.quantile_replicates},
                         {"seed", config.seed},
                         {"threads", config.threads}};
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("scenario config: write failed");
}

inline void save_config(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("scenario config: cannot open " + path);
  save_config(config, out);
}

inline ScenarioConfig load_config(std::istream& in) {
  ScenarioConfig config;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    config.group_fractions = j.at("group_fractions").get<std::vector<double>>();
    config.pi0 = j.at("pi0").get<std::vector<double>>();
    config.mu_base = j.at("mu_base").get<std::vector<double>>();
    config.mu_scale = j.at("mu_scale").get<std::vector<double>>();
    config.alpha = j.at("alpha").get<double>();
    config.beta = j.value("beta", 0.0);
    config.mubar = j.value("mubar", 3.0);
    const std::string sweep = j.at("sweep").get<std::string>();
    if (sweep == "signal")
      config.sweep = SweepKind::kSignal;
    else if (sweep == "total")
      config.sweep = SweepKind::kTotalCount;
    else
      throw std::invalid_argument("scenario config: sweep must be 'signal' or 'total'");
    config.sweep_values = j.at("sweep_values").get<std::vector<double>>();
    config.total = j.value("total", std::size_t{4000});
    config.replications = j.value("replications", std::size_t{1000});
    config.quantile_replicates = j.value("quantile_replicates", std::size_t{1000});
    config.seed = j.value("seed", std::uint64_t{1});
    config.threads = j.value("threads", 0u);
    for (const nlohmann::json& p : j.at("procedures")) {
      ProcedureSpec spec;
      spec.name = p.at("name").get<std::string>();
      spec.kind = kind_from_name(p.at("kind").get<std::string>());
      if (p.contains("pi0")) {
        const nlohmann::json& e = p.at("pi0");
        spec.pi0.mode = mode_from_name(e.at("mode").get<std::string>());
        spec.pi0.lambda = e.value("lambda", kDefaultLambda);
        spec.pi0.exponent = e.value("exponent", kDefaultScheduleExponent);
        if (e.contains("oracle")) spec.pi0.oracle = e.at("oracle").get<std::vector<double>>();
      }
      config.procedures.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scenario config: ") + e.what());
  }
  config.validate();
  return config;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario config: cannot open " + path);
  return load_config(in);
}

// ---- presets ----

// Two equal groups, mu = (knob, 2*knob), signal swept from faint to strong.
inline ScenarioConfig scenario1() {
  ScenarioConfig c;
  c.group_fractions = {0.5, 0.5};
  c.pi0 = {0.7, 0.8};
  c.mu_base = {0.0, 0.0};
  c.mu_scale = {1.0, 2.0};
  c.alpha = 0.05;
  c.beta = 0.001;
  c.sweep = SweepKind::kSignal;
  c.sweep_values = {0.01, 0.02, 0.05, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0};
  c.total = 4000;
  c.replications = 1000;
  c.quantile_replicates = 10000;
  Pi0Spec ne;
  Pi0Spec storey;
  storey.mode = EstimateMode::kFixedLambda;
  storey.lambda = 0.5;
  c.procedures = {{"bh", ProcedureKind::kBh, ne},
                  {"oracle-mwbh-ne", ProcedureKind::kOracleMwbh, ne},
                  {"ihw", ProcedureKind::kIhw, ne},
                  {"pro2-ne", ProcedureKind::kPro2, ne},
                  {"saddow-ne", ProcedureKind::kSaddow, ne},
                  {"oracle-mwbh-storey", ProcedureKind::kOracleMwbh, storey},
                  {"addow-storey", ProcedureKind::kAddow, storey},
                  {"pro2-storey", ProcedureKind::kPro2, storey},
                  {"abh-storey", ProcedureKind::kAbh, storey},
                  {"hzz-storey", ProcedureKind::kHzz, storey},
                  {"saddow-storey", ProcedureKind::kSaddow, storey}};
  return c;
}

// Small sparse group against a large dense one at a high level; the regime
// where plain bh beats the non-estimating optimizer.
inline ScenarioConfig scenario2() {
  ScenarioConfig c;
  c.group_fractions = {0.1, 0.9};
  c.pi0 = {0.05, 0.85};
  c.mu_base = {2.0, 0.0};
  c.mu_scale = {0.0, 1.0};
  c.alpha = 0.7;
  c.sweep = SweepKind::kSignal;
  c.sweep_values = {1.7, 1.8, 1.9, 2.0, 2.1, 2.2, 2.3};
  c.total = 10000;
  c.replications = 1000;
  Pi0Spec ne;
  Pi0Spec storey;
  storey.mode = EstimateMode::kFixedLambda;
  storey.lambda = 0.5;
  c.procedures = {{"bh", ProcedureKind::kBh, ne},
                  {"ihw", ProcedureKind::kIhw, ne},
                  {"addow-storey", ProcedureKind::kAddow, storey}};
  return c;
}

// Fixed signal, total count swept; exercises the stabilized dispatch.
inline ScenarioConfig scenario3(double mubar = 3.0) {
  ScenarioConfig c;
  c.group_fractions = {0.5, 0.5};
  c.pi0 = {0.8, 0.8};
  c.mu_base = {0.0, 0.0};
  c.mu_scale = {1.0, 2.0};
  c.alpha = 0.05;
  c.beta = 0.05;
  c.mubar = mubar;
  c.sweep = SweepKind::kTotalCount;
  c.sweep_values = {100, 300, 500, 1000, 2000, 5000};
  c.replications = 1000;
  c.quantile_replicates = 1000;
  Pi0Spec ne;
  c.procedures = {{"bh", ProcedureKind::kBh, ne},
                  {"ihw", ProcedureKind::kIhw, ne},
                  {"saddow-ne", ProcedureKind::kSaddow, ne}};
  return c;
}

inline ScenarioConfig preset(const std::string& name) {
  if (name == "scenario1") return scenario1();
  if (name == "scenario2") return scenario2();
  if (name == "scenario3") return scenario3();
  throw std::invalid_argument("preset: unknown name '" + name + "'");
}

}  // namespace addow

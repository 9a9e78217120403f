#pragma once
// Weak-signal guard: the calibration statistic Z_m, a Monte Carlo table of
// its full-null distribution, and the stabilized dispatch that runs the
// optimizer only when the observed statistic clears the table quantile.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "addow/addow.hpp"
#include "addow/estimation.hpp"
#include "addow/model.hpp"
#include "addow/rng.hpp"
#include "addow/stepup.hpp"

namespace addow {

// Z_m = sqrt(m) * max over u in {k/m, 1 <= k <= m} of (max_w G_hat_w(u) - alpha*u),
// inner max over the non-adaptive weight space, i.e. r(k)/m with
// r(k) = max{r: minCostNE[r] <= alpha*k/m}.  Both sides of that predicate
// are nondecreasing, so all k are served by one merged scan.
// The profile must have been built with the non-adaptive costs m_g/m.
inline double z_statistic(const MinCostProfile& ne_profile, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t m = ne_profile.m;
  const double md = static_cast<double>(m);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t r = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double budget = alpha * (static_cast<double>(k) / md);
    while (r < m && leq_guard(ne_profile.min_cost[r + 1], budget)) ++r;
    best = std::max(best, static_cast<double>(r) / md - budget);
  }
  return std::sqrt(md) * best;
}

inline double z_statistic(const SortedPValues& view, double alpha) {
  std::vector<std::size_t> sizes(view.n_groups());
  for (std::size_t g = 0; g < sizes.size(); ++g) sizes[g] = view.group_size(g);
  return z_statistic(min_cost_profile(view, ne_costs(sizes)), alpha);
}

inline double z_statistic(const GroupedPValues& data, double alpha) {
  return z_statistic(SortedPValues(data), alpha);
}

struct NullQuantileTable {
  std::size_t m = 0;
  std::vector<std::size_t> group_sizes;
  double alpha = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<double> samples;  // simulated full-null statistics, ascending
};

// Simulates `replicates` full-null datasets (independent uniforms in the
// given group shape) and records the sorted statistics.  Each replicate uses
// its own derived RNG stream, so the table is reproducible under any
// evaluation order.
inline NullQuantileTable null_quantile_table(std::size_t m, const std::vector<std::size_t>& group_sizes,
                                             double alpha, std::size_t replicates, std::uint64_t seed) {
  detail::check_alpha(alpha);
  if (group_sizes.empty()) throw std::invalid_argument("null table: needs at least one group");
  std::size_t total = 0;
  for (std::size_t s : group_sizes) total += s;
  if (total != m || m == 0) throw std::invalid_argument("null table: group sizes do not sum to m");
  if (replicates == 0) throw std::invalid_argument("null table: needs at least one replicate");

  GroupedPValues data;
  data.names.resize(group_sizes.size());
  data.pvalues.resize(group_sizes.size());
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    data.names[g] = "g" + std::to_string(g + 1);
    data.pvalues[g].resize(group_sizes[g]);
  }

  NullQuantileTable table{m, group_sizes, alpha, replicates, seed, {}};
  table.samples.resize(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    auto rng = make_engine(derive_seed(seed, b));
    for (auto& group : data.pvalues)
      for (double& p : group) p = uniform01(rng);
    table.samples[b] = z_statistic(SortedPValues(data), alpha);
  }
  std::sort(table.samples.begin(), table.samples.end());
  return table;
}

// Conservative empirical quantile: the ceil((1-beta)(B+1))-th smallest
// sample, capped at the largest one.
inline double table_quantile(const NullQuantileTable& table, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  if (table.samples.empty() || table.samples.size() != table.replicates)
    throw std::invalid_argument("null table: sample count does not match replicates");
  const double b1 = static_cast<double>(table.replicates + 1);
  auto idx = static_cast<std::size_t>(std::ceil((1.0 - beta) * b1));
  idx = std::min(idx, table.replicates);
  return table.samples[idx - 1];
}

inline void save_table(const NullQuantileTable& table, std::ostream& out) {
  nlohmann::json j;
  j["m"] = table.m;
  j["group_sizes"] = table.group_sizes;
  j["alpha"] = table.alpha;
  j["B"] = table.replicates;
  j["seed"] = table.seed;
  j["samples"] = table.samples;
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("null table: write failed");
}

inline void save_table(const NullQuantileTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("null table: cannot open " + path + " for writing");
  save_table(table, out);
}

inline NullQuantileTable load_table(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    NullQuantileTable table;
    table.m = j.at("m").get<std::size_t>();
    table.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
    table.alpha = j.at("alpha").get<double>();
    table.replicates = j.at("B").get<std::size_t>();
    table.seed = j.at("seed").get<std::uint64_t>();
    table.samples = j.at("samples").get<std::vector<double>>();
    if (table.samples.size() != table.replicates || table.samples.empty())
      throw std::runtime_error("sample count does not match B");
    if (!std::is_sorted(table.samples.begin(), table.samples.end()))
      throw std::runtime_error("samples are not sorted");
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("null table: malformed file: ") + e.what());
  }
}

inline NullQuantileTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("null table: cannot open " + path);
  try {
    return load_table(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + path + "]");
  }
}

struct SaddowOutcome {
  StepUpOutcome outcome;
  bool used_addow = false;  // true: statistic cleared the quantile, optimizer ran
  double z = 0.0;
  double q = 0.0;
};

// Stabilized dispatch: run the optimizer only if Z_m strictly exceeds the
// table quantile at level beta, otherwise plain BH.  The table must have
// been built for the same shape and alpha.
inline SaddowOutcome saddow(const SortedPValues& view, const NullEstimates& estimates, double alpha,
                            double beta, const NullQuantileTable& table) {
  detail::check_alpha(alpha);
  if (table.m != view.m) throw std::invalid_argument("saddow: table built for a different m");
  if (table.group_sizes.size() != view.n_groups())
    throw std::invalid_argument("saddow: table built for a different group count");
  for (std::size_t g = 0; g < view.n_groups(); ++g)
    if (table.group_sizes[g] != view.group_size(g))
      throw std::invalid_argument("saddow: table built for different group sizes");
  if (table.alpha != alpha) throw std::invalid_argument("saddow: table built for a different alpha");

  SaddowOutcome out;
  out.z = z_statistic(view, alpha);
  out.q = table_quantile(table, beta);
  out.used_addow = out.z > out.q;
  out.outcome = out.used_addow ? addow(view, estimates, alpha) : bh(view, alpha);
  return out;
}

inline SaddowOutcome saddow(const GroupedPValues& data, const NullEstimates& estimates, double alpha,
                            double beta, const NullQuantileTable& table) {
  return saddow(SortedPValues(data), estimates, alpha, beta, table);
}

}  // namespace addow

#pragma once
// The ADDOW optimizer: exact minimum-cost rejection profiles over count
// splits (a multiple-choice knapsack specialized to threshold costs), the
// data-driven optimal weighting procedure, its LCM-regularized variant, and
// IHW as the non-adaptive special case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "addow/estimation.hpp"
#include "addow/model.hpp"
#include "addow/stepup.hpp"

namespace addow {

using CostVector = std::vector<double>;

// c_g = (m_g/m) * pi0_hat_g: the budget coefficient of group g in the
// adaptive weight space {w >= 0 : sum_g c_g w_g <= 1}.
inline CostVector cost_vector(const std::vector<std::size_t>& group_sizes, const std::vector<double>& pi0) {
  if (group_sizes.size() != pi0.size()) throw std::invalid_argument("costs: group count mismatch");
  std::size_t m = 0;
  for (std::size_t s : group_sizes) m += s;
  CostVector c(group_sizes.size());
  for (std::size_t g = 0; g < c.size(); ++g) {
    if (!(pi0[g] > 0.0 && pi0[g] <= 1.0)) throw std::invalid_argument("costs: pi0 must lie in (0,1]");
    c[g] = (static_cast<double>(group_sizes[g]) / static_cast<double>(m)) * pi0[g];
  }
  return c;
}

inline CostVector ne_costs(const std::vector<std::size_t>& group_sizes) {
  return cost_vector(group_sizes, std::vector<double>(group_sizes.size(), 1.0));
}

inline CostVector cost_vector(const SortedPValues& view, const NullEstimates& estimates) {
  std::vector<std::size_t> sizes(view.n_groups());
  for (std::size_t g = 0; g < sizes.size(); ++g) sizes[g] = view.group_size(g);
  return cost_vector(sizes, estimates.pi0);
}

// a <= b up to a relative 1e-12 guard absorbing summation noise; both
// operands are nonnegative costs/budgets.
inline bool leq_guard(double a, double b) { return a <= b + 1e-12 * std::max(a, b); }

// minCost[r] = min over splits (k_1..k_G), sum k_g = r, of sum_g c_g * p_{g,(k_g)}
// with p_{g,(0)} = 0.  Computed by a min-plus dynamic program across groups;
// per-stage tables are kept so an optimal split is recoverable for any r.
struct MinCostProfile {
  std::vector<double> min_cost;                 // size m+1
  std::vector<std::vector<double>> group_cost;  // group_cost[g][k] = c_g * p_{g,(k)}
  std::vector<std::vector<double>> suffix;      // suffix[g]: min cost using groups g..G-1
  std::size_t m = 0;

  // Optimal split at count r; ties go to larger counts in lower-indexed
  // groups.  The equality search is bit-exact: it re-forms the same sums the
  // forward pass minimized over.
  std::vector<std::size_t> split_at(std::size_t r) const {
    const std::size_t G = group_cost.size();
    std::vector<std::size_t> split(G, 0);
    std::size_t rem = r;
    for (std::size_t g = 0; g + 1 < G; ++g) {
      const auto& rest = suffix[g + 1];
      const auto& own = group_cost[g];
      const double target = suffix[g][rem];
      const std::size_t khi = std::min(own.size() - 1, rem);
      const std::size_t klo = rem >= rest.size() ? rem - (rest.size() - 1) : 0;
      bool found = false;
      for (std::size_t k = khi + 1; k-- > klo;)
        if (own[k] + rest[rem - k] == target) {
          split[g] = k;
          rem -= k;
          found = true;
          break;
        }
      if (!found) throw std::logic_error("profile: backtrack failed to reproduce the stage cost");
    }
    split[G - 1] = rem;
    return split;
  }
};

namespace detail {

inline std::vector<double> min_plus(const std::vector<double>& prev, const std::vector<double>& own) {
  std::vector<double> out(prev.size() + own.size() - 1, std::numeric_limits<double>::infinity());
  const std::size_t n = prev.size();
  const double* p = prev.data();
  for (std::size_t k = 0; k < own.size(); ++k) {
    const double ck = own[k];
    double* o = out.data() + k;
    for (std::size_t j = 0; j < n; ++j) o[j] = std::min(o[j], p[j] + ck);
  }
  return out;
}

}  // namespace detail

inline MinCostProfile min_cost_profile(const SortedPValues& view, const CostVector& costs) {
  const std::size_t G = view.n_groups();
  if (costs.size() != G) throw std::invalid_argument("profile: cost/group count mismatch");
  for (std::size_t g = 0; g < G; ++g) {
    const double cap = static_cast<double>(view.group_size(g)) / static_cast<double>(view.m);
    if (!(costs[g] > 0.0) || costs[g] > cap * (1.0 + 1e-12))
      throw std::invalid_argument("profile: costs must lie in (0, m_g/m]");
  }
  MinCostProfile profile;
  profile.m = view.m;
  profile.group_cost.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    auto& gc = profile.group_cost[g];
    gc.resize(view.group_size(g) + 1);
    gc[0] = 0.0;
    for (std::size_t k = 1; k < gc.size(); ++k) gc[k] = costs[g] * view.values[g][k - 1];
  }
  profile.suffix.resize(G);
  profile.suffix[G - 1] = profile.group_cost[G - 1];
  for (std::size_t g = G - 1; g > 0; --g)
    profile.suffix[g - 1] = detail::min_plus(profile.suffix[g], profile.group_cost[g - 1]);
  profile.min_cost = profile.suffix[0];
  for (std::size_t r = 1; r <= profile.m; ++r)
    if (profile.min_cost[r] < profile.min_cost[r - 1])
      throw std::logic_error("profile: min cost decreased in r");
  return profile;
}

inline MinCostProfile min_cost_profile(const GroupedPValues& data, const CostVector& costs) {
  return min_cost_profile(SortedPValues(data), costs);
}

namespace detail {

// Minimal weight whose reported threshold covers the boundary order
// statistic: starts from p/(alpha*u) and rounds up by ulps until
// threshold(alpha, u, w) >= p again under floating-point arithmetic.
inline double boundary_weight(double p, double alpha, double u) {
  if (p == 0.0) return 0.0;
  const double y = alpha * u;
  double w = p / y;
  while (y * w < p) w = std::nextafter(w, std::numeric_limits<double>::infinity());
  return w;
}

inline StepUpOutcome empty_outcome(const SortedPValues& view, double alpha) {
  RejectionSet r;
  r.by_group.resize(view.n_groups());
  return StepUpOutcome{0.0, WeightVector(view.n_groups(), 0.0), std::move(r), alpha};
}

inline WeightVector weights_from_split(const SortedPValues& view, const std::vector<std::size_t>& split,
                                       double alpha, double u) {
  WeightVector w(split.size(), 0.0);
  for (std::size_t g = 0; g < split.size(); ++g)
    w[g] = boundary_weight(view.order_stat(g, split[g]), alpha, u);
  return w;
}

}  // namespace detail

// Weight vector maximizing the rejection count at threshold u within the
// budget: r* = max{r: minCost[r] <= alpha*u}, weights from the optimal split
// scaled by 1/(alpha*u).  u = 0 returns the zero vector.
inline WeightVector argmax_weights_at(const SortedPValues& view, const MinCostProfile& profile, double alpha,
                                      double u) {
  detail::check_alpha(alpha);
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("argmax weights: u must lie in [0,1]");
  if (u == 0.0) return WeightVector(view.n_groups(), 0.0);
  const double budget = alpha * u;
  std::size_t r_star = 0;
  for (std::size_t r = profile.m; r > 0; --r)
    if (leq_guard(profile.min_cost[r], budget)) {
      r_star = r;
      break;
    }
  return detail::weights_from_split(view, profile.split_at(r_star), alpha, u);
}

inline WeightVector argmax_weights_at(const GroupedPValues& data, const NullEstimates& estimates, double alpha,
                                      double u) {
  SortedPValues view(data);
  const auto profile = min_cost_profile(view, cost_vector(view, estimates));
  return argmax_weights_at(view, profile, alpha, u);
}

// ADDOW from a precomputed profile: u_hat = (1/m) max{r: minCost[r] <= alpha*r/m}.
// The rejection set is read off the optimal split; at the maximal r_hat no
// tie block straddles the boundary (a spilled tie would certify r_hat + 1),
// so the split agrees with the literal rule {p <= alpha*u_hat*w}.
inline StepUpOutcome addow_from_profile(const SortedPValues& view, const MinCostProfile& profile,
                                        double alpha) {
  detail::check_alpha(alpha);
  const double md = static_cast<double>(view.m);
  std::size_t r_hat = 0;
  for (std::size_t r = profile.m; r > 0; --r)
    if (leq_guard(profile.min_cost[r], alpha * (static_cast<double>(r) / md))) {
      r_hat = r;
      break;
    }
  if (r_hat == 0) return detail::empty_outcome(view, alpha);
  const double u_hat = static_cast<double>(r_hat) / md;
  const auto split = profile.split_at(r_hat);
  return StepUpOutcome{u_hat, detail::weights_from_split(view, split, alpha, u_hat),
                       view.take_smallest(split), alpha};
}

inline StepUpOutcome addow(const SortedPValues& view, const NullEstimates& estimates, double alpha) {
  return addow_from_profile(view, min_cost_profile(view, cost_vector(view, estimates)), alpha);
}

inline StepUpOutcome addow(const GroupedPValues& data, const NullEstimates& estimates, double alpha) {
  return addow(SortedPValues(data), estimates, alpha);
}

// IHW is ADDOW in the non-adaptive regime (pi0_hat = 1 everywhere).
inline StepUpOutcome ihw(const SortedPValues& view, double alpha) {
  NullEstimates ne{std::vector<double>(view.n_groups(), 1.0), EstimateMode::kNonAdaptive, 0.0, 1.0};
  return addow(view, ne, alpha);
}

inline StepUpOutcome ihw(const GroupedPValues& data, double alpha) { return ihw(SortedPValues(data), alpha); }

namespace detail {

// One group's least concave majorant of the rejection-count curve, as hull
// vertices (threshold x, count k).  Vertices: (0,0), then (0,z) when the
// group holds z exact zeros (free units), then the hull over distinct
// positive thresholds with cumulative counts, capped at (1, m_g).  Unit
// costs c_g*(dx/dk) ascend along edges by concavity.
struct LcmEdges {
  std::vector<double> x;
  std::vector<std::size_t> k;
};

inline LcmEdges lcm_edges(const std::vector<double>& sorted, std::size_t mg) {
  std::size_t zeros = 0;
  while (zeros < mg && sorted[zeros] == 0.0) ++zeros;
  std::vector<double> px{0.0};
  std::vector<std::size_t> pk{0};
  if (zeros > 0) {
    px.push_back(0.0);
    pk.push_back(zeros);
  }
  for (std::size_t i = zeros; i < mg; ++i) {
    const double v = sorted[i];
    if (v == px.back())
      pk.back() = i + 1;
    else {
      px.push_back(v);
      pk.push_back(i + 1);
    }
  }
  if (px.back() < 1.0) {
    px.push_back(1.0);
    pk.push_back(mg);
  }
  LcmEdges hull;
  for (std::size_t i = 0; i < px.size(); ++i) {
    while (hull.x.size() >= 2) {
      const std::size_t n = hull.x.size();
      const double ax = hull.x[n - 2], ay = static_cast<double>(hull.k[n - 2]);
      const double bx = hull.x[n - 1], by = static_cast<double>(hull.k[n - 1]);
      const double cross = (bx - ax) * (static_cast<double>(pk[i]) - ay) - (by - ay) * (px[i] - ax);
      if (cross >= 0.0) {
        hull.x.pop_back();
        hull.k.pop_back();
      } else {
        break;
      }
    }
    hull.x.push_back(px[i]);
    hull.k.push_back(pk[i]);
  }
  return hull;
}

}  // namespace detail

// LCM-regularized ADDOW: each group's step objective is replaced by its least
// concave majorant, so the minimum-cost profile is the greedy merge of
// per-group marginal costs, ascending (exact for the concave objective; ties
// go to the lower-indexed group).  The threshold rule matches addow; the
// realized rejection count can fall below m*u_hat because the majorant
// overcounts at interpolated thresholds.
inline StepUpOutcome addow_lcm(const SortedPValues& view, const NullEstimates& estimates, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t G = view.n_groups(), m = view.m;
  const double md = static_cast<double>(m);
  const CostVector costs = cost_vector(view, estimates);

  std::vector<detail::LcmEdges> hulls(G);
  for (std::size_t g = 0; g < G; ++g) hulls[g] = detail::lcm_edges(view.values[g], view.group_size(g));

  struct Cursor {
    std::size_t edge = 0;  // edge index: from vertex `edge` to `edge`+1
    std::size_t used = 0;  // units consumed on the current edge
  };
  const auto skip_flat = [](const detail::LcmEdges& h, Cursor& c) {
    while (c.edge + 1 < h.k.size() && h.k[c.edge + 1] == h.k[c.edge]) ++c.edge;
  };
  const auto consume = [&skip_flat](const detail::LcmEdges& h, Cursor& c) {
    skip_flat(h, c);
    if (++c.used == h.k[c.edge + 1] - h.k[c.edge]) {
      ++c.edge;
      c.used = 0;
    }
  };

  std::vector<Cursor> cur(G);
  std::vector<double> min_cost(m + 1, 0.0);
  std::vector<std::uint32_t> take(m + 1, 0);  // group consumed at step r (for the replay)
  double cum = 0.0;
  for (std::size_t r = 1; r <= m; ++r) {
    std::size_t best = G;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < G; ++g) {
      const auto& h = hulls[g];
      auto& c = cur[g];
      skip_flat(h, c);
      if (c.edge + 1 >= h.x.size()) continue;  // group exhausted
      const double uc =
          costs[g] * (h.x[c.edge + 1] - h.x[c.edge]) / static_cast<double>(h.k[c.edge + 1] - h.k[c.edge]);
      if (uc < best_cost) {
        best_cost = uc;
        best = g;
      }
    }
    if (best == G) throw std::logic_error("lcm merge: ran out of units before m");
    cum += best_cost;
    min_cost[r] = cum;
    take[r] = static_cast<std::uint32_t>(best);
    consume(hulls[best], cur[best]);
  }

  std::size_t r_hat = 0;
  for (std::size_t r = m; r > 0; --r)
    if (leq_guard(min_cost[r], alpha * (static_cast<double>(r) / md))) {
      r_hat = r;
      break;
    }
  if (r_hat == 0) return detail::empty_outcome(view, alpha);
  const double u_hat = static_cast<double>(r_hat) / md;

  // replay the first r_hat units to recover per-group thresholds
  std::vector<Cursor> rep(G);
  for (std::size_t r = 1; r <= r_hat; ++r) consume(hulls[take[r]], rep[take[r]]);
  WeightVector w(G, 0.0);
  std::vector<std::size_t> counts(G, 0);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& h = hulls[g];
    const auto& c = rep[g];
    double t;
    if (c.used == 0)
      t = h.x[c.edge];
    else
      t = h.x[c.edge] + static_cast<double>(c.used) * (h.x[c.edge + 1] - h.x[c.edge]) /
                            static_cast<double>(h.k[c.edge + 1] - h.k[c.edge]);
    w[g] = detail::boundary_weight(t, alpha, u_hat);
    counts[g] = view.count_leq(g, threshold(alpha, u_hat, w[g]));
  }
  return StepUpOutcome{u_hat, std::move(w), view.take_smallest(counts), alpha};
}

inline StepUpOutcome addow_lcm(const GroupedPValues& data, const NullEstimates& estimates, double alpha) {
  return addow_lcm(SortedPValues(data), estimates, alpha);
}

}  // namespace addow

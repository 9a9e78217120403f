#pragma once
// Step-up machinery: the crossing-point functional, weighted rejection
// counting, and the (multi-)weighted BH engine.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "addow/model.hpp"

namespace addow {

using WeightVector = std::vector<double>;

// W(u) on the step-up grid u ∈ {0, 1/m, ..., 1}; at[k] is the vector at k/m.
struct WeightFunction {
  std::size_t m = 0;
  std::vector<WeightVector> at;  // size m+1
};

struct StepUpOutcome {
  double u_hat = 0.0;
  WeightVector weights;     // vector in force at u_hat
  RejectionSet rejections;  // {(g,i): p_{g,i} <= alpha * u_hat * w_g}
  double alpha = 0.0;
};

struct MonotonicityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Canonical threshold arithmetic; every membership test in the library
// compares p <= threshold(alpha, u, w_g) with this exact operation order.
inline double threshold(double alpha, double u, double w) { return (alpha * u) * w; }

inline double weight_budget(const WeightVector& w, const std::vector<double>& costs) {
  double s = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g) s += costs[g] * w[g];
  return s;
}

namespace detail {

inline void check_weights(const WeightVector& w, std::size_t G) {
  if (w.size() != G) throw std::invalid_argument("weights: wrong group count");
  for (double v : w)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights: entries must be finite and >= 0");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
}

// Rejection counts per group at threshold profile (alpha, u, w); the
// comparison is the literal p <= alpha*u*w_g, so a zero weight (or u = 0)
// still admits exact-zero p-values.
inline std::vector<std::size_t> counts_at(const SortedPValues& view, const WeightVector& w, double u,
                                          double alpha) {
  std::vector<std::size_t> counts(view.n_groups(), 0);
  for (std::size_t g = 0; g < view.n_groups(); ++g)
    counts[g] = view.count_leq(g, threshold(alpha, u, w[g]));
  return counts;
}

}  // namespace detail

// Largest grid point u = k/m with h(u) >= u; h given as m+1 values at k/m.
inline double crossing_point(const std::vector<double>& h) {
  if (h.size() < 2) throw std::invalid_argument("crossing_point: need a grid of at least m = 1");
  if (h.front() != 0.0) throw std::invalid_argument("crossing_point: h(0) must be 0");
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k] < h[k - 1]) throw MonotonicityError("crossing_point: h is not nondecreasing");
  const double m = static_cast<double>(h.size() - 1);
  if (h.back() > 1.0 + 1e-12) throw std::invalid_argument("crossing_point: h(1) must be <= 1");
  for (std::size_t k = h.size() - 1; k > 0; --k)
    if (h[k] >= static_cast<double>(k) / m) return static_cast<double>(k) / m;
  return 0.0;
}

// Rejection fraction at one threshold profile: m^{-1} ΣΣ 1{p <= alpha·u·w_g}.
inline double g_hat(const SortedPValues& view, const WeightVector& w, double u, double alpha) {
  detail::check_weights(w, view.n_groups());
  detail::check_alpha(alpha);
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("g_hat: u must lie in [0,1]");
  const auto counts = detail::counts_at(view, w, u, alpha);
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return static_cast<double>(n) / static_cast<double>(view.m);
}

inline double g_hat(const GroupedPValues& data, const WeightVector& w, double u, double alpha) {
  return g_hat(SortedPValues(data), w, u, alpha);
}

namespace detail {

inline StepUpOutcome outcome_at(const SortedPValues& view, const WeightVector& w, std::size_t r_hat,
                                double alpha) {
  const double u_hat = static_cast<double>(r_hat) / static_cast<double>(view.m);
  auto counts = counts_at(view, w, u_hat, alpha);
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  if (n != r_hat) throw std::logic_error("step-up: rejection count does not match the threshold");
  return StepUpOutcome{u_hat, w, view.take_smallest(counts), alpha};
}

}  // namespace detail

// Weighted BH with a fixed weight vector; BH itself is w = (1, ..., 1).
inline StepUpOutcome wbh(const SortedPValues& view, const WeightVector& w, double alpha) {
  detail::check_weights(w, view.n_groups());
  detail::check_alpha(alpha);
  const std::size_t m = view.m, G = view.n_groups();
  const double md = static_cast<double>(m);
  std::vector<std::size_t> ptr(G, 0);
  std::size_t r_hat = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double u = static_cast<double>(k) / md;
    std::size_t total = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const double t = threshold(alpha, u, w[g]);
      const auto& v = view.values[g];
      while (ptr[g] < v.size() && v[ptr[g]] <= t) ++ptr[g];
      total += ptr[g];
    }
    if (total >= k) r_hat = k;
  }
  return detail::outcome_at(view, w, r_hat, alpha);
}

inline StepUpOutcome wbh(const GroupedPValues& data, const WeightVector& w, double alpha) {
  return wbh(SortedPValues(data), w, alpha);
}

inline StepUpOutcome bh(const SortedPValues& view, double alpha) {
  return wbh(view, WeightVector(view.n_groups(), 1.0), alpha);
}

inline StepUpOutcome bh(const GroupedPValues& data, double alpha) {
  return bh(SortedPValues(data), alpha);
}

// Multi-weighted BH: u_hat = m^{-1} max{r >= 0: m·G_W(r/m) >= r}, equal to the
// per-r weighted order-statistic sweep; requires G_W nondecreasing on the grid.
inline StepUpOutcome mwbh(const SortedPValues& view, const WeightFunction& W, double alpha) {
  detail::check_alpha(alpha);
  const std::size_t m = view.m;
  if (W.m != m || W.at.size() != m + 1) throw std::invalid_argument("mwbh: weight grid does not match m");
  for (const auto& row : W.at) detail::check_weights(row, view.n_groups());
  const double md = static_cast<double>(m);
  std::size_t prev = 0, r_hat = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const auto counts = detail::counts_at(view, W.at[k], static_cast<double>(k) / md, alpha);
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total < prev) throw MonotonicityError("mwbh: counting function decreased along the grid");
    prev = total;
    if (total >= k) r_hat = k;
  }
  return detail::outcome_at(view, W.at[r_hat], r_hat, alpha);
}

inline StepUpOutcome mwbh(const GroupedPValues& data, const WeightFunction& W, double alpha) {
  return mwbh(SortedPValues(data), W, alpha);
}

}  // namespace addow

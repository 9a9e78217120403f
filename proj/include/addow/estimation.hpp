#pragma once
// Null-proportion estimators (Storey family), per-group empirical c.d.f.s,
// and least concave majorants.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "addow/model.hpp"

namespace addow {

enum class EstimateMode { kNonAdaptive, kFixedLambda, kSchedule, kOracle };

constexpr double kDefaultLambda = 0.5;
constexpr double kDefaultScheduleExponent = 0.25;

struct NullEstimates {
  std::vector<double> pi0;  // per group, clipped into (0,1]
  EstimateMode mode = EstimateMode::kNonAdaptive;
  double lambda = 0.0;      // resolved lambda for kFixedLambda / kSchedule
  double pooled = 1.0;      // sum_g (m_g/m) pi0_g

  bool non_adaptive() const { return mode == EstimateMode::kNonAdaptive; }
};

namespace detail {

inline double pooled_pi0(const GroupedPValues& data, const std::vector<double>& pi0) {
  const double m = static_cast<double>(data.total());
  double s = 0.0;
  for (std::size_t g = 0; g < pi0.size(); ++g)
    s += (static_cast<double>(data.group_size(g)) / m) * pi0[g];
  return s;
}

}  // namespace detail

inline NullEstimates ne_estimates(const GroupedPValues& data) {
  data.validate();
  return NullEstimates{std::vector<double>(data.n_groups(), 1.0), EstimateMode::kNonAdaptive, 0.0, 1.0};
}

inline NullEstimates oracle_estimates(const GroupedPValues& data, std::vector<double> pi0) {
  data.validate();
  if (pi0.size() != data.n_groups()) throw std::invalid_argument("estimates: wrong group count");
  for (double v : pi0)
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("estimates: pi0 must lie in (0,1]");
  const double pooled = detail::pooled_pi0(data, pi0);
  return NullEstimates{std::move(pi0), EstimateMode::kOracle, 0.0, pooled};
}

// pi0_g(lambda) = (1 - D_g(lambda) + 1/m) / (1 - lambda), clipped into (0,1];
// the 1/m term uses the total count and keeps the raw value strictly positive.
inline NullEstimates storey_estimate(const GroupedPValues& data, double lambda) {
  data.validate();
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("storey: lambda must be in (0,1)");
  const double m = static_cast<double>(data.total());
  std::vector<double> pi0(data.n_groups());
  for (std::size_t g = 0; g < data.n_groups(); ++g) {
    const auto& p = data.pvalues[g];
    std::size_t below = 0;
    for (double v : p) below += (v <= lambda);
    const double frac = static_cast<double>(below) / static_cast<double>(p.size());
    pi0[g] = std::min(1.0, (1.0 - frac + 1.0 / m) / (1.0 - lambda));
  }
  const double pooled = detail::pooled_pi0(data, pi0);
  return NullEstimates{std::move(pi0), EstimateMode::kFixedLambda, lambda, pooled};
}

// lambda_m = 1 - m^(-exponent); exponent < 1/2 keeps 1/sqrt(m) = o(1 - lambda_m).
inline NullEstimates storey_schedule(const GroupedPValues& data, double exponent = kDefaultScheduleExponent) {
  if (!(exponent > 0.0 && exponent < 0.5))
    throw std::invalid_argument("storey schedule: exponent must be in (0, 1/2)");
  const double lambda = 1.0 - std::pow(static_cast<double>(data.total()), -exponent);
  NullEstimates e = storey_estimate(data, lambda);
  e.mode = EstimateMode::kSchedule;
  return e;
}

// Right-continuous step function on [0,1]; 0 before the first knot.
struct StepFunction {
  std::vector<double> knots;   // strictly ascending
  std::vector<double> values;  // nondecreasing, value at the knot

  double operator()(double t) const {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    return it == knots.begin() ? 0.0 : values[it - knots.begin() - 1];
  }
};

inline StepFunction ecdf(const GroupedPValues& data, std::size_t group) {
  if (group >= data.n_groups()) throw std::invalid_argument("ecdf: group index out of range");
  std::vector<double> sorted = data.pvalues[group];
  std::sort(sorted.begin(), sorted.end());
  StepFunction f;
  const double mg = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double v = static_cast<double>(i + 1) / mg;
    if (!f.knots.empty() && f.knots.back() == sorted[i])
      f.values.back() = v;  // tie: one multi-unit jump
    else {
      f.knots.push_back(sorted[i]);
      f.values.push_back(v);
    }
  }
  return f;
}

// Piecewise-linear function through ascending vertices; clamped outside.
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;

  double operator()(double t) const {
    if (t <= xs.front()) return ys.front();
    if (t >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), t);
    const std::size_t j = it - xs.begin();
    const double w = (t - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + w * (ys[j] - ys[j - 1]);
  }
};

// Least concave majorant on [0,1]: upper convex-hull chain of
// {(0,0)} ∪ {(knot, value)} ∪ {(1,1)}, collinear vertices merged.
inline PiecewiseLinear lcm(const StepFunction& f) {
  std::vector<double> px, py;
  if (f.knots.empty() || f.knots.front() > 0.0) {
    px.push_back(0.0);
    py.push_back(0.0);
  }
  for (std::size_t i = 0; i < f.knots.size(); ++i) {
    px.push_back(f.knots[i]);
    py.push_back(f.values[i]);
  }
  if (f.knots.empty() || f.knots.back() < 1.0) {
    px.push_back(1.0);
    py.push_back(1.0);
  }

  PiecewiseLinear hull;
  for (std::size_t i = 0; i < px.size(); ++i) {
    // pop while the middle vertex is at or below the chord (merges collinear)
    while (hull.xs.size() >= 2) {
      const std::size_t n = hull.xs.size();
      const double cross = (hull.xs[n - 1] - hull.xs[n - 2]) * (py[i] - hull.ys[n - 2]) -
                           (hull.ys[n - 1] - hull.ys[n - 2]) * (px[i] - hull.xs[n - 2]);
      if (cross >= 0.0) {
        hull.xs.pop_back();
        hull.ys.pop_back();
      } else {
        break;
      }
    }
    hull.xs.push_back(px[i]);
    hull.ys.push_back(py[i]);
  }
  return hull;
}

}  // namespace addow

#pragma once
// Comparison procedures assembled from the weighted step-up and the
// optimizer: adaptive BH, the two-group heuristic weighting of HZZ, and the
// two-stage Pro1/Pro2 pair that re-optimizes weights at a pre-estimated
// threshold.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "addow/addow.hpp"
#include "addow/estimation.hpp"
#include "addow/model.hpp"
#include "addow/stepup.hpp"

namespace addow {

// Raised when a weight recipe has no defined value because the pooled null
// estimate is 1 (no estimated signal anywhere); callers should fall back to
// plain BH.
struct WeightsUndefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive BH: the step-up with constant weight 1/pi0_hat (pooled).
inline StepUpOutcome abh(const SortedPValues& view, const NullEstimates& estimates, double alpha) {
  if (!(estimates.pooled > 0.0)) throw std::invalid_argument("abh: pooled pi0 must be positive");
  return wbh(view, WeightVector(view.n_groups(), 1.0 / estimates.pooled), alpha);
}

inline StepUpOutcome abh(const GroupedPValues& data, const NullEstimates& estimates, double alpha) {
  return abh(SortedPValues(data), estimates, alpha);
}

// HZZ heuristic weights w_g = pi1_hat_g / (pi0_hat_g * (1 - pi0_hat)); the
// vector sits exactly on the budget boundary: sum_g (m_g/m) pi0_hat_g w_g = 1.
inline WeightVector hzz_weights(const NullEstimates& estimates) {
  if (!(estimates.pooled < 1.0))
    throw WeightsUndefinedError("hzz: weights undefined when the pooled pi0 estimate is 1; fall back to bh");
  WeightVector w(estimates.pi0.size());
  for (std::size_t g = 0; g < w.size(); ++g)
    w[g] = (1.0 - estimates.pi0[g]) / (estimates.pi0[g] * (1.0 - estimates.pooled));
  return w;
}

inline StepUpOutcome hzz(const SortedPValues& view, const NullEstimates& estimates, double alpha) {
  return wbh(view, hzz_weights(estimates), alpha);
}

inline StepUpOutcome hzz(const GroupedPValues& data, const NullEstimates& estimates, double alpha) {
  return hzz(SortedPValues(data), estimates, alpha);
}

struct ProPair {
  StepUpOutcome pro1;  // direct rejection at u_M with the optimized weights
  StepUpOutcome pro2;  // full step-up rerun with those weights held fixed
};

// Two-stage procedures: stage one takes u_M = max of the abh and hzz step-up
// thresholds; stage two maximizes the rejection count at u_M over the weight
// space.  Pro1 rejects at threshold u_M directly, so its count can exceed
// m*u_M; Pro2 reruns the step-up with the optimized vector.  Throws
// WeightsUndefinedError via hzz when the pooled estimate is 1.
inline ProPair pro1_pro2(const SortedPValues& view, const MinCostProfile& profile,
                         const NullEstimates& estimates, double alpha) {
  const double u1 = abh(view, estimates, alpha).u_hat;
  const double u2 = hzz(view, estimates, alpha).u_hat;
  const double u_m = std::max(u1, u2);
  const WeightVector w = argmax_weights_at(view, profile, alpha, u_m);
  const auto counts = detail::counts_at(view, w, u_m, alpha);
  return ProPair{StepUpOutcome{u_m, w, view.take_smallest(counts), alpha}, wbh(view, w, alpha)};
}

inline ProPair pro1_pro2(const SortedPValues& view, const NullEstimates& estimates, double alpha) {
  return pro1_pro2(view, min_cost_profile(view, cost_vector(view, estimates)), estimates, alpha);
}

inline ProPair pro1_pro2(const GroupedPValues& data, const NullEstimates& estimates, double alpha) {
  return pro1_pro2(SortedPValues(data), estimates, alpha);
}

}  // namespace addow

// Population view of the weighting problem: for a two-group Gaussian model,
// prints the optimal weight pair along the threshold grid and the critical
// level; below that level the asymptotic optimality guarantee lapses.  The
// Gaussian family has unbounded density at the origin, so its critical level
// is zero; a bounded-density example shows a strictly positive one.

#include <cstdio>

#include "addow/oracle.hpp"
#include "addow/stepup.hpp"

namespace aw = addow;

int main() {
  aw::GaussianModel model;
  model.mu = {1.5, 3.0};
  model.group_sizes = {700, 300};
  model.null_counts = {560, 180};  // pi0 = 0.8 and 0.6
  const double alpha = 0.05;
  const aw::CostVector costs = aw::cost_vector(model.group_sizes, model.pi0_by_group());

  std::printf("u      w_dense  w_sparse  budget\n");
  for (double u = 0.1; u <= 1.0001; u += 0.1) {
    const aw::WeightVector w = aw::oracle_weights(model, costs, alpha, u);
    std::printf("%.2f   %7.4f  %8.4f  %.12f\n", u, w[0], w[1], aw::weight_budget(w, costs));
  }

  std::printf("\ncritical level, normal alternatives: %g\n",
              aw::critical_alpha(model, model.pi0_by_group()));
  // one group, F(x) = 2x - x^2: density at the origin is 2
  std::printf("critical level, bounded density 2:    %g\n",
              aw::critical_alpha({aw::GroupLimit{0.5, 1.0, 2.0}}));
  return 0;
}

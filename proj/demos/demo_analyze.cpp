// Side-by-side run of plain step-up and the adaptive optimizer on a small
// two-group screen where one group carries most of the signal.  The weighted
// run buys extra rejections in the dense group by spending almost none of the
// budget on the sparse one.

#include <cstdio>

#include "addow/addow.hpp"
#include "addow/estimation.hpp"
#include "addow/model.hpp"
#include "addow/stepup.hpp"

namespace aw = addow;

namespace {

void show(const char* name, const aw::GroupedPValues& data, const aw::StepUpOutcome& out) {
  std::printf("%-8s u_hat=%.4f rejected=%zu weights=(", name, out.u_hat,
              out.rejections.total());
  for (std::size_t g = 0; g < out.weights.size(); ++g)
    std::printf("%s%.3f", g ? ", " : "", out.weights[g]);
  std::printf(")\n");
  for (std::size_t g = 0; g < data.n_groups(); ++g) {
    std::printf("  %-7s", data.names[g].c_str());
    for (std::uint32_t i : out.rejections.by_group[g]) std::printf(" %.4f", data.pvalues[g][i]);
    if (out.rejections.by_group[g].empty()) std::printf(" -");
    std::printf("\n");
  }
}

}  // namespace

int main() {
  aw::GroupedPValues data;
  data.names = {"dense", "sparse"};
  data.pvalues = {
      {0.0004, 0.0011, 0.0019, 0.0042, 0.009, 0.013, 0.021, 0.08, 0.31, 0.55},
      {0.004, 0.051, 0.1, 0.18, 0.27, 0.36, 0.47, 0.58, 0.71, 0.9},
  };
  const double alpha = 0.1;
  const aw::SortedPValues view(data);

  show("bh", data, aw::bh(view, alpha));
  show("ihw", data, aw::ihw(view, alpha));
  show("addow", data, aw::addow(view, aw::storey_estimate(data, 0.5), alpha));
  return 0;
}

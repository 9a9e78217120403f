#pragma once
// Population quantities for the Gaussian one-sided location model: the
// alternative p-value c.d.f. and density, labeled data generation, the
// population-optimal weights via Lagrangian bisection, and the critical
// level below which no weighting can attain full power asymptotically.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "addow/addow.hpp"
#include "addow/model.hpp"
#include "addow/normal.hpp"
#include "addow/rng.hpp"
#include "addow/stepup.hpp"

namespace addow {

struct GaussianModel {
  std::vector<double> mu;                // positive one-sided effect per group
  std::vector<std::size_t> group_sizes;  // m_g
  std::vector<std::size_t> null_counts;  // m_{g,0}, strictly between 0 and m_g

  std::size_t n_groups() const { return mu.size(); }
  std::size_t total() const {
    std::size_t m = 0;
    for (std::size_t s : group_sizes) m += s;
    return m;
  }
  double pi_g(std::size_t g) const {
    return static_cast<double>(group_sizes[g]) / static_cast<double>(total());
  }
  double pi_g0(std::size_t g) const {
    return static_cast<double>(null_counts[g]) / static_cast<double>(group_sizes[g]);
  }
  double pi_g1(std::size_t g) const { return 1.0 - pi_g0(g); }
  double pi0() const {
    double s = 0.0;
    for (std::size_t g = 0; g < n_groups(); ++g) s += pi_g(g) * pi_g0(g);
    return s;
  }
  std::vector<double> pi0_by_group() const {
    std::vector<double> v(n_groups());
    for (std::size_t g = 0; g < v.size(); ++g) v[g] = pi_g0(g);
    return v;
  }

  void validate() const {
    if (mu.empty()) throw std::invalid_argument("model: needs at least one group");
    if (group_sizes.size() != mu.size() || null_counts.size() != mu.size())
      throw std::invalid_argument("model: array lengths disagree");
    for (std::size_t g = 0; g < mu.size(); ++g) {
      if (!(mu[g] > 0.0) || !std::isfinite(mu[g]))
        throw std::invalid_argument("model: effect sizes must be positive and finite");
      if (null_counts[g] == 0 || null_counts[g] >= group_sizes[g])
        throw std::invalid_argument("model: null counts must satisfy 0 < m_g0 < m_g");
    }
  }
};

// Distribution of an alternative p-value p = sf(Z), Z ~ N(mu, 1):
// F(x) = sf(isf(x) - mu), density f(x) = exp(mu*(isf(x) - mu/2)) with
// f(0+) = infinity and f(1-) = 0, inverse f_inv(y) = sf(log(y)/mu + mu/2).
struct AlternativeCdf {
  double mu = 0.0;

  double F(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return normal_sf(normal_isf(x) - mu);
  }
  double f(double x) const { return std::exp(mu * (normal_isf(x) - mu / 2.0)); }
  double f_inv(double y) const { return normal_sf(std::log(y) / mu + mu / 2.0); }
};

// Labeled dataset with exactly m_g0 nulls per group (drawn first, then the
// alternatives), one sequential RNG stream per call.  Null p-values are the
// uniforms themselves; alternatives shift the normal score by mu.
inline GroupedPValues generate(const GaussianModel& model, std::uint64_t seed) {
  model.validate();
  const std::size_t G = model.n_groups();
  GroupedPValues data;
  data.names.resize(G);
  data.pvalues.resize(G);
  data.labels.resize(G);
  auto rng = make_engine(seed);
  for (std::size_t g = 0; g < G; ++g) {
    data.names[g] = "g" + std::to_string(g + 1);
    const std::size_t mg = model.group_sizes[g], m0 = model.null_counts[g];
    data.pvalues[g].resize(mg);
    data.labels[g].assign(mg, 0);
    for (std::size_t i = 0; i < mg; ++i) {
      const double u = uniform01(rng);
      if (i < m0) {
        data.pvalues[g][i] = u;
      } else {
        data.pvalues[g][i] = normal_sf(normal_isf(u) + model.mu[g]);
        data.labels[g][i] = 1;
      }
    }
  }
  return data;
}

namespace detail {

// Population argmax thresholds t_g = alpha*u*w_g of sum_g (m_g1/m) F_g(t_g)
// under sum_g c_g t_g <= alpha*u: equalize marginal value f_g(t_g)*a_g/c_g
// across groups by bisection on the common multiplier.  Saturates at t = 1
// for every group when the budget covers sum_g c_g.
inline std::vector<double> oracle_thresholds(const GaussianModel& model, const CostVector& costs,
                                             double alpha, double u) {
  model.validate();
  const std::size_t G = model.n_groups();
  if (costs.size() != G) throw std::invalid_argument("oracle weights: cost/group count mismatch");
  for (double c : costs)
    if (!(c > 0.0)) throw std::invalid_argument("oracle weights: costs must be positive");
  if (!(alpha > 0.0 && alpha < 1.0) || !(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("oracle weights: need alpha in (0,1) and u in (0,1]");

  const double budget = alpha * u;
  double cost_sum = 0.0;
  for (double c : costs) cost_sum += c;
  if (budget >= cost_sum) return std::vector<double>(G, 1.0);

  std::vector<AlternativeCdf> alt(G);
  std::vector<double> scale(G);
  const double md = static_cast<double>(model.total());
  for (std::size_t g = 0; g < G; ++g) {
    alt[g].mu = model.mu[g];
    const double a_g = static_cast<double>(model.group_sizes[g] - model.null_counts[g]) / md;
    scale[g] = costs[g] / a_g;  // multiplier nu maps to marginal value nu*scale[g] in group g
  }

  std::vector<double> t(G);
  // residual in weight units: sum_g c_g w_g - 1 with w_g = t_g/budget
  const auto residual = [&](double nu) {
    double s = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      t[g] = alt[g].f_inv(nu * scale[g]);
      s += costs[g] * (t[g] / budget);
    }
    return s - 1.0;
  };

  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (residual(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1020) throw std::runtime_error("oracle weights: could not bracket the multiplier");
  }
  double res = residual(lo);
  for (int it = 0; it < 200 && std::abs(res) > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    res = residual(mid);
    (res > 0.0 ? lo : hi) = mid;
  }
  if (std::abs(res) > 1e-12) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", res);
    throw std::runtime_error(std::string("oracle weights: bisection stalled at residual ") + buf);
  }
  return t;
}

}  // namespace detail

// Population-optimal weight vector at threshold u: thresholds over budget.
inline WeightVector oracle_weights(const GaussianModel& model, const CostVector& costs, double alpha,
                                   double u) {
  const auto t = detail::oracle_thresholds(model, costs, alpha, u);
  const double budget = alpha * u;
  WeightVector w(t.size());
  for (std::size_t g = 0; g < t.size(); ++g) w[g] = t[g] / budget;
  return w;
}

// Population weight function materialized on the step-up grid {k/m}.  The
// solver's per-point thresholds carry ~1e-12 noise, so a per-group running
// max is applied to the thresholds before rescaling; the exact function is
// nondecreasing in u (in threshold terms), so this only removes noise.
inline WeightFunction oracle_weight_function(const GaussianModel& model, const CostVector& costs,
                                             double alpha) {
  const std::size_t m = model.total(), G = model.n_groups();
  WeightFunction W;
  W.m = m;
  W.at.assign(m + 1, WeightVector(G, 0.0));
  std::vector<double> tmax(G, 0.0);
  const double md = static_cast<double>(m);
  for (std::size_t k = 1; k <= m; ++k) {
    const double u = static_cast<double>(k) / md;
    const auto t = detail::oracle_thresholds(model, costs, alpha, u);
    for (std::size_t g = 0; g < G; ++g) {
      tmax[g] = std::max(tmax[g], t[g]);
      W.at[k][g] = tmax[g] / (alpha * u);
    }
  }
  return W;
}

// Plug-in description of one group's asymptotic behavior for the critical
// level: limiting null fraction, the null estimator's limit, and the
// alternative density's limit at 0+ (infinity allowed).
struct GroupLimit {
  double pi_g0 = 0.0;
  double pibar_g0 = 0.0;
  double f0plus = 0.0;
};

// Critical level: the infimum over the limiting weight space of
// 1 / sum_g pi_g w_g (pi_g0 + pi_g1 f_g(0+)); attained at a vertex, so it
// reduces to min_g pibar_g0 / (pi_g0 + pi_g1 * f0plus_g).
inline double critical_alpha(const std::vector<GroupLimit>& groups) {
  if (groups.empty()) throw std::invalid_argument("critical alpha: needs at least one group");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& gl : groups) {
    if (!(gl.pi_g0 > 0.0 && gl.pi_g0 < 1.0))
      throw std::invalid_argument("critical alpha: pi_g0 must lie in (0,1)");
    if (!(gl.pibar_g0 > 0.0 && gl.pibar_g0 <= 1.0))
      throw std::invalid_argument("critical alpha: pibar entries must lie in (0,1]");
    if (!(gl.f0plus > 0.0)) throw std::invalid_argument("critical alpha: density limit must be positive");
    best = std::min(best, gl.pibar_g0 / (gl.pi_g0 + (1.0 - gl.pi_g0) * gl.f0plus));
  }
  return best;
}

// Gaussian specialization: the density blows up at 0+, so the level is 0.
inline double critical_alpha(const GaussianModel& model, const std::vector<double>& pibar) {
  model.validate();
  if (pibar.size() != model.n_groups()) throw std::invalid_argument("critical alpha: wrong group count");
  std::vector<GroupLimit> groups(model.n_groups());
  for (std::size_t g = 0; g < groups.size(); ++g)
    groups[g] = GroupLimit{model.pi_g0(g), pibar[g], std::numeric_limits<double>::infinity()};
  return critical_alpha(groups);
}

inline void save_model(const GaussianModel& model, std::ostream& out) {
  model.validate();
  nlohmann::json j;
  j["mu"] = model.mu;
  j["group_sizes"] = model.group_sizes;
  j["null_counts"] = model.null_counts;
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("model: write failed");
}

inline void save_model(const GaussianModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model: cannot open " + path + " for writing");
  save_model(model, out);
}

inline GaussianModel load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    GaussianModel model;
    model.mu = j.at("mu").get<std::vector<double>>();
    model.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
    model.null_counts = j.at("null_counts").get<std::vector<std::size_t>>();
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model: malformed file: ") + e.what());
  }
}

inline GaussianModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  try {
    return load_model(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + path + "]");
  }
}

}  // namespace addow

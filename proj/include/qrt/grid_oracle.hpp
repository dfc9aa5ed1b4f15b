#pragma once

// Brute-force grid optimizer over a free-state set. Independent of the conic
// solver by construction; used as the oracle side of derived expectations.

#include "qrt/theories.hpp"

#include <functional>

namespace qrt {

struct GridOracleResult {
  double best_value = -kInf;
  CMatrix argmax;
  double gap = 0.0;        // Lipschitz bound on the distance to the optimum
  std::size_t evaluated = 0;
};

namespace detail {

template <typename F>
void enumerate_weights(Eigen::Index k, Eigen::Index steps, RVector& w,
                       Eigen::Index idx, Eigen::Index remaining, F&& visit) {
  if (idx == k - 1) {
    w(idx) = double(remaining) / double(steps);
    visit(w);
    return;
  }
  for (Eigen::Index take = 0; take <= remaining; ++take) {
    w(idx) = double(take) / double(steps);
    enumerate_weights(k, steps, w, idx + 1, remaining - take, visit);
  }
}

inline double composition_count(Eigen::Index k, Eigen::Index steps) {
  double c = 1.0;
  for (Eigen::Index i = 1; i < k; ++i) c *= double(steps + i) / double(i);
  return c;
}

}  // namespace detail

// Maximize `objective` over the free set by an exhaustive mixing-weight grid
// (vertex sets) or direct evaluation (singleton). `lipschitz` bounds the
// objective's variation per unit max-norm change of the state.
inline GridOracleResult grid_oracle(
    const std::function<double(const CMatrix&)>& objective, const FreeStateSet& f,
    double resolution, double lipschitz = 2.0, std::size_t budget = 2'000'000) {
  GridOracleResult res;
  if (f.kind() == FreeSetKind::gibbs_singleton) {
    res.argmax = f.gibbs_state();
    res.best_value = objective(res.argmax);
    res.gap = 0.0;
    res.evaluated = 1;
    return res;
  }
  if (!f.has_vertices())
    throw std::invalid_argument("grid_oracle: unsupported free set kind");

  const auto& verts = f.vertex_list();
  Eigen::Index k = static_cast<Eigen::Index>(verts.size());
  Eigen::Index steps = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(1.0 / resolution)));
  while (steps > 1 && detail::composition_count(k, steps) > double(budget)) --steps;

  double diam = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      diam = std::max(diam, max_abs(verts[i] - verts[j]));

  RVector w(k);
  CMatrix best;
  double best_val = -kInf;
  detail::enumerate_weights(k, steps, w, 0, steps, [&](const RVector& weights) {
    CMatrix sigma = CMatrix::Zero(f.dim(), f.dim());
    for (Eigen::Index j = 0; j < k; ++j)
      if (weights(j) > 0) sigma += weights(j) * verts[j];
    double v = objective(sigma);
    ++res.evaluated;
    if (v > best_val) {
      best_val = v;
      best = sigma;
    }
  });
  res.best_value = best_val;
  res.argmax = best;
  // Any point of the simplex is within k/(2 steps) l1-distance of a grid
  // point, hence within diam * k / (2 steps) in max norm.
  res.gap = lipschitz * diam * double(k) / (2.0 * double(steps));
  return res;
}

}  // namespace qrt

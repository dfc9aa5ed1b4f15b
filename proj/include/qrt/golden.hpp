#pragma once

// Golden states: pure minimum-free-fidelity states at which the fidelity,
// min- and max-relative-entropy modification coefficients collapse to a
// common value g_d.

#include "qrt/measures.hpp"

#include <map>

namespace qrt {

struct GoldenReport {
  CVector ket;
  Eigen::Index d = 2;
  double g_d = 0.0;  // = m_f of the reported state
  std::map<std::string, double> coefficients;
  double collapse_residual = 0.0;  // max pairwise gap of the collapse set
  std::optional<double> m_lr;      // supplementary, not part of the residual
  int starts = 0;
  bool converged = false;
  double stationarity = 0.0;  // final polish improvement
  int orbit_size = 1;         // distinct optima found at the best value
};

namespace detail {

inline double vertex_max_overlap(const CVector& psi,
                                 const std::vector<CMatrix>& verts) {
  double best = -kInf;
  for (const auto& v : verts)
    best = std::max(best, (psi.adjoint() * v * psi)(0, 0).real());
  return best;
}

// Deterministic canonical form: phase-fix on the largest amplitude, then the
// representative is chosen by lexicographic comparison of the coefficient
// tuple (used to resolve degenerate golden states reproducibly).
inline CVector canonical_ket(const CVector& k) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < k.size(); ++i)
    if (std::abs(k(i)) > best + 1e-12) {
      best = std::abs(k(i));
      arg = i;
    }
  Complex ph = k(arg) / std::abs(k(arg));
  return k / ph;
}

inline bool canonical_greater(const CVector& a, const CVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double ar = std::round(a(i).real() * 1e9), br = std::round(b(i).real() * 1e9);
    if (ar != br) return ar > br;
    double ai = std::round(a(i).imag() * 1e9), bi = std::round(b(i).imag() * 1e9);
    if (ai != bi) return ai > bi;
  }
  return false;
}

// Trust-region minimax polish: linearize the active vertex overlaps on the
// real tangent space of the sphere and step by a small LP.
inline CVector polish_minimax(CVector psi, const std::vector<CMatrix>& verts,
                              int iters, double* last_improvement) {
  Eigen::Index d = psi.size();
  double radius = 0.05;
  double improvement = kInf;
  for (int it = 0; it < iters && radius > 1e-13; ++it) {
    // Orthonormal complement of psi.
    CMatrix comp(d, d - 1);
    {
      CMatrix full(d, d);
      full.col(0) = psi;
      for (Eigen::Index j = 1; j < d; ++j) full.col(j) = basis_ket(d, (j - 1) % d);
      Eigen::HouseholderQR<CMatrix> qr(full);
      CMatrix q = qr.householderQ();
      comp = q.rightCols(d - 1);
    }
    std::vector<CVector> tangent;
    for (Eigen::Index j = 0; j < d - 1; ++j) {
      tangent.push_back(comp.col(j));
      tangent.push_back(Complex(0, 1) * comp.col(j));
    }

    double gmax = vertex_max_overlap(psi, verts);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < verts.size(); ++j) {
      double g = (psi.adjoint() * verts[j] * psi)(0, 0).real();
      if (g >= gmax - std::max(1e-7, 0.5 * radius)) active.push_back(j);
    }

    ConicProgram lp;
    VarRef mp = lp.add_scalar(1.0);
    VarRef mm = lp.add_scalar(-1.0);
    std::vector<VarRef> tp, tm;
    for (std::size_t k = 0; k < tangent.size(); ++k) {
      tp.push_back(lp.add_scalar(0.0));
      tm.push_back(lp.add_scalar(0.0));
      VarRef sp = lp.add_scalar(0.0);
      lp.row().s(tp.back(), 1.0).s(sp, 1.0).eq(radius);
      VarRef sm = lp.add_scalar(0.0);
      lp.row().s(tm.back(), 1.0).s(sm, 1.0).eq(radius);
    }
    for (std::size_t j : active) {
      auto row = lp.row();
      double gj = (psi.adjoint() * verts[j] * psi)(0, 0).real();
      for (std::size_t k = 0; k < tangent.size(); ++k) {
        double grad = 2.0 * (tangent[k].adjoint() * verts[j] * psi)(0, 0).real();
        row.s(tp[k], grad).s(tm[k], -grad);
      }
      row.s(mp, -1.0).s(mm, 1.0);
      VarRef s = lp.add_scalar(0.0);
      row.s(s, 1.0);
      row.eq(-gj);
    }
    SolveReport r = solve_lp(lp);
    if (r.status != SolveStatus::optimal) {
      radius *= 0.5;
      continue;
    }
    CVector step = CVector::Zero(d);
    for (std::size_t k = 0; k < tangent.size(); ++k) {
      double t = r.scalars(tp[k].index) - r.scalars(tm[k].index);
      step += t * tangent[k];
    }
    CVector cand = psi + step;
    cand.normalize();
    double gnew = vertex_max_overlap(cand, verts);
    if (gnew < gmax - 1e-14) {
      improvement = gmax - gnew;
      psi = cand;
      radius = std::min(0.2, radius * 1.6);
    } else {
      radius *= 0.4;
    }
  }
  if (last_improvement) *last_improvement = std::isfinite(improvement) ? improvement : 0.0;
  return psi;
}

inline CVector subgradient_descent(CVector psi, const std::vector<CMatrix>& verts,
                                   int iters) {
  for (int k = 0; k < iters; ++k) {
    double gmax = -kInf;
    const CMatrix* vstar = nullptr;
    for (const auto& v : verts) {
      double g = (psi.adjoint() * v * psi)(0, 0).real();
      if (g > gmax) {
        gmax = g;
        vstar = &v;
      }
    }
    CVector grad = 2.0 * (*vstar * psi);
    grad -= psi * (psi.adjoint() * grad)(0, 0);  // tangent projection
    double eta = 0.4 / std::sqrt(1.0 + k);
    psi = (psi - eta * grad).normalized();
  }
  return psi;
}

}  // namespace detail

struct GoldenSearchOptions {
  std::uint64_t seed = 7;
  int starts = 64;
  int subgradient_iters = 220;
  int polish_iters = 60;
};

// Computes the applicable modification coefficients for a pure state and the
// collapse residual. The log-robustness coefficient is reported separately
// and does not enter the residual (it is generically larger).
inline GoldenReport verify_collapse(const PureState& phi, const FreeStateSet& f,
                                    const std::optional<RdMapSpec>& spec = std::nullopt,
                                    double tol = 1e-6, const ToleranceSet& tols = {}) {
  GoldenReport rep;
  rep.ket = detail::canonical_ket(phi.ket());
  rep.d = phi.dim();
  DensityMatrix rho = phi.density();
  rep.coefficients["m_f"] =
      modification_coefficient(rho, rep.d, CoeffKind::f, f, std::nullopt, tols).value;
  rep.coefficients["m_min"] =
      modification_coefficient(rho, rep.d, CoeffKind::dmin, f, std::nullopt, tols).value;
  rep.coefficients["m_max"] =
      modification_coefficient(rho, rep.d, CoeffKind::dmax, f, std::nullopt, tols).value;
  if (spec) {
    if (spec->is_exact) {
      rep.coefficients["m_f_lambda"] =
          modification_coefficient(rho, rep.d, CoeffKind::f_lambda, f, spec, tols).value;
      rep.coefficients["m_min_lambda"] =
          modification_coefficient(rho, rep.d, CoeffKind::dmin_lambda, f, spec, tols)
              .value;
      rep.coefficients["m_max_lambda"] =
          modification_coefficient(rho, rep.d, CoeffKind::dmax_lambda, f, spec, tols)
              .value;
    }
    // non-exact spec: lambda checks skipped (not part of the collapse claim)
  }
  MeasureReport lr = free_robustness(rho, f, tols);
  if (lr.lr && std::isfinite(*lr.lr))
    rep.m_lr = *lr.lr / log2_safe(double(rep.d));
  double lo = kInf, hi = -kInf;
  for (const auto& [k, v] : rep.coefficients) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  rep.collapse_residual = hi - lo;
  rep.g_d = rep.coefficients["m_f"];
  rep.converged = rep.collapse_residual <= tol;
  return rep;
}

inline GoldenReport find_golden_state(const FreeStateSet& f,
                                      const GoldenSearchOptions& opt = {},
                                      const std::optional<RdMapSpec>& spec = std::nullopt,
                                      const ToleranceSet& tols = {}) {
  Eigen::Index d = f.dim();
  if (f.kind() == FreeSetKind::gibbs_singleton) {
    // Minimum Gibbs weight eigenvector, lowest index on ties.
    CMatrix tau = f.gibbs_state();
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < d; ++i)
      if (tau(i, i).real() < tau(arg, arg).real() - 1e-15) arg = i;
    GoldenReport rep = verify_collapse(PureState(basis_ket(d, arg)), f, spec,
                                       tols.collapse_tol, tols);
    rep.starts = 0;
    rep.converged = true;
    return rep;
  }

  const auto& verts = f.vertex_list();
  Rng rng(opt.seed);
  struct Cand {
    CVector ket;
    double value;
  };
  std::vector<Cand> cands;
  auto consider = [&](CVector psi) {
    psi = detail::subgradient_descent(std::move(psi), verts, opt.subgradient_iters);
    cands.push_back({psi, detail::vertex_max_overlap(psi, verts)});
  };
  for (int s = 0; s < opt.starts; ++s) consider(random_pure_ket(d, rng));
  if (d == 2) {
    // Coarse Bloch sweep as extra seeds.
    for (int it = 0; it < 24; ++it)
      for (int ip = 0; ip < 24; ++ip) {
        double th = kPi * (it + 0.5) / 24, ph = 2 * kPi * ip / 24;
        CVector k(2);
        k << std::cos(th / 2),
            std::exp(Complex(0, ph)) * std::sin(th / 2);
        cands.push_back({k, detail::vertex_max_overlap(k, verts)});
      }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.value < b.value; });

  // Polish the best handful.
  double best_val = kInf;
  double stationarity = 0.0;
  std::vector<CVector> optima;
  int polish_count = std::min<std::size_t>(6, cands.size());
  std::vector<CVector> polished;
  for (int i = 0; i < polish_count; ++i) {
    double imp = 0.0;
    CVector p = detail::polish_minimax(cands[i].ket, verts, opt.polish_iters, &imp);
    double v = detail::vertex_max_overlap(p, verts);
    polished.push_back(p);
    if (v < best_val - 1e-12) {
      best_val = v;
      stationarity = imp;
    }
  }
  // Collect the degenerate orbit among ALL candidates near the best value.
  for (std::size_t i = 0; i < polished.size(); ++i) {
    if (detail::vertex_max_overlap(polished[i], verts) > best_val + 1e-8) continue;
    CMatrix proj = polished[i] * polished[i].adjoint();
    bool dup = false;
    for (const auto& o : optima)
      if (max_abs(o * o.adjoint() - proj) < 1e-6) dup = true;
    if (!dup) optima.push_back(detail::canonical_ket(polished[i]));
  }
  CVector best = optima.front();
  for (const auto& o : optima)
    if (detail::canonical_greater(o, best)) best = o;

  GoldenReport rep =
      verify_collapse(PureState(best), f, spec, tols.collapse_tol, tols);
  rep.starts = opt.starts;
  rep.stationarity = stationarity;
  rep.orbit_size = static_cast<int>(optima.size());
  rep.converged = true;
  return rep;
}

// Thermodynamic golden state in closed form: the eigenstate of the maximum
// energy; g_d = -log2(tau_min)/log2 d.
inline GoldenReport golden_thermo(const RVector& energies, double temperature,
                                  const ToleranceSet& tols = {}) {
  FreeStateSet f = FreeStateSet::gibbs_singleton(energies, temperature);
  Eigen::Index d = energies.size();
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < d; ++i)
    if (energies(i) > energies(imax) + 1e-15) imax = i;
  GoldenReport rep = verify_collapse(
      PureState(basis_ket(d, imax)), f,
      RdMapSpec::constant_state_map(f.gibbs_state()), tols.collapse_tol, tols);
  CMatrix tau = f.gibbs_state();
  rep.g_d = -log2_safe(tau(imax, imax).real()) / log2_safe(double(d));
  rep.converged = true;
  return rep;
}

}  // namespace qrt

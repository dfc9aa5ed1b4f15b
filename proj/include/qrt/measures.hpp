#pragma once

// Divergences and resource monotones: max/min-relative entropy, hypothesis
// testing relative entropy, free fidelity, free and generalized robustness,
// their smoothed and RD-map variants, and modification coefficients.
// Values are base-2 (bits); +infinity is a first-class value. Free
// robustness follows the total-decomposition-weight convention: R(rho) is
// the minimal (sum of |weights|) - 1 over affine free decompositions, so
// 1 + R equals 2^LR and matches the robustness tables used for magic states.

#include "qrt/grid_oracle.hpp"
#include "qrt/theories.hpp"

namespace qrt {

struct SmoothingRadius {
  double eps = 0.0;
  SmoothingRadius(double e = 0.0) : eps(e) {
    if (!(e >= 0.0 && e < 1.0))
      throw std::invalid_argument("SmoothingRadius: eps must be in [0,1)");
  }
};

enum class MeasureMethod { analytic, lp, sdp, grid_heuristic };

inline const char* to_string(MeasureMethod m) {
  switch (m) {
    case MeasureMethod::analytic: return "analytic";
    case MeasureMethod::lp: return "lp";
    case MeasureMethod::sdp: return "sdp";
    default: return "grid-heuristic";
  }
}

struct MeasureReport {
  double value = 0.0;  // bits (free_fidelity reports the fidelity itself)
  MeasureMethod method = MeasureMethod::analytic;
  SolveStatus status = SolveStatus::optimal;
  std::optional<double> lr;                  // log-robustness companion value
  std::optional<CMatrix> closest_free;       // optimizing free state
  std::optional<CMatrix> test_operator;      // optimal P
  std::optional<CMatrix> smoothed_state;     // optimizing rho' in the ball
  std::optional<CMatrix> robustness_mixing;  // sigma in (rho + s sigma)/(1+s)
  std::optional<RVector> weights;
  bool estimated = false;
  std::string note;
};

// --- pairwise divergences ----------------------------------------------------

inline MeasureReport d_max(const DensityMatrix& rho, const DensityMatrix& sigma,
                           const ToleranceSet& tol = {}) {
  if (rho.dim() != sigma.dim())
    throw std::invalid_argument("d_max: dimension mismatch");
  MeasureReport rep;
  CMatrix pi = support_projector(sigma.matrix(), tol.rank_tol);
  double leak = ((identityC(rho.dim()) - pi) * rho.matrix()).trace().real();
  if (leak > tol.support_tol) {
    rep.value = kInf;
    rep.note = "support violation";
    return rep;
  }
  CMatrix w = inv_sqrt_psd(sigma.matrix(), tol.rank_tol);
  double lam = max_eigenvalue(hermitize(w * rho.matrix() * w));
  rep.value = log2_safe(std::max(lam, 1e-300));
  return rep;
}

inline MeasureReport d_min(const DensityMatrix& rho, const DensityMatrix& sigma,
                           const ToleranceSet& tol = {}) {
  if (rho.dim() != sigma.dim())
    throw std::invalid_argument("d_min: dimension mismatch");
  double t = (support_projector(rho.matrix(), tol.rank_tol) * sigma.matrix())
                 .trace()
                 .real();
  if (t <= tol.support_tol)
    throw std::domain_error("d_min: orthogonal supports, undefined");
  MeasureReport rep;
  rep.value = -log2_safe(t);
  return rep;
}

// Umegaki relative entropy in bits; +inf outside the support condition.
inline double rel_entropy(const DensityMatrix& rho, const DensityMatrix& sigma,
                          const ToleranceSet& tol = {}) {
  if (rho.dim() != sigma.dim())
    throw std::invalid_argument("rel_entropy: dimension mismatch");
  CMatrix pi = support_projector(sigma.matrix(), tol.rank_tol);
  double leak = ((identityC(rho.dim()) - pi) * rho.matrix()).trace().real();
  if (leak > tol.support_tol) return kInf;
  EigH er = eig_hermitian(rho.matrix());
  EigH es = eig_hermitian(sigma.matrix());
  double d = 0.0;
  for (Eigen::Index i = 0; i < er.values.size(); ++i) {
    double p = er.values(i);
    if (p > tol.rank_tol) d += p * log2_safe(p);
  }
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    double q = es.values(j);
    if (q <= tol.rank_tol) continue;
    double w =
        (es.vectors.col(j).adjoint() * rho.matrix() * es.vectors.col(j))(0, 0)
            .real();
    d -= w * log2_safe(q);
  }
  return d;
}

inline MeasureReport d_hypothesis(const DensityMatrix& rho,
                                  const DensityMatrix& sigma, SmoothingRadius eps,
                                  const ToleranceSet& tol = {}) {
  if (rho.dim() != sigma.dim())
    throw std::invalid_argument("d_hypothesis: dimension mismatch");
  MeasureReport rep;
  Eigen::Index d = rho.dim();
  if (eps.eps <= 1e-12) {
    CMatrix p = support_projector(rho.matrix(), tol.rank_tol);
    double t = (p * sigma.matrix()).trace().real();
    rep.test_operator = p;
    rep.value = t <= 1e-300 ? kInf : -log2_safe(t);
    return rep;
  }
  ConicProgram prog;
  BlockRef pb = prog.add_block(d, sigma.matrix());
  BlockRef qb = prog.add_block(d);
  VarRef slack = prog.add_scalar(0.0);
  for (const CMatrix& e : hermitian_basis(d))
    prog.row().m(pb, e).m(qb, e).eq(e.trace().real());
  prog.row().m(pb, rho.matrix()).s(slack, -1.0).eq(1.0 - eps.eps);
  SolveReport r = solve_sdp(prog);
  rep.method = MeasureMethod::sdp;
  rep.status = r.status;
  if (r.status != SolveStatus::optimal)
    throw std::runtime_error("d_hypothesis: solver failed: " +
                             std::string(to_string(r.status)));
  rep.test_operator = r.blocks[0];
  rep.value = -log2_safe(std::max(r.objective, 1e-300));
  return rep;
}

// --- shared program gadgets ----------------------------------------------------

namespace detail {

inline bool is_pure(const CMatrix& rho, double tol = 1e-10) {
  return std::abs((rho * rho).trace().real() - 1.0) <= tol;
}

// A block variable constrained to the cone generated by the free set:
// sum_j w_j v_j for vertex sets, t*tau for the Gibbs singleton, and
// {M : M >= 0, PT(M) >= 0} for the 2x2 PPT set. `scale` terms contribute the
// total cone weight (Tr of the element).
struct FreeConeVar {
  BlockRef block;
  std::vector<VarRef> weights;  // vertex weights, or {t} for Gibbs
  FreeSetKind kind;
  Eigen::Index dim;

  // Adds coeff * (total weight) to the row.
  void scale(ConicProgram::Row& row, double coeff) const {
    if (kind == FreeSetKind::separable_ppt_2x2)
      row.m(block, coeff * identityC(dim));
    else
      for (const auto& w : weights) row.s(w, coeff);
  }
};

inline FreeConeVar add_free_cone(ConicProgram& prog, const FreeStateSet& f) {
  FreeConeVar out;
  out.kind = f.kind();
  out.dim = f.dim();
  out.block = prog.add_block(f.dim());
  if (f.kind() == FreeSetKind::gibbs_singleton) {
    VarRef t = prog.add_scalar(0.0);
    out.weights.push_back(t);
    CMatrix tau = f.gibbs_state();
    for (const CMatrix& e : hermitian_basis(f.dim()))
      prog.row().m(out.block, e).s(t, -(e * tau).trace().real()).eq(0.0);
  } else if (f.kind() == FreeSetKind::separable_ppt_2x2) {
    BlockRef pt = prog.add_block(4);
    for (const CMatrix& e : hermitian_basis(4))
      prog.row().m(pt, e).m(out.block, -partial_transpose_second(e, 2, 2)).eq(0.0);
  } else {
    const auto& verts = f.vertex_list();
    for (std::size_t j = 0; j < verts.size(); ++j)
      out.weights.push_back(prog.add_scalar(0.0));
    for (const CMatrix& e : hermitian_basis(f.dim())) {
      auto row = prog.row();
      row.m(out.block, e);
      for (std::size_t j = 0; j < verts.size(); ++j)
        row.s(out.weights[j], -(e * verts[j]).trace().real());
      row.eq(0.0);
    }
  }
  return out;
}

// Fidelity pairing block between a constant anchor state and a block
// variable: big = [[anchor_r, X],[X^dag, Y]] with Y tied to `var` and the
// anchor reduced to its support (rank r). <pairing, big> equals
// Re Tr(V X~) whose maximum over the block is sqrt(f(anchor, var)).
struct FidelityGadget {
  BlockRef big;
  CMatrix pairing;
  Eigen::Index r = 0;
};

inline FidelityGadget add_fidelity_gadget(ConicProgram& prog, BlockRef var,
                                          const CMatrix& anchor,
                                          double rank_tol = 1e-9) {
  Eigen::Index d = anchor.rows();
  CMatrix v = support_isometry(anchor, rank_tol);
  Eigen::Index r = v.cols();
  CMatrix anchor_r = v.adjoint() * anchor * v;

  FidelityGadget g;
  g.r = r;
  g.big = prog.add_block(r + d);
  for (const CMatrix& e : hermitian_basis(r)) {
    CMatrix emb = CMatrix::Zero(r + d, r + d);
    emb.topLeftCorner(r, r) = e;
    prog.row().m(g.big, emb).eq((e * anchor_r).trace().real());
  }
  for (const CMatrix& e : hermitian_basis(d)) {
    CMatrix emb = CMatrix::Zero(r + d, r + d);
    emb.bottomRightCorner(d, d) = e;
    prog.row().m(g.big, emb).m(var, -e).eq(0.0);
  }
  g.pairing = CMatrix::Zero(r + d, r + d);
  g.pairing.block(0, r, r, d) = 0.5 * v.adjoint();
  g.pairing.block(r, 0, d, r) = 0.5 * v;
  return g;
}

// Constrains sqrt(f(anchor, var)) >= lo through the gadget.
inline FidelityGadget add_fidelity_ball(ConicProgram& prog, BlockRef var,
                                        const CMatrix& anchor, double lo,
                                        double rank_tol = 1e-9) {
  FidelityGadget g = add_fidelity_gadget(prog, var, anchor, rank_tol);
  VarRef slack = prog.add_scalar(0.0);
  prog.row().m(g.big, g.pairing).s(slack, -1.0).eq(lo);
  return g;
}

}  // namespace detail

// --- free fidelity --------------------------------------------------------------

inline MeasureReport free_fidelity(const DensityMatrix& rho, const FreeStateSet& f,
                                   const ToleranceSet& tol = {}) {
  if (rho.dim() != f.dim())
    throw std::invalid_argument("free_fidelity: dimension mismatch");
  MeasureReport rep;
  if (f.kind() == FreeSetKind::gibbs_singleton) {
    rep.closest_free = f.gibbs_state();
    rep.value = fidelity(rho.matrix(), *rep.closest_free);
    return rep;
  }
  if (detail::is_pure(rho.matrix()) && f.has_vertices()) {
    // Linear in sigma for pure rho: the vertex maximum is exact.
    double best = -kInf;
    for (const auto& v : f.vertex_list()) {
      double t = (rho.matrix() * v).trace().real();
      if (t > best) {
        best = t;
        rep.closest_free = v;
      }
    }
    rep.value = std::min(1.0, std::max(0.0, best));
    return rep;
  }

  // Joint maximization of the root fidelity over the free set.
  ConicProgram prog;
  detail::FreeConeVar cone = detail::add_free_cone(prog, f);
  {
    auto row = prog.row();
    cone.scale(row, 1.0);
    row.eq(1.0);  // normalized: the cone element is a state
  }
  detail::FidelityGadget g =
      detail::add_fidelity_gadget(prog, cone.block, rho.matrix(), tol.rank_tol);
  prog.set_block_objective(g.big, -g.pairing);
  SolveReport r = solve_sdp(prog);
  rep.method = MeasureMethod::sdp;
  rep.status = r.status;
  if (r.status != SolveStatus::optimal)
    throw std::runtime_error("free_fidelity: solver failed");
  double root = std::clamp(-r.objective, 0.0, 1.0);
  rep.value = root * root;
  rep.closest_free = r.blocks[0];
  if (f.kind() == FreeSetKind::separable_ppt_2x2) rep.note = "ppt-exact-2x2";
  return rep;
}

// --- resource measures -----------------------------------------------------------

enum class ResourceKind { dmax, dmin, dh };

inline MeasureReport resource_measure(const DensityMatrix& rho, const FreeStateSet& f,
                                      ResourceKind kind, SmoothingRadius eps = 0.0,
                                      const ToleranceSet& tol = {}) {
  if (rho.dim() != f.dim())
    throw std::invalid_argument("resource_measure: dimension mismatch");
  MeasureReport rep;

  if (kind == ResourceKind::dmax) {
    if (f.kind() == FreeSetKind::gibbs_singleton) {
      CMatrix tau = f.gibbs_state();
      rep = d_max(rho, DensityMatrix(tau), tol);
      rep.closest_free = tau;
      return rep;
    }
    ConicProgram prog;
    detail::FreeConeVar cone = detail::add_free_cone(prog, f);
    BlockRef slackb = prog.add_block(f.dim());
    // slack = cone - rho >= 0
    for (const CMatrix& e : hermitian_basis(f.dim()))
      prog.row().m(slackb, e).m(cone.block, -e).eq(-(e * rho.matrix()).trace().real());
    // objective: total cone weight
    if (f.kind() == FreeSetKind::separable_ppt_2x2) {
      prog.set_block_objective(cone.block, identityC(4));
    } else {
      for (const auto& w : cone.weights) prog.set_scalar_objective(w, 1.0);
    }
    SolveReport r = solve_sdp(prog);
    rep.method = MeasureMethod::sdp;
    rep.status = r.status;
    if (r.status != SolveStatus::optimal)
      throw std::runtime_error("resource dmax: solver failed");
    double scale = std::max(r.objective, 1e-300);
    rep.value = log2_safe(scale);
    rep.closest_free = hermitize(r.blocks[0] / scale);
    if (f.has_vertices()) rep.weights = r.scalars;
    return rep;
  }

  if (kind == ResourceKind::dmin || eps.eps <= 1e-12) {
    // D_H at eps = 0 coincides with D_min; both reduce to the maximum
    // free overlap with the support projector.
    CMatrix pi = support_projector(rho.matrix(), tol.rank_tol);
    double best = -kInf;
    if (f.has_vertices()) {
      for (const auto& v : f.vertex_list()) {
        double t = (pi * v).trace().real();
        if (t > best) {
          best = t;
          rep.closest_free = v;
        }
      }
    } else if (f.kind() == FreeSetKind::gibbs_singleton) {
      rep.closest_free = f.gibbs_state();
      best = (pi * *rep.closest_free).trace().real();
    } else {
      // max Tr(Pi sigma) over 2x2 PPT states.
      ConicProgram prog;
      detail::FreeConeVar cone = detail::add_free_cone(prog, f);
      {
        auto row = prog.row();
        cone.scale(row, 1.0);
        row.eq(1.0);
      }
      prog.set_block_objective(cone.block, -pi);
      SolveReport r = solve_sdp(prog);
      rep.method = MeasureMethod::sdp;
      rep.status = r.status;
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("resource dmin: solver failed");
      best = -r.objective;
      rep.closest_free = r.blocks[0];
    }
    rep.test_operator = pi;
    rep.value = best <= 1e-300 ? kInf : -log2_safe(std::min(1.0, best));
    return rep;
  }

  // Operator-smoothed min-relative entropy of resource: the inner bilinear
  // saddle point makes min over sigma and max over P interchangeable, so a
  // single program min{t : 0<=P<=I, Tr(P rho) >= 1-eps, Tr(P sigma) <= t
  // for all free sigma} is exact.
  Eigen::Index d = f.dim();
  ConicProgram prog;
  BlockRef pb = prog.add_block(d);
  BlockRef qb = prog.add_block(d);
  VarRef t = prog.add_scalar(1.0);
  VarRef s0 = prog.add_scalar(0.0);
  for (const CMatrix& e : hermitian_basis(d))
    prog.row().m(pb, e).m(qb, e).eq(e.trace().real());
  prog.row().m(pb, rho.matrix()).s(s0, -1.0).eq(1.0 - eps.eps);
  Eigen::Index vertex_rows_begin = -1;
  std::size_t vertex_count = 0;
  if (f.has_vertices()) {
    const auto& verts = f.vertex_list();
    vertex_rows_begin = prog.constraint_count();
    vertex_count = verts.size();
    for (const auto& v : verts) {
      VarRef sj = prog.add_scalar(0.0);
      prog.row().m(pb, v).s(t, -1.0).s(sj, 1.0).eq(0.0);
    }
  } else if (f.kind() == FreeSetKind::gibbs_singleton) {
    VarRef sj = prog.add_scalar(0.0);
    prog.row().m(pb, f.gibbs_state()).s(t, -1.0).s(sj, 1.0).eq(0.0);
  } else {
    // t I - P = A + PT(B) certifies Tr(P sigma) <= t on every PPT sigma.
    BlockRef ab = prog.add_block(4);
    BlockRef bb = prog.add_block(4);
    for (const CMatrix& e : hermitian_basis(4))
      prog.row()
          .m(pb, e)
          .m(ab, e)
          .m(bb, partial_transpose_second(e, 2, 2))
          .s(t, -e.trace().real())
          .eq(0.0);
  }
  SolveReport r = solve_sdp(prog);
  rep.method = MeasureMethod::sdp;
  rep.status = r.status;
  if (r.status != SolveStatus::optimal)
    throw std::runtime_error("resource dh: solver failed");
  rep.test_operator = r.blocks[0];
  rep.value = -log2_safe(std::max(r.objective, 1e-300));
  if (vertex_rows_begin >= 0 && r.dual.size() >= vertex_rows_begin) {
    // Dual weights of the vertex rows recover the optimal free mixture.
    RVector w = RVector::Zero(static_cast<Eigen::Index>(vertex_count));
    double tot = 0.0;
    for (std::size_t j = 0; j < vertex_count; ++j) {
      double yj = std::abs(r.dual(vertex_rows_begin + static_cast<Eigen::Index>(j)));
      w(static_cast<Eigen::Index>(j)) = yj;
      tot += yj;
    }
    if (tot > 1e-12) {
      w /= tot;
      CMatrix sigma = CMatrix::Zero(d, d);
      for (std::size_t j = 0; j < vertex_count; ++j)
        sigma += w(static_cast<Eigen::Index>(j)) * f.vertex_list()[j];
      rep.closest_free = sigma;
      rep.weights = w;
    }
  }
  return rep;
}

// Generalized robustness through its witness program:
// 1 + R_G = max{Tr(rho X) : X >= 0, Tr(X sigma) <= 1 for free sigma}.
inline MeasureReport generalized_robustness(const DensityMatrix& rho,
                                            const FreeStateSet& f,
                                            const ToleranceSet& tol = {}) {
  (void)tol;
  Eigen::Index d = f.dim();
  ConicProgram prog;
  BlockRef xb = prog.add_block(d, -rho.matrix());
  if (f.has_vertices()) {
    for (const auto& v : f.vertex_list()) {
      VarRef s = prog.add_scalar(0.0);
      prog.row().m(xb, v).s(s, 1.0).eq(1.0);
    }
  } else if (f.kind() == FreeSetKind::gibbs_singleton) {
    VarRef s = prog.add_scalar(0.0);
    prog.row().m(xb, f.gibbs_state()).s(s, 1.0).eq(1.0);
  } else {
    BlockRef ab = prog.add_block(4);
    BlockRef bb = prog.add_block(4);
    for (const CMatrix& e : hermitian_basis(4))
      prog.row()
          .m(xb, e)
          .m(ab, e)
          .m(bb, partial_transpose_second(e, 2, 2))
          .eq(e.trace().real());
  }
  SolveReport r = solve_sdp(prog);
  MeasureReport rep;
  rep.method = MeasureMethod::sdp;
  rep.status = r.status;
  if (r.status != SolveStatus::optimal)
    throw std::runtime_error("generalized_robustness: solver failed");
  double one_plus = std::max(1.0, -r.objective);
  rep.value = one_plus - 1.0;
  rep.lr = log2_safe(one_plus);
  rep.test_operator = r.blocks[0];
  return rep;
}

inline MeasureReport free_robustness(const DensityMatrix& rho, const FreeStateSet& f,
                                     const ToleranceSet& tol = {}) {
  MeasureReport rep;
  switch (f.kind()) {
    case FreeSetKind::diagonal_simplex:
    case FreeSetKind::gibbs_singleton: {
      MembershipReport m = membership(rho, f, tol.membership_tol);
      rep.value = m.inside ? 0.0 : kInf;
      rep.lr = rep.value;
      rep.note = m.inside ? "free state" : "affine free set";
      if (m.inside) rep.closest_free = rho.matrix();
      return rep;
    }
    case FreeSetKind::vertex_polytope: {
      const auto& verts = f.vertex_list();
      ConicProgram prog;
      std::vector<VarRef> a, b;
      for (std::size_t i = 0; i < verts.size(); ++i) a.push_back(prog.add_scalar(1.0));
      for (std::size_t i = 0; i < verts.size(); ++i) b.push_back(prog.add_scalar(0.0));
      for (const CMatrix& e : hermitian_basis(f.dim())) {
        auto row = prog.row();
        for (std::size_t i = 0; i < verts.size(); ++i) {
          double c = (e * verts[i]).trace().real();
          row.s(b[i], c).s(a[i], -c);
        }
        row.eq((e * rho.matrix()).trace().real());
      }
      SolveReport r = solve_lp(prog);
      rep.method = MeasureMethod::lp;
      rep.status = r.status;
      if (r.status == SolveStatus::infeasible) {
        rep.value = kInf;
        rep.lr = kInf;
        rep.note = "state outside the span of the free set";
        return rep;
      }
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("free_robustness: solver failed");
      double s = std::max(0.0, r.objective);
      rep.value = 2.0 * s;  // total weight - 1
      rep.lr = log2_safe(1.0 + rep.value);
      rep.weights = r.scalars;
      Eigen::Index k = static_cast<Eigen::Index>(verts.size());
      if (s > 1e-12) {
        CMatrix mix = CMatrix::Zero(f.dim(), f.dim());
        CMatrix tmix = CMatrix::Zero(f.dim(), f.dim());
        for (Eigen::Index i = 0; i < k; ++i) {
          mix += std::max(0.0, r.scalars(i)) * verts[i];
          tmix += std::max(0.0, r.scalars(k + i)) * verts[i];
        }
        rep.robustness_mixing = hermitize(mix / s);
        rep.closest_free = hermitize(tmix / (1.0 + s));
      } else {
        rep.closest_free = rho.matrix();
      }
      return rep;
    }
    case FreeSetKind::separable_ppt_2x2: {
      ConicProgram prog;
      BlockRef sb = prog.add_block(4, 2.0 * identityC(4));
      BlockRef spt = prog.add_block(4);
      BlockRef tpt = prog.add_block(4);
      for (const CMatrix& e : hermitian_basis(4)) {
        CMatrix ept = partial_transpose_second(e, 2, 2);
        prog.row().m(spt, e).m(sb, -ept).eq(0.0);
        prog.row().m(tpt, e).m(sb, -ept).eq(
            (e * partial_transpose_second(rho.matrix(), 2, 2)).trace().real());
      }
      SolveReport r = solve_sdp(prog);
      rep.method = MeasureMethod::sdp;
      rep.status = r.status;
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("free_robustness: solver failed");
      double s = std::max(0.0, r.objective / 2.0);
      rep.value = 2.0 * s;
      rep.lr = log2_safe(1.0 + rep.value);
      if (s > 1e-12) {
        rep.robustness_mixing = hermitize(r.blocks[0] / s);
        rep.closest_free = hermitize((rho.matrix() + r.blocks[0]) / (1.0 + s));
      } else {
        rep.closest_free = rho.matrix();
      }
      return rep;
    }
  }
  throw std::logic_error("free_robustness: unknown kind");
}

// --- smoothed measures -----------------------------------------------------------

enum class SmoothKind { dmax, lr, dmin_heuristic };

namespace detail {

// Seeded heuristic for state-smoothed min-relative-entropy style measures:
// explores eigenvalue truncations and boundary mixtures/pure rotations inside
// the fidelity ball and reports the best (a lower estimate of the max).
inline MeasureReport smooth_max_heuristic(
    const DensityMatrix& rho, double eps,
    const std::function<double(const DensityMatrix&)>& objective,
    std::uint64_t seed, int starts) {
  MeasureReport rep;
  rep.method = MeasureMethod::grid_heuristic;
  rep.estimated = true;
  Rng rng(seed);
  Eigen::Index d = rho.dim();
  double best = objective(rho);
  CMatrix best_state = rho.matrix();
  auto consider = [&](const CMatrix& cand) {
    if (fidelity(cand, rho.matrix()) < 1.0 - eps - 1e-12) return;
    DensityMatrix dm(hermitize(cand));
    double v = objective(dm);
    if (v > best) {
      best = v;
      best_state = dm.matrix();
    }
  };
  // Eigenvalue truncations (support shrinking raises min-type measures).
  EigH e = eig_hermitian(rho.matrix());
  for (Eigen::Index keep = 1; keep < d; ++keep) {
    CMatrix t = CMatrix::Zero(d, d);
    double mass = 0.0;
    for (Eigen::Index i = d - keep; i < d; ++i) {
      t += e.values(i) * (e.vectors.col(i) * e.vectors.col(i).adjoint());
      mass += e.values(i);
    }
    if (mass > 1e-12) consider(t / mass);
  }
  // Pure rotations for (near-)pure inputs and random boundary mixtures.
  for (int s = 0; s < starts; ++s) {
    if (detail::is_pure(rho.matrix())) {
      CVector psi = eig_hermitian(rho.matrix()).vectors.col(d - 1);
      CVector chi = random_pure_ket(d, rng);
      chi -= psi * (psi.adjoint() * chi)(0, 0);
      if (chi.norm() < 1e-9) continue;
      chi.normalize();
      CVector cand = std::sqrt(1.0 - eps) * psi +
                     std::sqrt(eps) * std::exp(Complex(0, rng.uniform(0, 2 * kPi))) * chi;
      cand.normalize();
      consider(cand * cand.adjoint());
    } else {
      CMatrix omega = random_density(d, rng);
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        CMatrix cand = (1.0 - mid) * rho.matrix() + mid * omega;
        if (fidelity(cand, rho.matrix()) >= 1.0 - eps)
          lo = mid;
        else
          hi = mid;
      }
      consider((1.0 - lo) * rho.matrix() + lo * omega);
    }
  }
  rep.value = best;
  rep.smoothed_state = best_state;
  return rep;
}

}  // namespace detail

inline MeasureReport smooth_measure(const DensityMatrix& rho, const FreeStateSet& f,
                                    SmoothingRadius eps, SmoothKind kind,
                                    std::uint64_t seed = 7,
                                    const ToleranceSet& tol = {}) {
  if (kind == SmoothKind::dmin_heuristic) {
    auto obj = [&](const DensityMatrix& r) {
      return resource_measure(r, f, ResourceKind::dmin, 0.0, tol).value;
    };
    MeasureReport rep = detail::smooth_max_heuristic(rho, eps.eps, obj, seed, 24);
    rep.note = "state-smoothed dmin lower estimate";
    return rep;
  }

  if (eps.eps <= 1e-12) {
    MeasureReport rep = kind == SmoothKind::dmax
                            ? resource_measure(rho, f, ResourceKind::dmax, 0.0, tol)
                            : free_robustness(rho, f, tol);
    rep.smoothed_state = rho.matrix();
    return rep;
  }

  double lo = std::sqrt(1.0 - eps.eps);
  MeasureReport rep;

  if (kind == SmoothKind::dmax) {
    if (f.kind() == FreeSetKind::gibbs_singleton) {
      // min lambda s.t. rho' <= lambda tau, rho' in the ball.
      ConicProgram prog;
      BlockRef rp = prog.add_block(f.dim());
      VarRef lam = prog.add_scalar(1.0);
      BlockRef slackb = prog.add_block(f.dim());
      CMatrix tau = f.gibbs_state();
      for (const CMatrix& e : hermitian_basis(f.dim()))
        prog.row()
            .m(slackb, e)
            .m(rp, e)
            .s(lam, -(e * tau).trace().real())
            .eq(0.0);
      prog.row().m(rp, identityC(f.dim())).eq(1.0);
      detail::add_fidelity_ball(prog, rp, rho.matrix(), lo, tol.rank_tol);
      SolveReport r = solve_sdp(prog);
      rep.method = MeasureMethod::sdp;
      rep.status = r.status;
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("smooth dmax: solver failed");
      rep.value = log2_safe(std::max(r.objective, 1e-300));
      rep.smoothed_state = r.blocks[0];
      rep.closest_free = tau;
      return rep;
    }
    ConicProgram prog;
    detail::FreeConeVar cone = detail::add_free_cone(prog, f);
    BlockRef rp = prog.add_block(f.dim());
    BlockRef slackb = prog.add_block(f.dim());
    for (const CMatrix& e : hermitian_basis(f.dim()))
      prog.row().m(slackb, e).m(cone.block, -e).m(rp, e).eq(0.0);
    prog.row().m(rp, identityC(f.dim())).eq(1.0);
    detail::add_fidelity_ball(prog, rp, rho.matrix(), lo, tol.rank_tol);
    if (f.kind() == FreeSetKind::separable_ppt_2x2)
      prog.set_block_objective(cone.block, identityC(4));
    else
      for (const auto& w : cone.weights) prog.set_scalar_objective(w, 1.0);
    SolveReport r = solve_sdp(prog);
    rep.method = MeasureMethod::sdp;
    rep.status = r.status;
    if (r.status != SolveStatus::optimal)
      throw std::runtime_error("smooth dmax: solver failed");
    double scale = std::max(r.objective, 1e-300);
    rep.value = log2_safe(scale);
    rep.closest_free = hermitize(r.blocks[0] / scale);
    rep.smoothed_state = r.blocks[1];
    return rep;
  }

  // Smoothed free (log-)robustness.
  switch (f.kind()) {
    case FreeSetKind::diagonal_simplex: {
      // Affine set: finite only if the ball reaches a free state; the closest
      // free state in fidelity is the dephased state.
      CMatrix deph = CMatrix::Zero(f.dim(), f.dim());
      CMatrix r = f.basis().adjoint() * rho.matrix() * f.basis();
      for (Eigen::Index i = 0; i < f.dim(); ++i) deph(i, i) = r(i, i);
      deph = f.basis() * deph * f.basis().adjoint();
      // Best incoherent fidelity: maximize over the simplex.
      MeasureReport ff = free_fidelity(rho, f, tol);
      rep.value = ff.value >= 1.0 - eps.eps - 1e-12 ? 0.0 : kInf;
      rep.lr = rep.value;
      rep.note = "affine free set";
      if (rep.value == 0.0) rep.smoothed_state = *ff.closest_free;
      return rep;
    }
    case FreeSetKind::gibbs_singleton: {
      double fi = fidelity(rho.matrix(), f.gibbs_state());
      rep.value = fi >= 1.0 - eps.eps - 1e-12 ? 0.0 : kInf;
      rep.lr = rep.value;
      rep.note = "singleton free set";
      if (rep.value == 0.0) rep.smoothed_state = f.gibbs_state();
      return rep;
    }
    case FreeSetKind::vertex_polytope: {
      const auto& verts = f.vertex_list();
      ConicProgram prog;
      std::vector<VarRef> a, b;
      for (std::size_t i = 0; i < verts.size(); ++i) a.push_back(prog.add_scalar(1.0));
      for (std::size_t i = 0; i < verts.size(); ++i) b.push_back(prog.add_scalar(0.0));
      BlockRef rp = prog.add_block(f.dim());
      for (const CMatrix& e : hermitian_basis(f.dim())) {
        auto row = prog.row();
        for (std::size_t i = 0; i < verts.size(); ++i) {
          double c = (e * verts[i]).trace().real();
          row.s(b[i], c).s(a[i], -c);
        }
        row.m(rp, -e);
        row.eq(0.0);
      }
      prog.row().m(rp, identityC(f.dim())).eq(1.0);
      detail::add_fidelity_ball(prog, rp, rho.matrix(), lo, tol.rank_tol);
      SolveReport r = solve_sdp(prog);
      rep.method = MeasureMethod::sdp;
      rep.status = r.status;
      if (r.status == SolveStatus::infeasible) {
        rep.value = kInf;
        rep.lr = kInf;
        rep.note = "ball misses the span of the free set";
        return rep;
      }
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("smooth lr: solver failed");
      double s = std::max(0.0, r.objective);
      rep.value = 2.0 * s;
      rep.lr = log2_safe(1.0 + rep.value);
      rep.smoothed_state = r.blocks[0];
      Eigen::Index k = static_cast<Eigen::Index>(verts.size());
      if (s > 1e-12) {
        CMatrix mix = CMatrix::Zero(f.dim(), f.dim());
        for (Eigen::Index i = 0; i < k; ++i)
          mix += std::max(0.0, r.scalars(i)) * verts[i];
        rep.robustness_mixing = hermitize(mix / s);
      }
      return rep;
    }
    case FreeSetKind::separable_ppt_2x2: {
      ConicProgram prog;
      BlockRef sb = prog.add_block(4, 2.0 * identityC(4));
      BlockRef spt = prog.add_block(4);
      BlockRef tb = prog.add_block(4);
      BlockRef tpt = prog.add_block(4);
      BlockRef rp = prog.add_block(4);
      for (const CMatrix& e : hermitian_basis(4)) {
        CMatrix ept = partial_transpose_second(e, 2, 2);
        prog.row().m(spt, e).m(sb, -ept).eq(0.0);
        prog.row().m(tpt, e).m(tb, -ept).eq(0.0);
        prog.row().m(tb, e).m(sb, -e).m(rp, -e).eq(0.0);  // T = rho' + S
      }
      prog.row().m(rp, identityC(4)).eq(1.0);
      detail::add_fidelity_ball(prog, rp, rho.matrix(), lo, tol.rank_tol);
      SolveReport r = solve_sdp(prog);
      rep.method = MeasureMethod::sdp;
      rep.status = r.status;
      if (r.status != SolveStatus::optimal)
        throw std::runtime_error("smooth lr: solver failed");
      double s = std::max(0.0, r.objective / 2.0);
      rep.value = 2.0 * s;
      rep.lr = log2_safe(1.0 + rep.value);
      rep.smoothed_state = r.blocks[4];
      if (s > 1e-12) rep.robustness_mixing = hermitize(r.blocks[0] / s);
      return rep;
    }
  }
  throw std::logic_error("smooth_measure: unknown kind");
}

// --- RD-map induced measures -------------------------------------------------------

enum class LambdaKind { f_lambda, dmax_lambda, dmin_lambda, dh_lambda };

inline MeasureReport lambda_measure(const DensityMatrix& rho, const RdMapSpec& spec,
                                    LambdaKind kind, SmoothingRadius eps = 0.0,
                                    const std::optional<FreeStateSet>& f = std::nullopt,
                                    std::uint64_t seed = 7,
                                    const ToleranceSet& tol = {}) {
  if (rho.dim() != spec.dim)
    throw std::invalid_argument("lambda_measure: dimension mismatch");
  MeasureReport rep;
  // Pseudo maps route to the barred measure: zero on free states by fiat.
  if (spec.is_pseudo) {
    if (!f)
      throw std::invalid_argument(
          "lambda_measure: pseudo map needs the free set for the barred variant");
    if (membership(rho, *f, tol.membership_tol).inside) {
      rep.note = "barred measure on a free state";
      rep.value = kind == LambdaKind::f_lambda ? 1.0 : 0.0;
      return rep;
    }
  }
  DensityMatrix image = apply_rd_map(spec, rho, tol);

  switch (kind) {
    case LambdaKind::f_lambda:
      rep.value = fidelity(rho, image);
      rep.closest_free = image.matrix();
      return rep;
    case LambdaKind::dmin_lambda: {
      if (eps.eps <= 1e-12) {
        rep = d_min(rho, image, tol);
        rep.closest_free = image.matrix();
        return rep;
      }
      auto obj = [&](const DensityMatrix& r) {
        return d_min(r, apply_rd_map(spec, r, tol), tol).value;
      };
      rep = detail::smooth_max_heuristic(rho, eps.eps, obj, seed, 24);
      rep.note = "state-smoothed dmin_lambda lower estimate";
      return rep;
    }
    case LambdaKind::dh_lambda:
      rep = d_hypothesis(rho, image, eps, tol);
      rep.closest_free = image.matrix();
      return rep;
    case LambdaKind::dmax_lambda: {
      if (eps.eps <= 1e-12) {
        rep = d_max(rho, image, tol);
        rep.closest_free = image.matrix();
        return rep;
      }
      // Quasiconvex in rho': bisection on t with an SDP feasibility probe
      // for {rho' in ball, t * Lambda(rho') >= rho'}.
      double hi_val = d_max(rho, image, tol).value;
      if (!std::isfinite(hi_val))
        hi_val = log2_safe(double(rho.dim())) + 4.0;
      double lo_t = 1.0, hi_t = std::pow(2.0, hi_val) + 1e-9;
      CMatrix best_state = rho.matrix();
      auto feasible = [&](double t, CMatrix* witness) {
        ConicProgram prog;
        BlockRef rp = prog.add_block(spec.dim);
        BlockRef slackb = prog.add_block(spec.dim);
        // slack = t*Lambda(rho') - rho'
        for (const CMatrix& e : hermitian_basis(spec.dim)) {
          // <e, slack> + <e, rho'> - t <Lambda^dag(e), rho'> = 0
          CMatrix lam_adj = hermitize(spec.apply_adjoint(e));
          prog.row().m(slackb, e).m(rp, e).m(rp, -t * lam_adj).eq(0.0);
        }
        prog.row().m(rp, identityC(spec.dim)).eq(1.0);
        detail::add_fidelity_ball(prog, rp, rho.matrix(),
                                  std::sqrt(1.0 - eps.eps), tol.rank_tol);
        SolveReport r = solve_sdp(prog);
        if (r.status == SolveStatus::optimal && witness) *witness = r.blocks[0];
        return r.status == SolveStatus::optimal;
      };
      for (int it = 0; it < 50 && hi_t - lo_t > 1e-9 * hi_t; ++it) {
        double mid = 0.5 * (lo_t + hi_t);
        CMatrix w;
        if (feasible(mid, &w)) {
          hi_t = mid;
          best_state = w;
        } else {
          lo_t = mid;
        }
      }
      rep.method = MeasureMethod::sdp;
      rep.value = log2_safe(hi_t);
      rep.smoothed_state = best_state;
      rep.note = "bisection over the quasiconvex level sets";
      return rep;
    }
  }
  throw std::logic_error("lambda_measure: unknown kind");
}

// --- modification coefficients -------------------------------------------------------

enum class CoeffKind { f, dmin, dmax, lr, f_lambda, dmin_lambda, dmax_lambda };

inline const char* to_string(CoeffKind k) {
  switch (k) {
    case CoeffKind::f: return "m_f";
    case CoeffKind::dmin: return "m_min";
    case CoeffKind::dmax: return "m_max";
    case CoeffKind::lr: return "m_LR";
    case CoeffKind::f_lambda: return "m_f_lambda";
    case CoeffKind::dmin_lambda: return "m_min_lambda";
    default: return "m_max_lambda";
  }
}

struct ModCoefficient {
  CoeffKind kind;
  Eigen::Index d = 2;
  double value = 0.0;
};

inline ModCoefficient modification_coefficient(
    const DensityMatrix& phi, Eigen::Index d, CoeffKind kind,
    const std::optional<FreeStateSet>& f = std::nullopt,
    const std::optional<RdMapSpec>& spec = std::nullopt,
    const ToleranceSet& tol = {}) {
  if (d < 2) throw std::invalid_argument("modification_coefficient: d >= 2");
  if (phi.dim() != d)
    throw std::invalid_argument("modification_coefficient: dimension mismatch");
  double logd = log2_safe(double(d));
  double numer = 0.0;
  switch (kind) {
    case CoeffKind::f:
      numer = -log2_safe(std::max(free_fidelity(phi, *f, tol).value, 1e-300));
      break;
    case CoeffKind::dmin:
      numer = resource_measure(phi, *f, ResourceKind::dmin, 0.0, tol).value;
      break;
    case CoeffKind::dmax:
      numer = resource_measure(phi, *f, ResourceKind::dmax, 0.0, tol).value;
      break;
    case CoeffKind::lr:
      numer = *free_robustness(phi, *f, tol).lr;
      break;
    case CoeffKind::f_lambda:
      numer = -log2_safe(std::max(
          lambda_measure(phi, *spec, LambdaKind::f_lambda, 0.0, f, 7, tol).value,
          1e-300));
      break;
    case CoeffKind::dmin_lambda:
      numer = lambda_measure(phi, *spec, LambdaKind::dmin_lambda, 0.0, f, 7, tol).value;
      break;
    case CoeffKind::dmax_lambda:
      numer = lambda_measure(phi, *spec, LambdaKind::dmax_lambda, 0.0, f, 7, tol).value;
      break;
  }
  return ModCoefficient{kind, d, numer / logd};
}

}  // namespace qrt

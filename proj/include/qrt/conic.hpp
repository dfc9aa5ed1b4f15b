#pragma once
#include <cstdio>
#include <cstdlib>

// Small dense conic solver used by every optimization in the toolkit.
//
// Standard form:
//     minimize    c . x
//     subject to  A x = b,   x in K
// where K is a product of a nonnegative orthant (scalar variables) and
// complex Hermitian PSD blocks. Hermitian blocks live in a real coordinate
// space via the usual svec packing (diagonal entries, then sqrt(2)-scaled
// real/imaginary parts of the upper triangle), so <A,B> = Re Tr(A B) matches
// the packed dot product.
//
// Algorithm: homogeneous self-dual embedding, Mehrotra predictor-corrector
// with the symmetrized HKM direction and dense block factorizations.
// Infeasibility and unboundedness are reported through explicit certificates
// (Farkas dual vector / primal ray), never by iteration-count heuristics.

#include "qrt/linalg.hpp"

#include <algorithm>
#include <string>

namespace qrt {

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    default: return "max_iter";
  }
}

struct SolverOptions {
  int max_iter = 200;
  double feas_tol = 1e-9;
  double gap_tol = 1e-9;
  double accept_feas_tol = 5e-8;  // stall acceptance thresholds
  double accept_gap_tol = 1e-7;
  double infeas_cert_tol = 1e-7;
  double step_frac = 0.98;
};

struct VarRef {
  int index = -1;
};

struct BlockRef {
  int index = -1;
  Eigen::Index dim = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::max_iter;
  double objective = 0.0;
  RVector scalars;              // primal scalar values
  std::vector<CMatrix> blocks;  // primal block values
  RVector dual;                 // equality multipliers (or Farkas certificate)
  double max_eq_residual = 0.0;
  double min_block_eig = 0.0;  // over PSD blocks and scalars
  double duality_gap = 0.0;
  int iterations = 0;
  std::string message;
};

class ConicProgram {
 public:
  VarRef add_scalar(double obj = 0.0) {
    scalar_obj_.push_back(obj);
    return VarRef{static_cast<int>(scalar_obj_.size()) - 1};
  }

  BlockRef add_block(Eigen::Index d, CMatrix obj = CMatrix()) {
    if (d < 1) throw std::invalid_argument("ConicProgram: block dim >= 1 required");
    if (obj.size() == 0) obj = CMatrix::Zero(d, d);
    if (obj.rows() != d || obj.cols() != d)
      throw std::invalid_argument("ConicProgram: objective block shape mismatch");
    block_dims_.push_back(d);
    block_obj_.push_back(hermitize(obj));
    return BlockRef{static_cast<int>(block_dims_.size()) - 1, d};
  }

  void set_scalar_objective(VarRef v, double c) { scalar_obj_.at(v.index) = c; }

  void set_block_objective(BlockRef b, const CMatrix& obj) {
    if (obj.rows() != block_dims_.at(b.index) || obj.cols() != block_dims_.at(b.index))
      throw std::invalid_argument("set_block_objective: shape mismatch");
    block_obj_.at(b.index) = hermitize(obj);
  }

  class Row {
   public:
    Row& s(VarRef v, double coeff) {
      scalars_.emplace_back(v.index, coeff);
      return *this;
    }
    Row& m(BlockRef b, const CMatrix& coeff) {
      if (coeff.rows() != b.dim || coeff.cols() != b.dim)
        throw std::invalid_argument("Row: coefficient block shape mismatch");
      blocks_.emplace_back(b.index, hermitize(coeff));
      return *this;
    }
    void eq(double rhs) {
      owner_->commit_row(*this, rhs);
      committed_ = true;
    }

   private:
    friend class ConicProgram;
    explicit Row(ConicProgram* owner) : owner_(owner) {}
    ConicProgram* owner_;
    std::vector<std::pair<int, double>> scalars_;
    std::vector<std::pair<int, CMatrix>> blocks_;
    bool committed_ = false;
  };

  Row row() { return Row(this); }

  int scalar_count() const { return static_cast<int>(scalar_obj_.size()); }
  const std::vector<Eigen::Index>& block_dims() const { return block_dims_; }
  int constraint_count() const { return static_cast<int>(rhs_.size()); }

  // svec packing for one Hermitian matrix.
  static RVector svec(const CMatrix& a) {
    Eigen::Index d = a.rows();
    RVector v(d * d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) v(k++) = a(i, i).real();
    const double s2 = std::sqrt(2.0);
    for (Eigen::Index j = 1; j < d; ++j)
      for (Eigen::Index i = 0; i < j; ++i) {
        v(k++) = s2 * a(i, j).real();
        v(k++) = s2 * a(i, j).imag();
      }
    return v;
  }

  static CMatrix smat(const RVector& v, Eigen::Index d) {
    CMatrix a = CMatrix::Zero(d, d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) a(i, i) = v(k++);
    const double is2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 1; j < d; ++j)
      for (Eigen::Index i = 0; i < j; ++i) {
        double re = v(k++) * is2;
        double im = v(k++) * is2;
        a(i, j) = Complex(re, im);
        a(j, i) = Complex(re, -im);
      }
    return a;
  }

 private:
  friend class HsdSolver;

  void commit_row(const Row& r, double rhs) {
    row_scalars_.push_back(r.scalars_);
    row_blocks_.push_back(r.blocks_);
    rhs_.push_back(rhs);
  }

  std::vector<double> scalar_obj_;
  std::vector<Eigen::Index> block_dims_;
  std::vector<CMatrix> block_obj_;
  std::vector<std::vector<std::pair<int, double>>> row_scalars_;
  std::vector<std::vector<std::pair<int, CMatrix>>> row_blocks_;
  std::vector<double> rhs_;
};

namespace detail {

// Block-structured point (scalars + Hermitian blocks).
struct ConePoint {
  RVector s;
  std::vector<CMatrix> m;

  static ConePoint identity(int n, const std::vector<Eigen::Index>& dims) {
    ConePoint p;
    p.s = RVector::Ones(n);
    for (auto d : dims) p.m.push_back(identityC(d));
    return p;
  }
  static ConePoint zero(int n, const std::vector<Eigen::Index>& dims) {
    ConePoint p;
    p.s = RVector::Zero(n);
    for (auto d : dims) p.m.push_back(CMatrix::Zero(d, d));
    return p;
  }
};

}  // namespace detail

class HsdSolver {
 public:
  HsdSolver(const ConicProgram& p, const SolverOptions& opt)
      : p_(p), opt_(opt), n_(p.scalar_count()), dims_(p.block_dims()) {
    offsets_.resize(dims_.size());
    int off = n_;
    for (std::size_t b = 0; b < dims_.size(); ++b) {
      offsets_[b] = off;
      off += static_cast<int>(dims_[b] * dims_[b]);
    }
    total_ = off;
    cone_degree_ = n_;
    for (auto d : dims_) cone_degree_ += static_cast<int>(d);
    debug_ = std::getenv("QRT_SOLVER_DEBUG") != nullptr;

    c_ = RVector::Zero(total_);
    for (int i = 0; i < n_; ++i) c_(i) = p.scalar_obj_[i];
    for (std::size_t b = 0; b < dims_.size(); ++b)
      c_.segment(offsets_[b], dims_[b] * dims_[b]) =
          ConicProgram::svec(p.block_obj_[b]);

    int m_all = p.constraint_count();
    RMatrix a_all = RMatrix::Zero(m_all, total_);
    RVector b_all = RVector::Zero(m_all);
    for (int r = 0; r < m_all; ++r) {
      for (const auto& [idx, co] : p.row_scalars_[r]) a_all(r, idx) += co;
      for (const auto& [bi, mat] : p.row_blocks_[r])
        a_all.row(r).segment(offsets_[bi], dims_[bi] * dims_[bi]) +=
            ConicProgram::svec(mat).transpose();
      b_all(r) = p.rhs_[r];
    }
    presolve_ok_ = reduce_rows(a_all, b_all);
  }

  SolveReport solve() {
    SolveReport rep;
    if (!presolve_ok_) {
      rep.status = SolveStatus::infeasible;
      rep.message = "inconsistent linearly dependent equality rows";
      rep.dual = presolve_cert_;
      return rep;
    }
    const int m = static_cast<int>(b_.size());

    using detail::ConePoint;
    ConePoint x = ConePoint::identity(n_, dims_);
    ConePoint z = ConePoint::identity(n_, dims_);
    RVector y = RVector::Zero(m);
    double tau = 1.0, kappa = 1.0;

    double bnorm = 1.0 + b_.lpNorm<Eigen::Infinity>();
    double cnorm = 1.0 + c_.lpNorm<Eigen::Infinity>();

    // Best-so-far iterate: the final polish iterations can jitter once mu
    // reaches the numerical floor, so non-optimal exits report this snapshot.
    double best_score = kInf;
    ConePoint best_x = x, best_z = z;
    RVector best_y = y;
    double best_tau = tau;
    auto exit_with_best = [&](SolveReport& r) {
      RVector xv = pack(best_x), zv = pack(best_z);
      double pres = (a_ * (xv / best_tau) - b_).lpNorm<Eigen::Infinity>() / bnorm;
      double dres = (a_.transpose() * (best_y / best_tau) + zv / best_tau - c_)
                        .lpNorm<Eigen::Infinity>() /
                    cnorm;
      double pobj = c_.dot(xv) / best_tau, dobj = b_.dot(best_y) / best_tau;
      double relgap =
          std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
      return finish(r, best_x, best_z, best_y, best_tau,
                    accept(pres, dres, relgap) ? SolveStatus::optimal
                                               : SolveStatus::max_iter);
    };

    for (int iter = 0; iter < opt_.max_iter; ++iter) {
      rep.iterations = iter;
      RVector xv = pack(x), zv = pack(z);

      // Residuals of the homogeneous model.
      RVector rp = a_ * xv - tau * b_;
      RVector rd = -a_.transpose() * y + tau * c_ - zv;
      double rg = b_.dot(y) - c_.dot(xv) - kappa;
      double mu = (xv.dot(zv) + tau * kappa) / (cone_degree_ + 1);

      // Convergence bookkeeping on the de-homogenized point.
      double pres = (a_ * (xv / tau) - b_).lpNorm<Eigen::Infinity>() / bnorm;
      double dres =
          (a_.transpose() * (y / tau) + zv / tau - c_).lpNorm<Eigen::Infinity>() /
          cnorm;
      double pobj = c_.dot(xv) / tau;
      double dobj = b_.dot(y) / tau;
      double relgap = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

      if (debug_)
        std::fprintf(stderr,
                     "it=%3d pres=%9.2e dres=%9.2e gap=%9.2e mu=%9.2e tau=%9.2e "
                     "kappa=%9.2e pobj=%13.6e\n",
                     iter, pres, dres, relgap, mu, tau, kappa, pobj);

      if (pres <= opt_.feas_tol && dres <= opt_.feas_tol && relgap <= opt_.gap_tol)
        return finish(rep, x, z, y, tau, SolveStatus::optimal);

      // Explicit certificates of primal/dual infeasibility.
      double by = b_.dot(y);
      if (by > 0) {
        RVector s = -(a_.transpose() * y);
        double viol = cone_min_eig(s);
        if (viol >= -opt_.infeas_cert_tol * std::max(1.0, y.lpNorm<Eigen::Infinity>()) &&
            by >= 1e-7 * std::max(1.0, y.lpNorm<Eigen::Infinity>()) * bnorm &&
            tau <= 1e-6 * std::max(1.0, kappa)) {
          rep.dual = y / by;
          rep.message = "primal infeasibility certificate";
          return finish(rep, x, z, y, tau, SolveStatus::infeasible);
        }
      }
      double cx = c_.dot(xv);
      if (cx < 0) {
        double viol = (a_ * xv).lpNorm<Eigen::Infinity>();
        if (viol <= opt_.infeas_cert_tol * std::max(1.0, xv.lpNorm<Eigen::Infinity>()) &&
            -cx >= 1e-7 * std::max(1.0, xv.lpNorm<Eigen::Infinity>()) * cnorm &&
            tau <= 1e-6 * std::max(1.0, kappa)) {
          rep.message = "dual infeasibility certificate (primal unbounded ray)";
          unpack_into(rep, xv / (-cx));
          return finish(rep, x, z, y, tau, SolveStatus::unbounded);
        }
      }

      double score = std::max({pres, dres, relgap});
      if (std::isfinite(score) && score < best_score) {
        best_score = score;
        best_x = x;
        best_z = z;
        best_y = y;
        best_tau = tau;
      }
      if (mu < 1e-13 || !std::isfinite(mu)) return exit_with_best(rep);

      // Scaling-operator ingredients.
      std::vector<CMatrix> zinv(dims_.size());
      for (std::size_t b = 0; b < dims_.size(); ++b)
        zinv[b] = psd_function(z.m[b], [](double v) { return 1.0 / std::max(v, 1e-300); });

      // Schur complement M, v = A f(C), u0 = <C, f(C)>.
      std::vector<RVector> frows(m);
      for (int i = 0; i < m; ++i) frows[i] = apply_f(a_.row(i).transpose(), x, z, zinv);
      RMatrix bigm(m + 1, m + 1);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) bigm(i, j) = frows[i].dot(a_.row(j).transpose());
      // Symmetrize roundoff.
      bigm.topLeftCorner(m, m) = 0.5 * (bigm.topLeftCorner(m, m) +
                                        bigm.topLeftCorner(m, m).transpose().eval());
      RVector fc = apply_f(c_, x, z, zinv);
      RVector v = a_ * fc;
      double u0 = c_.dot(fc);
      for (int i = 0; i < m; ++i) {
        bigm(i, m) = -(v(i) + b_(i));
        bigm(m, i) = b_(i) - v(i);
      }
      bigm(m, m) = u0 + kappa / tau;
      for (int i = 0; i <= m; ++i) bigm(i, i) += 1e-13 * (1.0 + std::abs(bigm(i, i)));
      Eigen::FullPivLU<RMatrix> lu(bigm);
      if (!lu.isInvertible()) return exit_with_best(rep);

      auto newton = [&](double gamma, const ConePoint* dxa, const ConePoint* dza,
                        double dtau_a, double dkap_a, ConePoint& dx, ConePoint& dz,
                        RVector& dy, double& dtau, double& dkap) {
        double eta = 1.0 - gamma;
        // G per block / scalar.
        ConePoint g = detail::ConePoint::zero(n_, dims_);
        for (int i = 0; i < n_; ++i) {
          g.s(i) = gamma * mu / z.s(i) - x.s(i);
          if (dxa) g.s(i) -= dza->s(i) * dxa->s(i) / z.s(i);
        }
        for (std::size_t b = 0; b < dims_.size(); ++b) {
          g.m[b] = gamma * mu * zinv[b] - x.m[b];
          if (dxa) g.m[b] -= hermitize(zinv[b] * dza->m[b] * dxa->m[b]);
        }
        double r5 = gamma * mu - tau * kappa - (dxa ? dtau_a * dkap_a : 0.0);

        RVector r1 = -eta * rp;
        RVector r2v = -eta * rd;
        double r3 = -eta * rg;

        RVector gv = pack(g);
        RVector fr2 = apply_f(r2v, x, z, zinv);
        RVector g1 = r1 - a_ * gv - a_ * fr2;
        double g2 = r3 + c_.dot(gv) + c_.dot(fr2) + r5 / tau;

        RVector rhs(m + 1);
        rhs.head(m) = g1;
        rhs(m) = g2;
        RVector sol = lu.solve(rhs);
        dy = sol.head(m);
        dtau = sol(m);

        RVector dzv = -(a_.transpose() * dy) + dtau * c_ - r2v;
        dz = unpack(dzv);
        RVector fdz = apply_f(dzv, x, z, zinv);
        RVector dxv = gv - fdz;
        dx = unpack(dxv);
        dkap = (r5 - kappa * dtau) / tau;
      };

      // Predictor.
      detail::ConePoint dxa, dza;
      RVector dya;
      double dtau_a, dkap_a;
      newton(0.0, nullptr, nullptr, 0, 0, dxa, dza, dya, dtau_a, dkap_a);
      double alpha_a = std::min(1.0, max_step(x, z, tau, kappa, dxa, dza, dtau_a, dkap_a));

      double mu_aff = affine_mu(x, z, tau, kappa, dxa, dza, dtau_a, dkap_a, alpha_a);
      double gamma = std::pow(mu_aff / mu, 3.0);
      gamma = std::clamp(gamma, 1e-10, 1.0 - 1e-10);

      // Corrector.
      detail::ConePoint dx, dz2;
      RVector dy;
      double dtau, dkap;
      newton(gamma, &dxa, &dza, dtau_a, dkap_a, dx, dz2, dy, dtau, dkap);
      double alpha =
          opt_.step_frac * max_step(x, z, tau, kappa, dx, dz2, dtau, dkap);
      alpha = std::min(alpha, 1.0);

      if (!std::isfinite(alpha) || alpha < 1e-10) return exit_with_best(rep);

      x.s += alpha * dx.s;
      z.s += alpha * dz2.s;
      for (std::size_t b = 0; b < dims_.size(); ++b) {
        x.m[b] = hermitize(x.m[b] + alpha * dx.m[b]);
        z.m[b] = hermitize(z.m[b] + alpha * dz2.m[b]);
      }
      y += alpha * dy;
      tau += alpha * dtau;
      kappa += alpha * dkap;
      if (!pack(x).allFinite() || !pack(z).allFinite() || !std::isfinite(tau) ||
          !std::isfinite(kappa))
        return exit_with_best(rep);
    }

    return exit_with_best(rep);
  }

 private:
  bool accept(double pres, double dres, double relgap) const {
    return pres <= opt_.accept_feas_tol && dres <= opt_.accept_feas_tol &&
           relgap <= opt_.accept_gap_tol;
  }

  SolveReport finish(SolveReport& rep, const detail::ConePoint& x,
                     const detail::ConePoint& z, const RVector& y, double tau,
                     SolveStatus st) {
    rep.status = st;
    if (st == SolveStatus::optimal) {
      RVector xv = pack(x) / tau;
      unpack_into(rep, xv);
      rep.objective = c_.dot(xv);
      rep.dual = expand_dual(y / tau);
      rep.max_eq_residual = (a_ * xv - b_).lpNorm<Eigen::Infinity>();
      rep.min_block_eig = cone_min_eig(xv);
      rep.duality_gap = std::abs(c_.dot(xv) - b_.dot(y) / tau);
    } else if (st == SolveStatus::infeasible) {
      if (rep.dual.size() == static_cast<Eigen::Index>(b_.size()))
        rep.dual = expand_dual(rep.dual);
    }
    return rep;
  }

  // Row reduction: drop dependent equality rows, detecting inconsistency.
  bool reduce_rows(const RMatrix& a_all, const RVector& b_all) {
    int m_all = static_cast<int>(b_all.size());
    if (m_all == 0) {
      a_ = a_all;
      b_ = b_all;
      kept_rows_.clear();
      orig_rows_ = 0;
      return true;
    }
    orig_rows_ = m_all;
    Eigen::ColPivHouseholderQR<RMatrix> qr(a_all.transpose());
    qr.setThreshold(1e-12);
    int rank = static_cast<int>(qr.rank());
    std::vector<int> kept;
    for (int i = 0; i < rank; ++i)
      kept.push_back(static_cast<int>(qr.colsPermutation().indices()(i)));
    std::sort(kept.begin(), kept.end());
    if (rank == m_all) {
      a_ = a_all;
      b_ = b_all;
      kept_rows_.resize(m_all);
      for (int i = 0; i < m_all; ++i) kept_rows_[i] = i;
      return true;
    }
    RMatrix ak(rank, a_all.cols());
    RVector bk(rank);
    for (int i = 0; i < rank; ++i) {
      ak.row(i) = a_all.row(kept[i]);
      bk(i) = b_all(kept[i]);
    }
    // Consistency of the dropped rows.
    Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(ak.transpose());
    std::vector<bool> is_kept(m_all, false);
    for (int i : kept) is_kept[i] = true;
    for (int r = 0; r < m_all; ++r) {
      if (is_kept[r]) continue;
      RVector lam = cod.solve(a_all.row(r).transpose());
      double scale = 1.0 + std::abs(b_all(r)) + bk.lpNorm<Eigen::Infinity>();
      if (std::abs(lam.dot(bk) - b_all(r)) > 1e-8 * scale) {
        presolve_cert_ = RVector::Zero(m_all);
        presolve_cert_(r) = 1.0;
        for (int i = 0; i < rank; ++i) presolve_cert_(kept[i]) = -lam(i);
        double s = presolve_cert_.dot(b_all);
        presolve_cert_ /= -s;  // b . y = -1 ... flip to make b.y positive
        presolve_cert_ = -presolve_cert_;
        return false;
      }
    }
    a_ = ak;
    b_ = bk;
    kept_rows_ = kept;
    return true;
  }

  // Expand dual multipliers for reduced rows back to original row count.
  RVector expand_dual(const RVector& y) const {
    if (orig_rows_ == static_cast<int>(y.size())) return y;
    RVector full = RVector::Zero(orig_rows_);
    for (std::size_t i = 0; i < kept_rows_.size(); ++i) full(kept_rows_[i]) = y(i);
    return full;
  }

  RVector pack(const detail::ConePoint& p) const {
    RVector v(total_);
    v.head(n_) = p.s;
    for (std::size_t b = 0; b < dims_.size(); ++b)
      v.segment(offsets_[b], dims_[b] * dims_[b]) = ConicProgram::svec(p.m[b]);
    return v;
  }

  detail::ConePoint unpack(const RVector& v) const {
    detail::ConePoint p;
    p.s = v.head(n_);
    for (std::size_t b = 0; b < dims_.size(); ++b)
      p.m.push_back(ConicProgram::smat(v.segment(offsets_[b], dims_[b] * dims_[b]),
                                       dims_[b]));
    return p;
  }

  void unpack_into(SolveReport& rep, const RVector& v) const {
    detail::ConePoint p = unpack(v);
    rep.scalars = p.s;
    rep.blocks = p.m;
  }

  const ConicProgram& p_;
  SolverOptions opt_;
  int n_ = 0;
  std::vector<Eigen::Index> dims_;
  std::vector<int> offsets_;
  int total_ = 0;
  int cone_degree_ = 0;
  RVector c_;
  RMatrix a_;
  RVector b_;
  std::vector<int> kept_rows_;
  int orig_rows_ = 0;
  bool presolve_ok_ = true;
  bool debug_ = false;
  RVector presolve_cert_;

  // f(U) = sym(Z^{-1} U X) blockwise; (x/z) u for scalars. Packed in, packed out.
  RVector apply_f(const RVector& u, const detail::ConePoint& x,
                  const detail::ConePoint& z, const std::vector<CMatrix>& zinv) const {
    detail::ConePoint p = unpack(u);
    detail::ConePoint out = detail::ConePoint::zero(n_, dims_);
    for (int i = 0; i < n_; ++i) out.s(i) = p.s(i) * x.s(i) / z.s(i);
    for (std::size_t b = 0; b < dims_.size(); ++b)
      out.m[b] = hermitize(
          0.5 * (zinv[b] * p.m[b] * x.m[b] + x.m[b] * p.m[b] * zinv[b]));
    return pack(out);
  }

  double cone_min_eig(const RVector& v) const {
    double me = kInf;
    if (n_ > 0) me = v.head(n_).minCoeff();
    for (std::size_t b = 0; b < dims_.size(); ++b)
      me = std::min(me, min_eigenvalue(ConicProgram::smat(
                            v.segment(offsets_[b], dims_[b] * dims_[b]), dims_[b])));
    if (!std::isfinite(me)) me = 0.0;
    return me;
  }

  double max_step(const detail::ConePoint& x, const detail::ConePoint& z, double tau,
                  double kappa, const detail::ConePoint& dx,
                  const detail::ConePoint& dz, double dtau, double dkap) const {
    double a = kInf;
    for (int i = 0; i < n_; ++i) {
      if (dx.s(i) < 0) a = std::min(a, -x.s(i) / dx.s(i));
      if (dz.s(i) < 0) a = std::min(a, -z.s(i) / dz.s(i));
    }
    if (dtau < 0) a = std::min(a, -tau / dtau);
    if (dkap < 0) a = std::min(a, -kappa / dkap);
    for (std::size_t b = 0; b < dims_.size(); ++b) {
      a = std::min(a, psd_max_step(x.m[b], dx.m[b]));
      a = std::min(a, psd_max_step(z.m[b], dz.m[b]));
    }
    return a;
  }

  static double psd_max_step(const CMatrix& x, const CMatrix& dx) {
    CMatrix xih = psd_function(x, [](double v) { return 1.0 / std::sqrt(std::max(v, 1e-300)); });
    double w = min_eigenvalue(hermitize(xih * dx * xih));
    if (w >= 0) return kInf;
    return -1.0 / w;
  }

  double affine_mu(const detail::ConePoint& x, const detail::ConePoint& z, double tau,
                   double kappa, const detail::ConePoint& dx,
                   const detail::ConePoint& dz, double dtau, double dkap,
                   double alpha) const {
    double dot = 0.0;
    for (int i = 0; i < n_; ++i)
      dot += (x.s(i) + alpha * dx.s(i)) * (z.s(i) + alpha * dz.s(i));
    for (std::size_t b = 0; b < dims_.size(); ++b) {
      CMatrix xm = x.m[b] + alpha * dx.m[b];
      CMatrix zm = z.m[b] + alpha * dz.m[b];
      dot += (xm * zm).trace().real();
    }
    dot += (tau + alpha * dtau) * (kappa + alpha * dkap);
    return dot / (cone_degree_ + 1);
  }
};

inline SolveReport solve(const ConicProgram& p, const SolverOptions& opt = {}) {
  if (p.scalar_count() == 0 && p.block_dims().empty())
    throw std::invalid_argument("solve: program has no variables");
  HsdSolver s(p, opt);
  return s.solve();
}

inline SolveReport solve_lp(const ConicProgram& p, const SolverOptions& opt = {}) {
  if (!p.block_dims().empty())
    throw std::invalid_argument("solve_lp: program contains PSD blocks");
  return solve(p, opt);
}

inline SolveReport solve_sdp(const ConicProgram& p, const SolverOptions& opt = {}) {
  if (p.block_dims().empty())
    throw std::invalid_argument("solve_sdp: program has no PSD blocks");
  return solve(p, opt);
}

// Orthonormal Hermitian basis in svec coordinate order: for Hermitian M,
// M = sum_k <E_k, M> E_k with the real trace inner product.
inline std::vector<CMatrix> hermitian_basis(Eigen::Index d) {
  std::vector<CMatrix> out;
  out.reserve(d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    CMatrix e = CMatrix::Zero(d, d);
    e(i, i) = 1.0;
    out.push_back(e);
  }
  const double is2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 1; j < d; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      CMatrix re = CMatrix::Zero(d, d);
      re(i, j) = is2;
      re(j, i) = is2;
      out.push_back(re);
      CMatrix im = CMatrix::Zero(d, d);
      im(i, j) = Complex(0, is2);
      im(j, i) = Complex(0, -is2);
      out.push_back(im);
    }
  return out;
}

}  // namespace qrt

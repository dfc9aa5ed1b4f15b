#pragma once

// State types with validated invariants, Uhlmann fidelity and support
// projectors. All values are immutable after construction.

#include "qrt/linalg.hpp"

#include <optional>
#include <string>

namespace qrt {

class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix m, double hermiticity_tol = 1e-10)
      : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw std::invalid_argument("HermitianOperator: matrix not square");
    double dev = max_abs(m_ - m_.adjoint().eval());
    if (dev > hermiticity_tol)
      throw std::invalid_argument(
          "HermitianOperator: hermiticity deviation " + std::to_string(dev));
    m_ = hermitize(m_);
  }

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }

 private:
  CMatrix m_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m, const ToleranceSet& tol = {})
      : op_(std::move(m), tol.hermiticity_tol) {
    double mineig = min_eigenvalue(op_.matrix());
    if (mineig < -tol.psd_tol)
      throw std::invalid_argument("DensityMatrix: min eigenvalue " +
                                  std::to_string(mineig));
    double tr = op_.matrix().trace().real();
    if (std::abs(tr - 1.0) > tol.trace_tol)
      throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr));
  }

  Eigen::Index dim() const { return op_.dim(); }
  const CMatrix& matrix() const { return op_.matrix(); }

 private:
  HermitianOperator op_;
};

class PureState {
 public:
  explicit PureState(CVector ket) : ket_(std::move(ket)) {
    double n = ket_.norm();
    if (std::abs(n - 1.0) > 1e-10)
      throw std::invalid_argument("PureState: norm " + std::to_string(n));
  }

  Eigen::Index dim() const { return ket_.size(); }
  const CVector& ket() const { return ket_; }
  CMatrix projector() const { return ket_ * ket_.adjoint(); }
  DensityMatrix density() const { return DensityMatrix(projector()); }

 private:
  CVector ket_;
};

// Root fidelity sqrt(f) = || sqrt(rho) sqrt(sigma) ||_1, computed through the
// eigendecomposition of sqrt(sigma) rho sqrt(sigma) with eigenvalue clipping.
inline double root_fidelity(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows())
    throw std::invalid_argument("fidelity: dimension mismatch");
  CMatrix ss = sqrt_psd(sigma);
  CMatrix inner = hermitize(ss * rho * ss);
  EigH e = eig_hermitian(inner);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    acc += std::sqrt(std::max(0.0, e.values(i)));
  return std::min(1.0, acc);
}

inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  double r = root_fidelity(rho, sigma);
  return r * r;
}

inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}

// Projector onto eigenspaces with eigenvalue > rank_tol.
inline CMatrix support_projector(const CMatrix& rho, double rank_tol = 1e-9) {
  EigH e = eig_hermitian(rho);
  CMatrix p = CMatrix::Zero(rho.rows(), rho.cols());
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > rank_tol)
      p += e.vectors.col(i) * e.vectors.col(i).adjoint();
  return p;
}

inline Eigen::Index support_rank(const CMatrix& rho, double rank_tol = 1e-9) {
  EigH e = eig_hermitian(rho);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > rank_tol) ++r;
  return r;
}

// Isometry whose columns span supp(rho); rho restricted to the support is
// V^dag rho V (strictly positive definite).
inline CMatrix support_isometry(const CMatrix& rho, double rank_tol = 1e-9) {
  EigH e = eig_hermitian(rho);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > rank_tol) keep.push_back(i);
  CMatrix v(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) v.col(k) = e.vectors.col(keep[k]);
  return v;
}

inline CMatrix maximally_mixed(Eigen::Index d) {
  return CMatrix::Identity(d, d) / static_cast<double>(d);
}

inline CVector uniform_superposition_ket(Eigen::Index d) {
  return CVector::Constant(d, Complex(1.0 / std::sqrt(double(d)), 0.0));
}

// (|0..0> + ... + |j j> ...)/sqrt(k): maximally entangled ket on k (x) k.
inline CVector maximally_entangled_ket(Eigen::Index k) {
  CVector v = CVector::Zero(k * k);
  for (Eigen::Index j = 0; j < k; ++j) v(j * k + j) = 1.0 / std::sqrt(double(k));
  return v;
}

}  // namespace qrt

#pragma once

// Quantum channels in Choi form. Convention:
//   J = sum_{ij} |i><j| (x) E(|i><j|)
// so the input factor comes first and Tr_out J = I_in for a TP map.

#include "qrt/states.hpp"

#include <functional>

namespace qrt {

struct ChannelValidation {
  double min_eig = 0.0;
  double tp_residual = 0.0;  // Frobenius norm of Tr_out J - I_in
  bool ok = false;
};

class ChannelChoi {
 public:
  ChannelChoi(Eigen::Index d_in, Eigen::Index d_out, CMatrix j,
              const ToleranceSet& tol = {}, bool validate = true)
      : d_in_(d_in), d_out_(d_out), j_(std::move(j)) {
    if (j_.rows() != d_in * d_out || j_.cols() != d_in * d_out)
      throw std::invalid_argument("ChannelChoi: Choi dimension mismatch");
    if (!is_hermitian(j_, 1e-8))
      throw std::invalid_argument("ChannelChoi: Choi not Hermitian");
    j_ = hermitize(j_);
    if (validate) {
      ChannelValidation v = this->validation(tol);
      if (!v.ok)
        throw std::invalid_argument(
            "ChannelChoi: invalid channel (min_eig=" + std::to_string(v.min_eig) +
            ", tp_residual=" + std::to_string(v.tp_residual) + ")");
    }
  }

  Eigen::Index dim_in() const { return d_in_; }
  Eigen::Index dim_out() const { return d_out_; }
  const CMatrix& choi() const { return j_; }

  ChannelValidation validation(const ToleranceSet& tol = {}) const {
    ChannelValidation v;
    v.min_eig = min_eigenvalue(j_);
    CMatrix tr = partial_trace_second(j_, d_in_, d_out_) - identityC(d_in_);
    v.tp_residual = tr.norm();
    v.ok = v.min_eig >= -tol.psd_tol && v.tp_residual <= tol.tp_tol;
    return v;
  }

  // Linear action on an arbitrary input matrix (no state validation).
  CMatrix apply_matrix(const CMatrix& x) const {
    if (x.rows() != d_in_ || x.cols() != d_in_)
      throw std::invalid_argument("ChannelChoi::apply: dimension mismatch");
    CMatrix out = CMatrix::Zero(d_out_, d_out_);
    for (Eigen::Index i = 0; i < d_in_; ++i)
      for (Eigen::Index j = 0; j < d_in_; ++j)
        out += x(i, j) * j_.block(i * d_out_, j * d_out_, d_out_, d_out_);
    return out;
  }

 private:
  Eigen::Index d_in_, d_out_;
  CMatrix j_;
};

inline ChannelValidation validate_channel(const ChannelChoi& e,
                                          const ToleranceSet& tol = {}) {
  return e.validation(tol);
}

inline DensityMatrix apply_channel(const ChannelChoi& e, const DensityMatrix& rho,
                                   const ToleranceSet& tol = {}) {
  CMatrix out = hermitize(e.apply_matrix(rho.matrix()));
  // Clip tiny negative eigenvalues produced by roundoff.
  EigH eh = eig_hermitian(out);
  if (eh.values.minCoeff() < 0.0 && eh.values.minCoeff() >= -tol.psd_tol) {
    CMatrix fixed = CMatrix::Zero(out.rows(), out.cols());
    for (Eigen::Index i = 0; i < eh.values.size(); ++i)
      fixed += std::max(0.0, eh.values(i)) *
               (eh.vectors.col(i) * eh.vectors.col(i).adjoint());
    out = fixed / fixed.trace().real();
  }
  return DensityMatrix(out, tol);
}

// Choi matrix of a map given as a function on matrix units.
inline CMatrix choi_from_map(Eigen::Index d_in, Eigen::Index d_out,
                             const std::function<CMatrix(const CMatrix&)>& f) {
  CMatrix j = CMatrix::Zero(d_in * d_out, d_in * d_out);
  for (Eigen::Index i = 0; i < d_in; ++i)
    for (Eigen::Index k = 0; k < d_in; ++k) {
      CMatrix unit = CMatrix::Zero(d_in, d_in);
      unit(i, k) = 1.0;
      j.block(i * d_out, k * d_out, d_out, d_out) = f(unit);
    }
  return hermitize(j);
}

inline ChannelChoi compose(const ChannelChoi& e2, const ChannelChoi& e1,
                           const ToleranceSet& tol = {}) {
  if (e1.dim_out() != e2.dim_in())
    throw std::invalid_argument("compose: inner dimension mismatch");
  CMatrix j = choi_from_map(e1.dim_in(), e2.dim_out(), [&](const CMatrix& u) {
    return e2.apply_matrix(e1.apply_matrix(u));
  });
  return ChannelChoi(e1.dim_in(), e2.dim_out(), j, tol);
}

inline ChannelChoi identity_channel(Eigen::Index d) {
  CMatrix j = choi_from_map(d, d, [](const CMatrix& u) { return u; });
  return ChannelChoi(d, d, j);
}

inline ChannelChoi unitary_channel(const CMatrix& u) {
  Eigen::Index d = u.rows();
  CMatrix j = choi_from_map(
      d, d, [&](const CMatrix& x) { return CMatrix(u * x * u.adjoint()); });
  return ChannelChoi(d, d, j);
}

// Complete dephasing in the given orthonormal basis (columns), default
// computational.
inline ChannelChoi dephasing_channel(Eigen::Index d, const CMatrix& basis = CMatrix()) {
  CMatrix b = basis.size() == 0 ? identityC(d) : basis;
  CMatrix j = choi_from_map(d, d, [&](const CMatrix& x) {
    CMatrix out = CMatrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      CVector k = b.col(i);
      out += (k.adjoint() * x * k)(0, 0) * (k * k.adjoint());
    }
    return out;
  });
  return ChannelChoi(d, d, j);
}

// N_p(x) = (1-p) x + p Tr(x) I/d. CPTP only for p in [0, d^2/(d^2-1)].
inline CMatrix depolarize(const CMatrix& x, double p) {
  Eigen::Index d = x.rows();
  return (1.0 - p) * x + p * x.trace() * maximally_mixed(d);
}

inline ChannelChoi depolarizing_channel(Eigen::Index d, double p) {
  CMatrix j = choi_from_map(d, d, [&](const CMatrix& x) { return depolarize(x, p); });
  return ChannelChoi(d, d, j);
}

inline ChannelChoi constant_channel(Eigen::Index d_in, const CMatrix& sigma) {
  CMatrix j = choi_from_map(d_in, sigma.rows(), [&](const CMatrix& x) {
    return CMatrix(x.trace() * sigma);
  });
  return ChannelChoi(d_in, sigma.rows(), j);
}

// Minimum eigenvalue of (id (x) T)(rho) for a state on 2 (x) 2. Nonnegative
// iff separable at this dimension.
inline double partial_transpose_min_eig(const DensityMatrix& rho) {
  if (rho.dim() != 4)
    throw std::invalid_argument("partial_transpose_min_eig: need a 2x2 split (dim 4)");
  return min_eigenvalue(partial_transpose_second(rho.matrix(), 2, 2));
}

// Random CPTP channel: Hilbert-Schmidt random PSD Choi, TP-normalized.
inline ChannelChoi random_cptp(Eigen::Index d_in, Eigen::Index d_out, Rng& rng) {
  CMatrix g = random_gaussian_matrix(d_in * d_out, d_in * d_out, rng);
  CMatrix j = g * g.adjoint();
  CMatrix m = partial_trace_second(j, d_in, d_out);
  CMatrix w = inv_sqrt_psd(m, 1e-12);
  CMatrix a = kron(w, identityC(d_out));
  j = hermitize(a * j * a);
  return ChannelChoi(d_in, d_out, j);
}

// Superoperator matrix in column-stacked convention: vec(E(X)) = S vec(X).
inline CMatrix superop_matrix(Eigen::Index d_in, Eigen::Index d_out,
                              const std::function<CMatrix(const CMatrix&)>& f) {
  CMatrix s(d_out * d_out, d_in * d_in);
  for (Eigen::Index col = 0; col < d_in; ++col)
    for (Eigen::Index row = 0; row < d_in; ++row) {
      CMatrix unit = CMatrix::Zero(d_in, d_in);
      unit(row, col) = 1.0;
      CMatrix out = f(unit);
      s.col(col * d_in + row) =
          Eigen::Map<const CVector>(out.data(), d_out * d_out);
    }
  return s;
}

}  // namespace qrt

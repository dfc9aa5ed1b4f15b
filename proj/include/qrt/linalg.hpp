#pragma once

// Dense complex linear algebra helpers shared by the whole toolkit.
// Everything here is desk-scale (dimensions <= 16 or so) and dense.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qrt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Central tolerance knobs. Ops take these by value; the CLI can swap the
// profile via QRT_TOL_PROFILE.
struct ToleranceSet {
  double hermiticity_tol = 1e-10;
  double psd_tol = 1e-9;
  double trace_tol = 1e-9;
  double tp_tol = 1e-9;
  double rank_tol = 1e-9;
  double support_tol = 1e-9;
  double eq_tol = 1e-8;
  double opt_tol = 1e-6;
  double membership_tol = 1e-7;
  double collapse_tol = 1e-6;
  double commutation_tol = 1e-8;
};

inline double log2_safe(double x) { return std::log(x) / kLn2; }

inline double max_abs(const CMatrix& a) {
  return a.cwiseAbs().maxCoeff();
}

inline CMatrix hermitize(const CMatrix& a) {
  return 0.5 * (a + a.adjoint());
}

inline bool is_hermitian(const CMatrix& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.adjoint().eval()) <= tol;
}

inline CMatrix identityC(Eigen::Index d) { return CMatrix::Identity(d, d); }

inline CVector basis_ket(Eigen::Index d, Eigen::Index i) {
  CVector v = CVector::Zero(d);
  v(i) = 1.0;
  return v;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CVector kron_vec(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Trace over the FIRST factor of H_a (x) H_b.
inline CMatrix partial_trace_first(const CMatrix& m, Eigen::Index da, Eigen::Index db) {
  if (m.rows() != da * db || m.cols() != da * db)
    throw std::invalid_argument("partial_trace_first: dimension mismatch");
  CMatrix out = CMatrix::Zero(db, db);
  for (Eigen::Index i = 0; i < da; ++i)
    out += m.block(i * db, i * db, db, db);
  return out;
}

// Trace over the SECOND factor of H_a (x) H_b.
inline CMatrix partial_trace_second(const CMatrix& m, Eigen::Index da, Eigen::Index db) {
  if (m.rows() != da * db || m.cols() != da * db)
    throw std::invalid_argument("partial_trace_second: dimension mismatch");
  CMatrix out = CMatrix::Zero(da, da);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) {
      Complex s = 0.0;
      for (Eigen::Index k = 0; k < db; ++k) s += m(i * db + k, j * db + k);
      out(i, j) = s;
    }
  return out;
}

// Transpose on the SECOND factor of H_a (x) H_b.
inline CMatrix partial_transpose_second(const CMatrix& m, Eigen::Index da, Eigen::Index db) {
  if (m.rows() != da * db || m.cols() != da * db)
    throw std::invalid_argument("partial_transpose_second: dimension mismatch");
  CMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j)
      out.block(i * db, j * db, db, db) =
          m.block(i * db, j * db, db, db).transpose();
  return out;
}

struct EigH {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

inline EigH eig_hermitian(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(a));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: eigensolver failed");
  return EigH{es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const CMatrix& a) {
  return eig_hermitian(a).values.minCoeff();
}

inline double max_eigenvalue(const CMatrix& a) {
  return eig_hermitian(a).values.maxCoeff();
}

// f(A) for Hermitian A through the spectral decomposition, with eigenvalues
// clipped at zero first (numerical PSD hygiene).
template <typename F>
CMatrix psd_function(const CMatrix& a, F f) {
  EigH e = eig_hermitian(a);
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    double lam = std::max(0.0, e.values(i));
    out += f(lam) * (e.vectors.col(i) * e.vectors.col(i).adjoint());
  }
  return out;
}

inline CMatrix sqrt_psd(const CMatrix& a) {
  return psd_function(a, [](double x) { return std::sqrt(x); });
}

// Pseudo-inverse square root restricted to the support.
inline CMatrix inv_sqrt_psd(const CMatrix& a, double rank_tol = 1e-9) {
  return psd_function(a, [rank_tol](double x) {
    return x > rank_tol ? 1.0 / std::sqrt(x) : 0.0;
  });
}

// Pauli matrices and friends.
inline CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}
inline CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline CMatrix state_from_bloch(double x, double y, double z) {
  CMatrix m(2, 2);
  m << Complex(1 + z, 0), Complex(x, -y), Complex(x, y), Complex(1 - z, 0);
  return 0.5 * m;
}

inline Eigen::Vector3d bloch_vector(const CMatrix& rho) {
  if (rho.rows() != 2 || rho.cols() != 2)
    throw std::invalid_argument("bloch_vector: qubit expected");
  return Eigen::Vector3d((rho * pauli_x()).trace().real(),
                         (rho * pauli_y()).trace().real(),
                         (rho * pauli_z()).trace().real());
}

// Deterministic seeded generator used by every randomized path.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return dist_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t integer(std::uint64_t n) {  // in [0, n)
    return engine_() % n;
  }
  Complex cnormal() { return Complex(normal(), normal()) / std::sqrt(2.0); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> dist_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline CMatrix random_gaussian_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.cnormal();
  return m;
}

// Haar-random unitary via QR with phase normalization.
inline CMatrix random_unitary(Eigen::Index d, Rng& rng) {
  CMatrix z = random_gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    Complex ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

inline CVector random_pure_ket(Eigen::Index d, Rng& rng) {
  CVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.cnormal();
  return v / v.norm();
}

// Hilbert-Schmidt random density matrix (full rank a.s.).
inline CMatrix random_density(Eigen::Index d, Rng& rng) {
  CMatrix g = random_gaussian_matrix(d, d, rng);
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline CMatrix random_hermitian(Eigen::Index d, Rng& rng) {
  return hermitize(random_gaussian_matrix(d, d, rng));
}

}  // namespace qrt

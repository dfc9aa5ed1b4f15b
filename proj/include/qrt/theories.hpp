#pragma once

// Concrete resource theories: free-state sets, resource destroying maps,
// reference families and structural classification.

#include "qrt/channel.hpp"
#include "qrt/conic.hpp"
#include "qrt/states.hpp"

#include <map>
#include <optional>
#include <string>

namespace qrt {

enum class FreeSetKind {
  vertex_polytope,
  diagonal_simplex,
  gibbs_singleton,
  separable_ppt_2x2
};

inline const char* to_string(FreeSetKind k) {
  switch (k) {
    case FreeSetKind::vertex_polytope: return "vertex_polytope";
    case FreeSetKind::diagonal_simplex: return "diagonal";
    case FreeSetKind::gibbs_singleton: return "gibbs";
    default: return "ppt_2x2";
  }
}

struct MembershipReport {
  bool inside = false;
  RVector weights;   // convex weights over vertices when applicable
  CMatrix witness;   // separating operator when outside (polytopes)
  double residual = 0.0;
};

class FreeStateSet {
 public:
  static FreeStateSet vertex_polytope(std::vector<CMatrix> vertices) {
    if (vertices.empty())
      throw std::invalid_argument("FreeStateSet: empty vertex list");
    FreeStateSet f;
    f.kind_ = FreeSetKind::vertex_polytope;
    f.dim_ = vertices.front().rows();
    for (auto& v : vertices) {
      DensityMatrix check(v);  // validates
      if (check.dim() != f.dim_)
        throw std::invalid_argument("FreeStateSet: mixed vertex dimensions");
    }
    f.vertices_ = std::move(vertices);
    return f;
  }

  static FreeStateSet diagonal_simplex(Eigen::Index dim, CMatrix basis = CMatrix()) {
    FreeStateSet f;
    f.kind_ = FreeSetKind::diagonal_simplex;
    f.dim_ = dim;
    f.basis_ = basis.size() == 0 ? identityC(dim) : std::move(basis);
    if (f.basis_.rows() != dim || f.basis_.cols() != dim ||
        max_abs(f.basis_ * f.basis_.adjoint() - identityC(dim)) > 1e-9)
      throw std::invalid_argument("FreeStateSet: basis must be unitary");
    return f;
  }

  static FreeStateSet gibbs_singleton(RVector energies, double temperature) {
    if (temperature <= 0)
      throw std::invalid_argument("FreeStateSet: temperature must be positive");
    for (Eigen::Index i = 0; i < energies.size(); ++i)
      if (!std::isfinite(energies(i)))
        throw std::invalid_argument("FreeStateSet: energies must be finite");
    FreeStateSet f;
    f.kind_ = FreeSetKind::gibbs_singleton;
    f.dim_ = energies.size();
    f.energies_ = std::move(energies);
    f.temperature_ = temperature;
    return f;
  }

  static FreeStateSet separable_ppt_2x2() {
    FreeStateSet f;
    f.kind_ = FreeSetKind::separable_ppt_2x2;
    f.dim_ = 4;
    return f;
  }

  FreeSetKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const RVector& energies() const { return energies_; }
  double temperature() const { return temperature_; }
  const CMatrix& basis() const { return basis_; }

  bool has_vertices() const {
    return kind_ == FreeSetKind::vertex_polytope ||
           kind_ == FreeSetKind::diagonal_simplex;
  }

  // Materialized vertex list (basis projectors for the diagonal simplex).
  const std::vector<CMatrix>& vertex_list() const {
    if (kind_ == FreeSetKind::vertex_polytope) return vertices_;
    if (kind_ == FreeSetKind::diagonal_simplex) {
      if (vertices_.empty()) {
        for (Eigen::Index i = 0; i < dim_; ++i) {
          CVector k = basis_.col(i);
          vertices_.push_back(k * k.adjoint());
        }
      }
      return vertices_;
    }
    throw std::logic_error("FreeStateSet: no vertex representation");
  }

  CMatrix gibbs_state() const {
    if (kind_ != FreeSetKind::gibbs_singleton)
      throw std::logic_error("FreeStateSet: not a Gibbs singleton");
    RVector w(dim_);
    double emin = energies_.minCoeff();
    for (Eigen::Index i = 0; i < dim_; ++i)
      w(i) = std::exp(-(energies_(i) - emin) / temperature_);
    w /= w.sum();
    CMatrix tau = CMatrix::Zero(dim_, dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) tau(i, i) = w(i);
    return tau;
  }

  // Builtin provenance, set by builtin_theory so per-dimension relatives of
  // this set can be reconstructed (used by classification and ladder scans).
  void set_builtin_tag(std::string tag) { builtin_tag_ = std::move(tag); }
  const std::string& builtin_tag() const { return builtin_tag_; }

 private:
  FreeSetKind kind_ = FreeSetKind::vertex_polytope;
  Eigen::Index dim_ = 0;
  mutable std::vector<CMatrix> vertices_;
  CMatrix basis_;
  RVector energies_;
  double temperature_ = 1.0;
  std::string builtin_tag_;
};

// --- membership ------------------------------------------------------------

inline MembershipReport membership(const DensityMatrix& rho, const FreeStateSet& f,
                                   double tol = 1e-7) {
  if (rho.dim() != f.dim())
    throw std::invalid_argument("membership: dimension mismatch");
  MembershipReport rep;
  switch (f.kind()) {
    case FreeSetKind::diagonal_simplex: {
      CMatrix r = f.basis().adjoint() * rho.matrix() * f.basis();
      CMatrix off = r;
      off.diagonal().setZero();
      rep.residual = max_abs(off);
      rep.inside = rep.residual <= tol;
      if (rep.inside) {
        rep.weights = r.diagonal().real();
      }
      return rep;
    }
    case FreeSetKind::gibbs_singleton: {
      rep.residual = max_abs(rho.matrix() - f.gibbs_state());
      rep.inside = rep.residual <= tol;
      return rep;
    }
    case FreeSetKind::separable_ppt_2x2: {
      double me = min_eigenvalue(partial_transpose_second(rho.matrix(), 2, 2));
      rep.residual = std::max(0.0, -me);
      rep.inside = me >= -tol;
      return rep;
    }
    case FreeSetKind::vertex_polytope: {
      const auto& verts = f.vertex_list();
      ConicProgram p;
      std::vector<VarRef> w;
      for (std::size_t j = 0; j < verts.size(); ++j) w.push_back(p.add_scalar(0.0));
      for (const CMatrix& e : hermitian_basis(f.dim())) {
        auto row = p.row();
        for (std::size_t j = 0; j < verts.size(); ++j)
          row.s(w[j], (e * verts[j]).trace().real());
        row.eq((e * rho.matrix()).trace().real());
      }
      SolveReport r = solve_lp(p);
      if (r.status == SolveStatus::optimal) {
        // Residual of the reconstructed mixture.
        CMatrix mix = CMatrix::Zero(f.dim(), f.dim());
        for (std::size_t j = 0; j < verts.size(); ++j)
          mix += std::max(0.0, r.scalars(j)) * verts[j];
        rep.residual = max_abs(mix - rho.matrix());
        rep.inside = rep.residual <= tol;
        rep.weights = r.scalars;
        if (rep.inside) return rep;
      }
      rep.inside = false;
      if (r.status == SolveStatus::infeasible && r.dual.size() > 0) {
        // Farkas combination gives a separating operator W with
        // Tr(W v_j) <= 0 for all vertices and Tr(W rho) > 0; shift so that
        // free values stay <= 1 while Tr(W' rho) > 1.
        auto basis = hermitian_basis(f.dim());
        CMatrix w0 = CMatrix::Zero(f.dim(), f.dim());
        for (std::size_t k = 0; k < basis.size(); ++k) w0 += r.dual(k) * basis[k];
        double at_rho = (w0 * rho.matrix()).trace().real();
        if (at_rho < 0) {
          w0 = -w0;
          at_rho = -at_rho;
        }
        rep.witness = identityC(f.dim()) + w0 / std::max(at_rho * 0.5, 1e-12);
        rep.residual = at_rho;
      }
      return rep;
    }
  }
  throw std::logic_error("membership: unknown kind");
}

// --- resource destroying maps -----------------------------------------------

enum class RdMapKind {
  complete_dephasing,
  constant_state,
  finite_group_twirl,
  depolarizing_pseudo,
  linear_custom
};

inline const char* to_string(RdMapKind k) {
  switch (k) {
    case RdMapKind::complete_dephasing: return "complete_dephasing";
    case RdMapKind::constant_state: return "constant_state";
    case RdMapKind::finite_group_twirl: return "finite_group_twirl";
    case RdMapKind::depolarizing_pseudo: return "depolarizing_pseudo";
    default: return "linear_custom";
  }
}

struct RdMapSpec {
  RdMapKind kind = RdMapKind::complete_dephasing;
  Eigen::Index dim = 0;
  CMatrix basis;                   // complete_dephasing
  CMatrix sigma_free;              // constant_state
  std::vector<CMatrix> unitaries;  // finite_group_twirl
  double p = 1.0;                  // depolarizing_pseudo
  CMatrix superop;                 // linear_custom, column-stacked d^2 x d^2
  bool is_channel = false;
  bool is_exact = false;
  bool is_pseudo = false;

  static RdMapSpec complete_dephasing_map(Eigen::Index d, CMatrix basis = CMatrix()) {
    RdMapSpec s;
    s.kind = RdMapKind::complete_dephasing;
    s.dim = d;
    s.basis = basis.size() == 0 ? identityC(d) : std::move(basis);
    s.is_channel = true;
    s.is_exact = true;
    return s;
  }
  static RdMapSpec constant_state_map(const CMatrix& sigma) {
    RdMapSpec s;
    s.kind = RdMapKind::constant_state;
    s.dim = sigma.rows();
    s.sigma_free = sigma;
    s.is_channel = true;
    s.is_exact = true;
    return s;
  }
  static RdMapSpec twirl_map(std::vector<CMatrix> unitaries) {
    if (unitaries.empty()) throw std::invalid_argument("twirl: empty group");
    RdMapSpec s;
    s.kind = RdMapKind::finite_group_twirl;
    s.dim = unitaries.front().rows();
    s.unitaries = std::move(unitaries);
    s.is_channel = true;
    return s;
  }
  static RdMapSpec depolarizing_pseudo_map(Eigen::Index d, double p) {
    RdMapSpec s;
    s.kind = RdMapKind::depolarizing_pseudo;
    s.dim = d;
    s.p = p;
    s.is_pseudo = true;
    s.is_channel = p >= 0.0 && p <= double(d * d) / double(d * d - 1);
    return s;
  }
  static RdMapSpec linear_custom_map(Eigen::Index d, CMatrix superop,
                                     bool is_channel, bool is_exact, bool is_pseudo) {
    RdMapSpec s;
    s.kind = RdMapKind::linear_custom;
    s.dim = d;
    s.superop = std::move(superop);
    s.is_channel = is_channel;
    s.is_exact = is_exact;
    s.is_pseudo = is_pseudo;
    return s;
  }

  // All shipped kinds are linear maps on operators.
  CMatrix apply(const CMatrix& x) const {
    switch (kind) {
      case RdMapKind::complete_dephasing: {
        CMatrix out = CMatrix::Zero(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
          CVector k = basis.col(i);
          out += (k.adjoint() * x * k)(0, 0) * (k * k.adjoint());
        }
        return out;
      }
      case RdMapKind::constant_state:
        return CMatrix(x.trace() * sigma_free);
      case RdMapKind::finite_group_twirl: {
        CMatrix out = CMatrix::Zero(dim, dim);
        for (const CMatrix& u : unitaries) out += u * x * u.adjoint();
        return out / double(unitaries.size());
      }
      case RdMapKind::depolarizing_pseudo:
        return depolarize(x, p);
      case RdMapKind::linear_custom: {
        CVector v = Eigen::Map<const CVector>(x.data(), dim * dim);
        CVector o = superop * v;
        return Eigen::Map<const CMatrix>(o.data(), dim, dim);
      }
    }
    throw std::logic_error("RdMapSpec: unknown kind");
  }

  // Hilbert-Schmidt adjoint action: <A, apply(B)> = <apply_adjoint(A), B>.
  CMatrix apply_adjoint(const CMatrix& x) const {
    switch (kind) {
      case RdMapKind::complete_dephasing:
      case RdMapKind::depolarizing_pseudo:
        return apply(x);  // self-adjoint
      case RdMapKind::constant_state:
        return CMatrix((sigma_free * x).trace() * identityC(dim));
      case RdMapKind::finite_group_twirl: {
        CMatrix out = CMatrix::Zero(dim, dim);
        for (const CMatrix& u : unitaries) out += u.adjoint() * x * u;
        return out / double(unitaries.size());
      }
      case RdMapKind::linear_custom: {
        CVector v = Eigen::Map<const CVector>(x.data(), dim * dim);
        CVector o = superop.adjoint() * v;
        return Eigen::Map<const CMatrix>(o.data(), dim, dim);
      }
    }
    throw std::logic_error("RdMapSpec: unknown kind");
  }

  CMatrix superoperator() const {
    return superop_matrix(dim, dim, [this](const CMatrix& u) { return apply(u); });
  }
};

inline DensityMatrix apply_rd_map(const RdMapSpec& spec, const DensityMatrix& rho,
                                  const ToleranceSet& tol = {}) {
  if (rho.dim() != spec.dim)
    throw std::invalid_argument("apply_rd_map: dimension mismatch");
  CMatrix out = hermitize(spec.apply(rho.matrix()));
  double me = min_eigenvalue(out);
  double tr = out.trace().real();
  if (me < -tol.psd_tol || std::abs(tr - 1.0) > tol.trace_tol)
    throw std::invalid_argument("apply_rd_map: output is not a state");
  return DensityMatrix(out, tol);
}

// Checks the RD-map contract against a free set: free states are fixed
// (or merely mapped into the set for pseudo maps) and the map is idempotent.
struct RdMapValidation {
  bool ok = true;
  double fix_residual = 0.0;
  double idempotence_residual = 0.0;
  std::string reason;
};

inline std::vector<CMatrix> sample_free_states(const FreeStateSet& f, int count,
                                               Rng& rng) {
  std::vector<CMatrix> out;
  switch (f.kind()) {
    case FreeSetKind::gibbs_singleton:
      out.push_back(f.gibbs_state());
      break;
    case FreeSetKind::separable_ppt_2x2: {
      for (int i = 0; i < count; ++i) {
        CMatrix s = CMatrix::Zero(4, 4);
        int terms = 1 + static_cast<int>(rng.integer(3));
        RVector w(terms);
        for (int t = 0; t < terms; ++t) w(t) = rng.uniform() + 1e-3;
        w /= w.sum();
        for (int t = 0; t < terms; ++t) {
          CVector a = random_pure_ket(2, rng), b = random_pure_ket(2, rng);
          CVector ab = kron_vec(a, b);
          s += w(t) * (ab * ab.adjoint()).eval();
        }
        out.push_back(s);
      }
      break;
    }
    default: {
      const auto& verts = f.vertex_list();
      for (const auto& v : verts) out.push_back(v);
      for (int i = 0; i < count; ++i) {
        RVector w(verts.size());
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = rng.uniform() + 1e-6;
        w /= w.sum();
        CMatrix s = CMatrix::Zero(f.dim(), f.dim());
        for (std::size_t j = 0; j < verts.size(); ++j) s += w(j) * verts[j];
        out.push_back(s);
      }
    }
  }
  return out;
}

namespace detail {
inline Eigen::Index span_rank(const std::vector<CMatrix>& ms, double thresh);
}

inline RdMapValidation validate_rd_map(const RdMapSpec& spec, const FreeStateSet& f,
                                       std::uint64_t seed = 17,
                                       double fix_tol = 1e-8) {
  RdMapValidation v;
  if (spec.dim != f.dim()) {
    v.ok = false;
    v.reason = "dimension mismatch";
    return v;
  }
  // A linear RD channel cannot exist when every state has finite free
  // robustness (the span of the free set is the whole operator space).
  if (spec.is_channel && !spec.is_pseudo) {
    bool ffr = false;
    if (f.kind() == FreeSetKind::separable_ppt_2x2) ffr = true;
    else if (f.has_vertices())
      ffr = detail::span_rank(f.vertex_list(), 1e-9) == f.dim() * f.dim();
    if (ffr) {
      v.ok = false;
      v.reason = "finite-free-robustness theory admits no RD channel";
      return v;
    }
  }
  Rng rng(seed);
  auto frees = sample_free_states(f, 8, rng);
  for (const auto& s : frees) {
    CMatrix img = spec.apply(s);
    if (spec.is_pseudo) {
      MembershipReport m = membership(DensityMatrix(hermitize(img)), f, 1e-7);
      if (!m.inside) {
        v.ok = false;
        v.reason = "pseudo map image left the free set";
        return v;
      }
    } else {
      v.fix_residual = std::max(v.fix_residual, max_abs(img - s));
    }
  }
  if (!spec.is_pseudo && v.fix_residual > fix_tol) {
    v.ok = false;
    v.reason = "free states not fixed";
    return v;
  }
  if (!spec.is_pseudo) {
    for (int i = 0; i < 6; ++i) {
      CMatrix rho = random_density(f.dim(), rng);
      CMatrix once = spec.apply(rho);
      CMatrix twice = spec.apply(once);
      v.idempotence_residual = std::max(v.idempotence_residual, max_abs(twice - once));
    }
    if (v.idempotence_residual > 1e-9) {
      v.ok = false;
      v.reason = "map is not idempotent";
      return v;
    }
  }
  return v;
}

// --- reference families ------------------------------------------------------

enum class LadderKind { all, pow2, squares, explicit_list };
enum class RefConstructor { golden, explicit_states, tensor_power };

struct ReferenceFamily {
  LadderKind ladder_kind = LadderKind::explicit_list;
  std::vector<Eigen::Index> ladder;  // explicit entries (sorted)
  RefConstructor ctor = RefConstructor::golden;
  std::string golden_tag;                     // builtin theory tag for golden states
  std::map<Eigen::Index, CVector> explicit_kets;
  CVector seed_ket;                           // tensor_power

  bool contains(Eigen::Index d) const {
    switch (ladder_kind) {
      case LadderKind::all: return d >= 2;
      case LadderKind::pow2: {
        if (d < 2) return false;
        while (d % 2 == 0) d /= 2;
        return d == 1;
      }
      case LadderKind::squares: {
        auto r = static_cast<Eigen::Index>(std::llround(std::sqrt(double(d))));
        return d >= 4 && r * r == d;
      }
      case LadderKind::explicit_list:
        return std::find(ladder.begin(), ladder.end(), d) != ladder.end();
    }
    return false;
  }

  // Ascending ladder entries up to the cap.
  std::vector<Eigen::Index> entries(Eigen::Index cap) const {
    std::vector<Eigen::Index> out;
    switch (ladder_kind) {
      case LadderKind::all:
        for (Eigen::Index d = 2; d <= cap; ++d) out.push_back(d);
        break;
      case LadderKind::pow2:
        for (Eigen::Index d = 2; d <= cap; d *= 2) out.push_back(d);
        break;
      case LadderKind::squares:
        for (Eigen::Index k = 2; k * k <= cap; ++k) out.push_back(k * k);
        break;
      case LadderKind::explicit_list:
        for (auto d : ladder)
          if (d <= cap) out.push_back(d);
        break;
    }
    return out;
  }

  std::optional<Eigen::Index> down(Eigen::Index d) const {
    std::optional<Eigen::Index> best;
    for (auto e : entries(d - 1))
      if (e < d) best = e;
    return best;
  }
  std::optional<Eigen::Index> up(Eigen::Index d, Eigen::Index cap = 4096) const {
    for (auto e : entries(cap))
      if (e > d) return e;
    return std::nullopt;
  }
};

// --- builtin theories --------------------------------------------------------

struct BuiltinTheory {
  std::string tag;  // e.g. "coherence:3", "magic1", "thermo:0,1:1"
  FreeStateSet free_set;
  std::optional<RdMapSpec> rd_map;
  ReferenceFamily family;
};

// Golden state of the single-qubit stabilizer octahedron, Bloch (1,1,1)/sqrt(3)
// (canonical octant).
inline CVector magic_golden_ket() {
  double theta = std::acos(1.0 / std::sqrt(3.0));
  CVector k(2);
  k << std::cos(theta / 2.0),
      std::exp(Complex(0, kPi / 4.0)) * std::sin(theta / 2.0);
  return k;
}

inline CVector t_state_ket() {
  CVector k(2);
  k << 1.0 / std::sqrt(2.0), std::exp(Complex(0, kPi / 4.0)) / std::sqrt(2.0);
  return k;
}

inline std::vector<CMatrix> octahedron_vertices() {
  std::vector<CMatrix> v;
  for (const CMatrix& p : {pauli_x(), pauli_y(), pauli_z()}) {
    v.push_back(0.5 * (identityC(2) + p));
    v.push_back(0.5 * (identityC(2) - p));
  }
  return v;
}

// All pure two-qubit stabilizer states, enumerated from commuting independent
// signed Pauli pairs and deduplicated by projector equality.
inline std::vector<CMatrix> two_qubit_stabilizer_states() {
  // Single-qubit Paulis indexed by (x, z) with the i^{xz} phase convention.
  auto pauli1 = [](int x, int z) -> CMatrix {
    CMatrix m = identityC(2);
    if (x && z) m = pauli_y();
    else if (x) m = pauli_x();
    else if (z) m = pauli_z();
    return m;
  };
  std::vector<CMatrix> paulis;
  std::vector<std::array<int, 4>> codes;
  for (int x1 = 0; x1 < 2; ++x1)
    for (int z1 = 0; z1 < 2; ++z1)
      for (int x2 = 0; x2 < 2; ++x2)
        for (int z2 = 0; z2 < 2; ++z2) {
          if (x1 == 0 && z1 == 0 && x2 == 0 && z2 == 0) continue;
          paulis.push_back(kron(pauli1(x1, z1), pauli1(x2, z2)));
          codes.push_back({x1, z1, x2, z2});
        }
  auto commute = [](const std::array<int, 4>& a, const std::array<int, 4>& b) {
    int sp = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] + a[3] * b[2];
    return sp % 2 == 0;
  };
  std::vector<CMatrix> states;
  for (std::size_t i = 0; i < paulis.size(); ++i)
    for (int si : {1, -1})
      for (std::size_t j = 0; j < paulis.size(); ++j) {
        if (i == j || !commute(codes[i], codes[j])) continue;
        for (int sj : {1, -1}) {
          CMatrix proj = 0.25 * (identityC(4) + double(si) * paulis[i]) *
                         (identityC(4) + double(sj) * paulis[j]);
          proj = hermitize(proj);
          if (std::abs(proj.trace().real() - 1.0) > 1e-9) continue;
          if (max_abs(proj * proj - proj) > 1e-9) continue;
          bool dup = false;
          for (const auto& s : states)
            if (max_abs(s - proj) < 1e-9) {
              dup = true;
              break;
            }
          if (!dup) states.push_back(proj);
        }
      }
  return states;
}

// Golden state of a two-basis-state superposition theory: the pure state on
// the Bloch slice through both basis kets, opposite their bisector.
inline CVector superposition_golden_ket(const CVector& a, const CVector& b) {
  CMatrix pa = a * a.adjoint(), pb = b * b.adjoint();
  Eigen::Vector3d ba = bloch_vector(pa), bb = bloch_vector(pb);
  Eigen::Vector3d n = -(ba + bb);
  double nn = n.norm();
  if (nn < 1e-12)
    throw std::invalid_argument("superposition: basis states are antipodal");
  n /= nn;
  EigH e = eig_hermitian(state_from_bloch(n(0), n(1), n(2)));
  return e.vectors.col(e.values.size() - 1);
}

inline CVector tensor_power_ket(const CVector& seed, int copies) {
  CVector out = seed;
  for (int i = 1; i < copies; ++i) out = kron_vec(out, seed).eval();
  return out;
}

struct SuperpositionBasis {
  CVector a, b;
};

// Default two-level superposition basis pair: |0> and a non-orthogonal
// partner at the given Bloch angle from |0> in the X-Z plane.
inline SuperpositionBasis default_superposition_basis(double angle_rad = kPi / 4) {
  CVector a = basis_ket(2, 0);
  CVector b(2);
  b << std::cos(angle_rad / 2.0), std::sin(angle_rad / 2.0);
  return {a, b};
}

BuiltinTheory builtin_theory(const std::string& name,
                             const std::vector<double>& params = {});

// Free set of the same builtin theory at another dimension (ladder scans).
inline FreeStateSet builtin_free_set_for_dim(const std::string& tag, Eigen::Index d);

namespace detail {

inline std::string format_params(const std::vector<double>& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ",";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", p[i]);
    s += buf;
  }
  return s;
}

}  // namespace detail

inline BuiltinTheory builtin_theory(const std::string& name,
                                    const std::vector<double>& params) {
  BuiltinTheory t;
  if (name == "coherence") {
    Eigen::Index d = params.empty() ? 2 : static_cast<Eigen::Index>(params[0]);
    if (d < 2) throw std::invalid_argument("coherence: dim >= 2 required");
    t.tag = "coherence:" + std::to_string(d);
    t.free_set = FreeStateSet::diagonal_simplex(d);
    t.rd_map = RdMapSpec::complete_dephasing_map(d);
    t.family.ladder_kind = LadderKind::all;
    t.family.ctor = RefConstructor::golden;
    t.family.golden_tag = "coherence";
  } else if (name == "magic_qubit" || name == "magic1" || name == "magic2") {
    int n = name == "magic1" ? 1 : name == "magic2" ? 2
            : params.empty() ? 1 : static_cast<int>(params[0]);
    if (n < 1 || n > 2) throw std::invalid_argument("magic_qubit: n in {1,2}");
    t.tag = "magic" + std::to_string(n);
    if (n == 1) {
      t.free_set = FreeStateSet::vertex_polytope(octahedron_vertices());
    } else {
      auto verts = two_qubit_stabilizer_states();
      if (verts.size() != 60)
        throw std::logic_error("magic_qubit(2): stabilizer enumeration != 60");
      t.free_set = FreeStateSet::vertex_polytope(verts);
    }
    t.family.ladder_kind = LadderKind::explicit_list;
    t.family.ladder = {2, 4};
    t.family.ctor = RefConstructor::tensor_power;
    t.family.seed_ket = magic_golden_ket();
  } else if (name == "thermo") {
    if (params.size() < 3)
      throw std::invalid_argument("thermo: need energies... and temperature");
    RVector energies(params.size() - 1);
    for (std::size_t i = 0; i + 1 < params.size(); ++i) energies(i) = params[i];
    double temp = params.back();
    t.tag = "thermo:" + detail::format_params(params);
    t.free_set = FreeStateSet::gibbs_singleton(energies, temp);
    t.rd_map = RdMapSpec::constant_state_map(t.free_set.gibbs_state());
    t.family.ladder_kind = LadderKind::explicit_list;
    t.family.ladder = {energies.size()};
    t.family.ctor = RefConstructor::golden;
    t.family.golden_tag = t.tag;
  } else if (name == "superposition") {
    int n = params.empty() ? 1 : static_cast<int>(params[0]);
    double angle = params.size() > 1 ? params[1] : kPi / 4;
    if (n < 1 || n > 4) throw std::invalid_argument("superposition: n in 1..4");
    auto basis = default_superposition_basis(angle);
    CVector a = tensor_power_ket(basis.a, n);
    CVector b = tensor_power_ket(basis.b, n);
    t.tag = "superposition:" + std::to_string(n) + ":" + detail::format_params({angle});
    t.free_set = FreeStateSet::vertex_polytope(
        {a * a.adjoint(), b * b.adjoint()});
    t.family.ladder_kind = LadderKind::explicit_list;
    for (int k = 1; k <= n; ++k)
      t.family.ladder.push_back(Eigen::Index(1) << k);
    t.family.ctor = RefConstructor::golden;
    t.family.golden_tag = "superposition:" + detail::format_params({angle});
  } else if (name == "entanglement_2x2" || name == "entanglement2x2") {
    t.tag = "entanglement_2x2";
    t.free_set = FreeStateSet::separable_ppt_2x2();
    t.family.ladder_kind = LadderKind::explicit_list;
    t.family.ladder = {4};
    t.family.ctor = RefConstructor::golden;
    t.family.golden_tag = "entanglement";
  } else {
    throw std::invalid_argument("builtin_theory: unsupported name " + name);
  }
  t.free_set.set_builtin_tag(t.tag);
  return t;
}

// Rebuilds the whole builtin theory at another dimension of its ladder.
inline BuiltinTheory builtin_theory_for_dim(const std::string& tag, Eigen::Index d) {
  auto colon = tag.find(':');
  std::string name = colon == std::string::npos ? tag : tag.substr(0, colon);
  if (name == "coherence") return builtin_theory("coherence", {double(d)});
  if (name == "magic1" || name == "magic2") {
    if (d == 2) return builtin_theory("magic_qubit", {1});
    if (d == 4) return builtin_theory("magic_qubit", {2});
    throw std::invalid_argument("magic theory: only d in {2,4}");
  }
  if (name == "superposition") {
    std::string rest = tag.substr(colon + 1);
    auto c2 = rest.find(':');
    double angle = c2 == std::string::npos ? kPi / 4 : std::stod(rest.substr(c2 + 1));
    int n = 0;
    Eigen::Index dd = d;
    while (dd > 1) {
      dd /= 2;
      ++n;
    }
    if ((Eigen::Index(1) << n) != d)
      throw std::invalid_argument("superposition theory: d must be a power of 2");
    return builtin_theory("superposition", {double(n), angle});
  }
  if (name == "entanglement_2x2") {
    if (d != 4) throw std::invalid_argument("entanglement theory: d = 4 only");
    return builtin_theory("entanglement_2x2");
  }
  throw std::invalid_argument("builtin_theory_for_dim: unsupported tag " + tag +
                              " at d=" + std::to_string(d));
}

inline FreeStateSet builtin_free_set_for_dim(const std::string& tag, Eigen::Index d) {
  auto colon = tag.find(':');
  std::string name = colon == std::string::npos ? tag : tag.substr(0, colon);
  if (name == "coherence") return builtin_theory("coherence", {double(d)}).free_set;
  if (name == "magic1" || name == "magic2") {
    if (d == 2) return builtin_theory("magic_qubit", {1}).free_set;
    if (d == 4) return builtin_theory("magic_qubit", {2}).free_set;
    throw std::invalid_argument("magic free set: only d in {2,4}");
  }
  if (name == "superposition") {
    // tag: superposition:n:angle
    std::string rest = tag.substr(colon + 1);
    auto c2 = rest.find(':');
    double angle = c2 == std::string::npos ? kPi / 4 : std::stod(rest.substr(c2 + 1));
    int n = 0;
    Eigen::Index dd = d;
    while (dd > 1) {
      dd /= 2;
      ++n;
    }
    if ((Eigen::Index(1) << n) != d)
      throw std::invalid_argument("superposition free set: d must be a power of 2");
    return builtin_theory("superposition", {double(n), angle}).free_set;
  }
  if (name == "thermo") {
    throw std::invalid_argument("thermo free set: single-dimension theory");
  }
  if (name == "entanglement_2x2") {
    if (d != 4) throw std::invalid_argument("entanglement free set: d = 4 only");
    return builtin_theory("entanglement_2x2").free_set;
  }
  throw std::invalid_argument("builtin_free_set_for_dim: unknown tag " + tag);
}

// Reference state constructor.
inline PureState reference_state(const ReferenceFamily& fam, Eigen::Index d) {
  if (!fam.contains(d))
    throw std::invalid_argument("reference_state: d not in the ladder");
  switch (fam.ctor) {
    case RefConstructor::explicit_states: {
      auto it = fam.explicit_kets.find(d);
      if (it == fam.explicit_kets.end())
        throw std::invalid_argument("reference_state: no explicit state for d");
      return PureState(it->second);
    }
    case RefConstructor::tensor_power: {
      Eigen::Index base = fam.seed_ket.size();
      Eigen::Index dd = d;
      int k = 0;
      while (dd > 1 && dd % base == 0) {
        dd /= base;
        ++k;
      }
      if (dd != 1)
        throw std::invalid_argument("reference_state: d is not a seed power");
      return PureState(tensor_power_ket(fam.seed_ket, k));
    }
    case RefConstructor::golden: {
      const std::string& tag = fam.golden_tag;
      auto name = tag.substr(0, tag.find(':'));
      if (name == "coherence") return PureState(uniform_superposition_ket(d));
      if (name == "magic1" || name == "magic") {
        if (d == 2) return PureState(magic_golden_ket());
        if (d == 4) return PureState(tensor_power_ket(magic_golden_ket(), 2));
        throw std::invalid_argument("magic golden family: d in {2,4}");
      }
      if (name == "entanglement") {
        auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(double(d))));
        if (k * k != d)
          throw std::invalid_argument("entanglement family: d must be a square");
        return PureState(maximally_entangled_ket(k));
      }
      if (name == "superposition") {
        double angle = tag.find(':') == std::string::npos
                           ? kPi / 4
                           : std::stod(tag.substr(tag.find(':') + 1));
        auto basis = default_superposition_basis(angle);
        CVector g = superposition_golden_ket(basis.a, basis.b);
        Eigen::Index dd = d;
        int n = 0;
        while (dd > 1) {
          dd /= 2;
          ++n;
        }
        return PureState(tensor_power_ket(g, n));
      }
      if (name == "thermo") {
        // Eigenstate of the maximum energy, lowest index on ties.
        BuiltinTheory t = builtin_theory("thermo", [&] {
          std::vector<double> p;
          std::string rest = tag.substr(tag.find(':') + 1);
          std::size_t pos = 0;
          std::string seg;
          std::string rest2 = rest;
          // params were formatted as E1,...,En,T joined with ',' and ':'
          for (char& c : rest2)
            if (c == ':') c = ',';
          while ((pos = rest2.find(',')) != std::string::npos) {
            p.push_back(std::stod(rest2.substr(0, pos)));
            rest2.erase(0, pos + 1);
          }
          p.push_back(std::stod(rest2));
          return p;
        }());
        const RVector& en = t.free_set.energies();
        Eigen::Index imax = 0;
        for (Eigen::Index i = 1; i < en.size(); ++i)
          if (en(i) > en(imax) + 1e-15) imax = i;
        return PureState(basis_ket(en.size(), imax));
      }
      throw std::invalid_argument("reference_state: unknown golden tag " + tag);
    }
  }
  throw std::logic_error("reference_state: unreachable");
}

struct Neighbors {
  std::optional<Eigen::Index> down, up;
};

inline Neighbors neighbors(const ReferenceFamily& fam, Eigen::Index d) {
  if (!fam.contains(d))
    throw std::invalid_argument("neighbors: d not in the ladder");
  return Neighbors{fam.down(d), fam.up(d)};
}

// --- classification -----------------------------------------------------------

struct FlagEvidence {
  bool value = false;
  bool certified = false;
  std::string method;
  double residual = 0.0;
};

struct TheoryClassification {
  FlagEvidence convex, affine, ffr, ch, ct;
};

namespace detail {

inline Eigen::Index span_rank(const std::vector<CMatrix>& ms, double thresh = 1e-9) {
  if (ms.empty()) return 0;
  Eigen::Index d = ms.front().rows();
  RMatrix a(static_cast<Eigen::Index>(ms.size()), d * d);
  for (std::size_t i = 0; i < ms.size(); ++i)
    a.row(static_cast<Eigen::Index>(i)) = ConicProgram::svec(ms[i]).transpose();
  Eigen::ColPivHouseholderQR<RMatrix> qr(a.transpose());
  qr.setThreshold(thresh);
  return qr.rank();
}

// Minimum of the j-th barycentric coordinate over the PSD slice of the
// affine hull of an affinely independent vertex set. The slice constraint
// is imposed directly on the block (orthocomplement rows of the hull), and
// the coordinate is an affine functional recovered from the pseudo-inverse
// of the difference matrix.
inline std::optional<double> min_barycentric_coord(
    const std::vector<CMatrix>& verts, std::size_t j) {
  Eigen::Index d = verts.front().rows();
  Eigen::Index m = static_cast<Eigen::Index>(verts.size());
  Eigen::Index n = d * d;
  RVector v0 = ConicProgram::svec(verts[0]);
  RMatrix diffs(n, m - 1);
  for (Eigen::Index k = 1; k < m; ++k)
    diffs.col(k - 1) = ConicProgram::svec(verts[k]) - v0;

  Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(diffs);
  RMatrix pinv = cod.pseudoInverse();  // (m-1) x n
  RVector w = j >= 1 ? RVector(pinv.row(static_cast<Eigen::Index>(j) - 1))
                     : RVector(-pinv.colwise().sum());

  ConicProgram p;
  BlockRef x = p.add_block(d, ConicProgram::smat(w, d));
  Eigen::HouseholderQR<RMatrix> qr(diffs);
  RMatrix qfull = qr.householderQ();
  for (Eigen::Index k = m - 1; k < n; ++k) {
    RVector nk = qfull.col(k);
    p.row().m(x, ConicProgram::smat(nk, d)).eq(nk.dot(v0));
  }
  SolveReport r = solve_sdp(p);
  if (r.status != SolveStatus::optimal) return std::nullopt;
  return r.objective - w.dot(v0) + (j == 0 ? 1.0 : 0.0);
}

}  // namespace detail

inline TheoryClassification classify_theory(
    const FreeStateSet& f, const std::optional<ReferenceFamily>& family = std::nullopt,
    Eigen::Index ct_ladder_cap = 8) {
  TheoryClassification c;
  Eigen::Index d = f.dim();

  c.convex = {true, true, "structural", 0.0};

  switch (f.kind()) {
    case FreeSetKind::diagonal_simplex:
      c.affine = {true, true, "structural(diagonal)", 0.0};
      c.ffr = {false, true, "span-rank", 0.0};
      c.ch = {true, true, "structural", 0.0};
      break;
    case FreeSetKind::gibbs_singleton:
      c.affine = {true, true, "structural(singleton)", 0.0};
      c.ffr = {d == 1, true, "span-rank", 0.0};
      c.ch = {false, true, "structural", 0.0};
      break;
    case FreeSetKind::separable_ppt_2x2:
      c.affine = {false, true, "structural(separable)", 0.0};
      c.ffr = {true, true, "structural(separable-span)", 0.0};
      c.ch = {true, true, "structural", 0.0};
      break;
    case FreeSetKind::vertex_polytope: {
      const auto& verts = f.vertex_list();
      Eigen::Index rank = detail::span_rank(verts);
      c.ffr = {rank == d * d, true, "span-rank", double(rank)};

      bool all_pure = true;
      for (const auto& v : verts)
        if (std::abs((v * v).trace().real() - 1.0) > 1e-9) all_pure = false;
      c.ch = {all_pure, true, "vertex-purity", 0.0};

      // Affinity: conv(V) = aff(V) /\ D(H)?
      if (rank == d * d && verts.size() < std::size_t(1) << 20) {
        // A finite polytope cannot equal the full state space for d >= 2.
        c.affine = {false, true, "full-span", double(rank)};
      } else {
        // Affine dimension.
        std::vector<CMatrix> diffs;
        for (std::size_t k = 1; k < verts.size(); ++k)
          diffs.push_back(verts[k] - verts[0]);
        Eigen::Index adim = detail::span_rank(diffs);
        if (static_cast<Eigen::Index>(verts.size()) == adim + 1) {
          // Simplex: barycentric coordinates are unique affine functions;
          // the slice equals the polytope iff every coordinate stays >= 0.
          bool affine = true;
          bool certified = true;
          double worst = 0.0;
          for (std::size_t j = 0; j < verts.size(); ++j) {
            auto mn = detail::min_barycentric_coord(verts, j);
            if (!mn) {
              certified = false;
              continue;
            }
            worst = std::min(worst, *mn);
            if (*mn < -1e-7) affine = false;
          }
          c.affine = {affine, certified, "barycentric-sdp", worst};
        } else {
          // Non-simplex with deficient span: no certified test here; report
          // false so robustness falls back to the LP itself.
          c.affine = {false, false, "undecided-nonsimplex", 0.0};
        }
      }
      break;
    }
  }

  // Constant-trace condition for the supplied family.
  if (family) {
    double worst = 0.0;
    bool computed = false;
    bool ok = true;
    for (Eigen::Index dd : family->entries(ct_ladder_cap)) {
      FreeStateSet fs = (dd == f.dim())
                            ? f
                            : builtin_free_set_for_dim(f.builtin_tag(), dd);
      PureState phi = reference_state(*family, dd);
      CMatrix proj = phi.projector();
      double lo = kInf, hi = -kInf;
      if (fs.has_vertices()) {
        for (const auto& v : fs.vertex_list()) {
          double t = (proj * v).trace().real();
          lo = std::min(lo, t);
          hi = std::max(hi, t);
        }
      } else if (fs.kind() == FreeSetKind::gibbs_singleton) {
        lo = hi = (proj * fs.gibbs_state()).trace().real();
      } else {
        // Separable set: extremal overlaps over PPT states via eigenbounds
        // would need an SDP; the overlap with product states already shows
        // non-constancy for any entangled reference.
        Rng rng(5);
        for (int i = 0; i < 64; ++i) {
          CVector a = random_pure_ket(2, rng), b = random_pure_ket(2, rng);
          CVector ab = kron_vec(a, b);
          double t = (ab.adjoint() * proj * ab)(0, 0).real();
          lo = std::min(lo, t);
          hi = std::max(hi, t);
        }
      }
      computed = true;
      worst = std::max(worst, hi - lo);
      if (hi - lo > 1e-10) ok = false;
    }
    if (computed)
      c.ct = {ok, f.kind() != FreeSetKind::separable_ppt_2x2, "vertex-range", worst};
  } else {
    c.ct = {false, false, "no-family", 0.0};
  }
  return c;
}

}  // namespace qrt

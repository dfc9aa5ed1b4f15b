#pragma once

// One-shot formation-cost and distillation-yield bounds, the explicit
// achievability channels behind them (with full certificates), and an exact
// conversion-feasibility oracle used to sandwich every bound at desk scale.

#include "qrt/golden.hpp"

namespace qrt {

// Variant preconditions that fail produce this (machine-readable reason);
// certificate violations are hard runtime errors instead.
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

enum class TaskKind { formation, distillation, distillation_input_error };

inline const char* to_string(TaskKind t) {
  switch (t) {
    case TaskKind::formation: return "formation";
    case TaskKind::distillation: return "distillation";
    default: return "distillation-input-error";
  }
}

enum class BoundDirection { lower, upper };

struct LadderEcho {
  Eigen::Index d = 0;
  double measure_value = 0.0;  // the per-dimension reference measure scanned
};

struct BoundReport {
  TaskKind task = TaskKind::formation;
  BoundDirection direction = BoundDirection::lower;
  std::string variant;
  std::optional<Eigen::Index> d0;
  std::string no_d0_reason;
  double bound_bits = std::numeric_limits<double>::quiet_NaN();
  double log_d0_bits = std::numeric_limits<double>::quiet_NaN();
  double eps = 0.0;
  std::string theory_tag;
  double smoothed_measure = 0.0;  // the rho-side quantity entering the rule
  std::vector<LadderEcho> ladder_scan;
  bool estimated = false;
};

struct ConversionCertificate {
  Eigen::Index d_in = 0, d_out = 0;
  CMatrix choi;
  double min_eig = 0.0;
  double tp_residual = 0.0;
  double freeness_residual = 0.0;             // max per-vertex membership residual
  std::optional<double> commutation_residual; // when commutation-verified
  double output_fidelity = 0.0;
  std::string construction;
  bool valid = false;

  ChannelChoi channel(const ToleranceSet& tol = {}) const {
    return ChannelChoi(d_in, d_out, choi, tol);
  }
};

// Free set of the same theory at another ladder dimension.
inline FreeStateSet free_set_at(const BuiltinTheory& th, Eigen::Index d) {
  if (d == th.free_set.dim()) return th.free_set;
  return builtin_free_set_for_dim(th.free_set.builtin_tag(), d);
}

// --- channel freeness verification ------------------------------------------------

struct FreenessReport {
  bool ok = false;
  double max_residual = 0.0;
  std::string note;
};

// Resource-non-generation: every free input maps into the output free set.
// Vertex sets are checked exactly on their vertices (convexity covers the
// rest); the PPT input set is probed on a spanning family of pure product
// states (a relaxation, noted).
inline FreenessReport verify_freeness(const ChannelChoi& e, const FreeStateSet& f_in,
                                      const FreeStateSet& f_out,
                                      double tol = 1e-7) {
  FreenessReport rep;
  std::vector<CMatrix> probes;
  if (f_in.has_vertices()) {
    probes = f_in.vertex_list();
  } else if (f_in.kind() == FreeSetKind::gibbs_singleton) {
    probes.push_back(f_in.gibbs_state());
  } else {
    Rng rng(2);
    for (int i = 0; i < 24; ++i) {
      CVector a = random_pure_ket(2, rng), b = random_pure_ket(2, rng);
      CVector ab = kron_vec(a, b);
      probes.push_back(ab * ab.adjoint());
    }
    rep.note = "ppt input set probed on product states (relaxation)";
  }
  double worst = 0.0;
  for (const auto& p : probes) {
    DensityMatrix img = apply_channel(e, DensityMatrix(p));
    MembershipReport m = membership(img, f_out, tol);
    double r = m.inside ? m.residual : std::max(m.residual, 10.0 * tol);
    worst = std::max(worst, r);
  }
  rep.max_residual = worst;
  rep.ok = worst <= tol;
  return rep;
}

// Superoperator commutation residual || lam_out . E - E . lam_in ||_max over
// the matrix-unit basis.
inline double commutation_residual(const ChannelChoi& e, const RdMapSpec& lam_in,
                                   const RdMapSpec& lam_out) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e.dim_in(); ++i)
    for (Eigen::Index j = 0; j < e.dim_in(); ++j) {
      CMatrix unit = CMatrix::Zero(e.dim_in(), e.dim_in());
      unit(i, j) = 1.0;
      CMatrix a = lam_out.apply(e.apply_matrix(unit));
      CMatrix b = e.apply_matrix(lam_in.apply(unit));
      worst = std::max(worst, max_abs(a - b));
    }
  return worst;
}

namespace detail {

inline void require(bool cond, const std::string& reason) {
  if (!cond) throw PreconditionError(reason);
}

inline void certify(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error("certificate failure: " + what);
}

// Choi matrix of omega |-> Tr(P omega) * top + (Tr omega - Tr(P omega)) * bot.
inline CMatrix measure_prepare_choi(const CMatrix& p, const CMatrix& top,
                                    const CMatrix& bot) {
  Eigen::Index d_in = p.rows(), d_out = top.rows();
  CMatrix j = CMatrix::Zero(d_in * d_out, d_in * d_out);
  CMatrix pt = p.transpose();
  for (Eigen::Index i = 0; i < d_in; ++i)
    for (Eigen::Index k = 0; k < d_in; ++k)
      j.block(i * d_out, k * d_out, d_out, d_out) =
          pt(i, k) * top + ((i == k ? 1.0 : 0.0) - pt(i, k)) * bot;
  return hermitize(j);
}

inline ConversionCertificate certify_map(
    const CMatrix& j, Eigen::Index d_in, Eigen::Index d_out,
    const FreeStateSet& f_in, const FreeStateSet& f_out,
    const std::optional<std::pair<RdMapSpec, RdMapSpec>>& comm_pair,
    const CMatrix& input_state, const CMatrix& target_state, double eps,
    const std::string& construction, const ToleranceSet& tol) {
  ConversionCertificate cert;
  cert.d_in = d_in;
  cert.d_out = d_out;
  cert.choi = j;
  cert.construction = construction;
  ChannelChoi e(d_in, d_out, j, tol, /*validate=*/false);
  ChannelValidation v = e.validation(tol);
  cert.min_eig = v.min_eig;
  cert.tp_residual = v.tp_residual;
  certify(v.min_eig >= -tol.psd_tol, construction + ": Choi not PSD (" +
                                         std::to_string(v.min_eig) + ")");
  certify(v.tp_residual <= tol.tp_tol, construction + ": not trace preserving");
  if (comm_pair) {
    cert.commutation_residual =
        commutation_residual(e, comm_pair->first, comm_pair->second);
    certify(*cert.commutation_residual <= tol.commutation_tol,
            construction + ": commutation residual too large");
  } else {
    FreenessReport fr = verify_freeness(e, f_in, f_out, tol.membership_tol);
    cert.freeness_residual = fr.max_residual;
    certify(fr.ok, construction + ": resource generated on a free input");
  }
  DensityMatrix out = apply_channel(e, DensityMatrix(input_state), tol);
  cert.output_fidelity = fidelity(out.matrix(), target_state);
  certify(cert.output_fidelity >= 1.0 - eps - 1e-8,
          construction + ": output fidelity below 1-eps");
  cert.valid = true;
  return cert;
}

}  // namespace detail

// --- formation ---------------------------------------------------------------------

enum class FormationLowerVariant { dmax, lr, dmax_lambda };
enum class FormationMapVariant { ct_map, ffr_map, comm_ct_map };

inline const char* to_string(FormationLowerVariant v) {
  switch (v) {
    case FormationLowerVariant::dmax: return "dmax";
    case FormationLowerVariant::lr: return "lr";
    default: return "dmax_lambda";
  }
}
inline const char* to_string(FormationMapVariant v) {
  switch (v) {
    case FormationMapVariant::ct_map: return "ct_map";
    case FormationMapVariant::ffr_map: return "ffr_map";
    default: return "comm_ct_map";
  }
}

inline BoundReport formation_lower_bound(const DensityMatrix& rho,
                                         const BuiltinTheory& th, double eps,
                                         FormationLowerVariant variant,
                                         Eigen::Index ladder_cap = 16,
                                         const ToleranceSet& tol = {}) {
  BoundReport rep;
  rep.task = TaskKind::formation;
  rep.direction = BoundDirection::lower;
  rep.variant = to_string(variant);
  rep.eps = eps;
  rep.theory_tag = th.tag;

  double measure_rho = 0.0;
  if (variant == FormationLowerVariant::dmax) {
    measure_rho = smooth_measure(rho, th.free_set, eps, SmoothKind::dmax, 7, tol).value;
  } else if (variant == FormationLowerVariant::lr) {
    TheoryClassification c = classify_theory(th.free_set, th.family);
    detail::require(c.ffr.value,
                    "lr formation bound needs finite free robustness (FFR)");
    MeasureReport m = smooth_measure(rho, th.free_set, eps, SmoothKind::lr, 7, tol);
    measure_rho = *m.lr;
  } else {
    detail::require(th.rd_map.has_value(),
                    "dmax_lambda formation bound needs an RD map");
    measure_rho =
        lambda_measure(rho, *th.rd_map, LambdaKind::dmax_lambda, eps,
                       th.free_set, 7, tol)
            .value;
  }
  rep.smoothed_measure = measure_rho;

  for (Eigen::Index d : th.family.entries(ladder_cap)) {
    FreeStateSet fd = free_set_at(th, d);
    DensityMatrix phi = reference_state(th.family, d).density();
    double val = 0.0;
    if (variant == FormationLowerVariant::dmax) {
      val = resource_measure(phi, fd, ResourceKind::dmax, 0.0, tol).value;
    } else if (variant == FormationLowerVariant::lr) {
      val = *free_robustness(phi, fd, tol).lr;
    } else {
      // RD map of the same theory at dimension d.
      BuiltinTheory thd = d == th.free_set.dim()
                              ? th
                              : builtin_theory_for_dim(th.free_set.builtin_tag(), d);
      detail::require(thd.rd_map.has_value(), "no RD map at ladder dimension");
      val = lambda_measure(phi, *thd.rd_map, LambdaKind::dmax_lambda, 0.0, fd, 7, tol)
                .value;
    }
    rep.ladder_scan.push_back({d, val});
    if (val >= measure_rho - 1e-9) {
      rep.d0 = d;
      rep.log_d0_bits = log2_safe(double(d));
      rep.bound_bits = measure_rho * log2_safe(double(d)) / val;
      if (val <= 1e-12) rep.bound_bits = 0.0;
      break;
    }
  }
  if (!rep.d0) rep.no_d0_reason = "ladder exhausted without a qualifying dimension";
  return rep;
}

struct AchievabilityResult {
  BoundReport bound;
  ConversionCertificate certificate;
};

inline AchievabilityResult formation_achievable(const DensityMatrix& rho,
                                                const BuiltinTheory& th, double eps,
                                                FormationMapVariant variant,
                                                Eigen::Index ladder_cap = 16,
                                                const ToleranceSet& tol = {}) {
  AchievabilityResult res;
  BoundReport& rep = res.bound;
  rep.task = TaskKind::formation;
  rep.direction = BoundDirection::upper;
  rep.variant = to_string(variant);
  rep.eps = eps;
  rep.theory_tag = th.tag;

  TheoryClassification cls = classify_theory(th.free_set, th.family, ladder_cap);
  if (variant == FormationMapVariant::ct_map ||
      variant == FormationMapVariant::comm_ct_map)
    detail::require(cls.ct.value,
                    "constant-trace condition fails for this reference family");
  if (variant == FormationMapVariant::ffr_map)
    detail::require(cls.ffr.value, "ffr_map needs finite free robustness");
  if (variant == FormationMapVariant::comm_ct_map)
    detail::require(th.rd_map.has_value(), "comm_ct_map needs an RD map");

  // rho-side smoothed quantity and its optimizer payloads.
  CMatrix rho_eps, delta;
  double measure_rho = 0.0;
  if (variant == FormationMapVariant::ct_map) {
    MeasureReport m = smooth_measure(rho, th.free_set, eps, SmoothKind::dmax, 7, tol);
    measure_rho = m.value;
    rho_eps = *m.smoothed_state;
    delta = *m.closest_free;
  } else if (variant == FormationMapVariant::ffr_map) {
    MeasureReport m = smooth_measure(rho, th.free_set, eps, SmoothKind::lr, 7, tol);
    measure_rho = *m.lr;
    rho_eps = m.smoothed_state ? *m.smoothed_state : rho.matrix();
    delta = m.robustness_mixing ? *m.robustness_mixing : rho.matrix();
  } else {
    MeasureReport m = lambda_measure(rho, *th.rd_map, LambdaKind::dmax_lambda, eps,
                                     th.free_set, 7, tol);
    measure_rho = m.value;
    rho_eps = m.smoothed_state ? *m.smoothed_state : rho.matrix();
    delta = th.rd_map->apply(rho_eps);  // lambda(rho_eps)
  }
  rep.smoothed_measure = measure_rho;

  std::optional<Eigen::Index> d0;
  double fidelity_at_d0 = 0.0;
  for (Eigen::Index d : th.family.entries(ladder_cap)) {
    FreeStateSet fd = free_set_at(th, d);
    DensityMatrix phi = reference_state(th.family, d).density();
    double f = free_fidelity(phi, fd, tol).value;
    double val = -log2_safe(std::max(f, 1e-300));
    rep.ladder_scan.push_back({d, val});
    if (val >= measure_rho - 1e-9) {
      d0 = d;
      fidelity_at_d0 = f;
      break;
    }
  }
  if (!d0) {
    rep.no_d0_reason = "ladder exhausted without a qualifying dimension";
    throw PreconditionError(rep.no_d0_reason);
  }
  rep.d0 = d0;
  rep.log_d0_bits = log2_safe(double(*d0));
  if (auto down = th.family.down(*d0)) {
    FreeStateSet fdn = free_set_at(th, *down);
    DensityMatrix phidn = reference_state(th.family, *down).density();
    double fdnv = free_fidelity(phidn, fdn, tol).value;
    double mf_down = -log2_safe(std::max(fdnv, 1e-300)) / log2_safe(double(*down));
    rep.bound_bits = (mf_down > 1e-12 ? measure_rho / mf_down : 0.0) +
                     log2_safe(double(*d0) / double(*down));
  }

  // Build the proof's map as an explicit Choi matrix.
  PureState phi0 = reference_state(th.family, *d0);
  CMatrix phi_proj = phi0.projector();
  Eigen::Index d_in = *d0, d_out = rho.dim();
  double c = fidelity_at_d0;
  CMatrix j;
  std::string cname;
  std::optional<std::pair<RdMapSpec, RdMapSpec>> comm_pair;
  if (variant == FormationMapVariant::ffr_map) {
    j = detail::measure_prepare_choi(phi_proj, rho_eps, delta);
    cname = "formation-ffr-map";
  } else {
    // delta here is the smoothing optimizer (ct) or lambda(rho_eps) (comm);
    // in both cases delta - c rho_eps >= 0 by the qualification of d0.
    CMatrix bot = (delta - c * rho_eps) / (1.0 - c);
    j = kron(phi_proj.transpose(), rho_eps) +
        kron(identityC(d_in) - phi_proj.transpose(), bot);
    j = hermitize(j);
    cname = variant == FormationMapVariant::ct_map ? "formation-ct-map"
                                                   : "formation-comm-ct-map";
    if (variant == FormationMapVariant::comm_ct_map) {
      // input-side RD map at dimension d0 of the same theory
      BuiltinTheory thd = d_in == th.free_set.dim()
                              ? th
                              : builtin_theory_for_dim(th.free_set.builtin_tag(), d_in);
      detail::require(thd.rd_map.has_value(), "no RD map at d0");
      comm_pair = std::make_pair(*thd.rd_map, *th.rd_map);
    }
  }
  res.certificate = detail::certify_map(
      j, d_in, d_out, free_set_at(th, d_in), th.free_set, comm_pair, phi_proj,
      rho.matrix(), eps, cname, tol);
  return res;
}

}  // namespace qrt

#include <catch2/catch_amalgamated.hpp>

#include "qrt/measures.hpp"

using namespace qrt;

namespace {

DensityMatrix plus_state() { return PureState(uniform_superposition_ket(2)).density(); }

// Fractional-knapsack oracle for the commuting hypothesis-testing program:
// minimize sum P_i sigma_i subject to sum P_i rho_i >= 1-eps, 0 <= P_i <= 1.
double diagonal_dh_oracle(const RVector& rho, const RVector& sigma, double eps) {
  std::vector<int> idx(rho.size());
  for (int i = 0; i < rho.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return sigma(a) * rho(b) < sigma(b) * rho(a);
  });
  double need = 1.0 - eps, cost = 0.0;
  for (int i : idx) {
    if (need <= 0) break;
    double take = std::min(1.0, rho(i) > 0 ? need / rho(i) : 1.0);
    cost += take * sigma(i);
    need -= take * rho(i);
  }
  return -log2_safe(std::max(cost, 1e-300));
}

}  // namespace

TEST_CASE("d_max basics") {
  Rng rng(31);
  DensityMatrix rho(random_density(3, rng));
  CHECK(d_max(rho, rho).value == Catch::Approx(0.0).margin(1e-9));

  DensityMatrix psi = PureState(random_pure_ket(4, rng)).density();
  CHECK(d_max(psi, DensityMatrix(maximally_mixed(4))).value ==
        Catch::Approx(2.0).margin(1e-9));

  DensityMatrix plus = plus_state();
  DensityMatrix dephased(maximally_mixed(2));
  CHECK(d_max(plus, dephased).value == Catch::Approx(1.0).margin(1e-9));

  // support violation
  DensityMatrix k0 = PureState(basis_ket(2, 0)).density();
  DensityMatrix k1 = PureState(basis_ket(2, 1)).density();
  CHECK(std::isinf(d_max(k0, k1).value));
}

TEST_CASE("d_min and relative entropy") {
  Rng rng(32);
  DensityMatrix rho(random_density(3, rng));
  CHECK(d_min(rho, rho).value == Catch::Approx(0.0).margin(1e-9));
  CHECK(d_min(plus_state(), DensityMatrix(maximally_mixed(2))).value ==
        Catch::Approx(1.0).margin(1e-12));

  DensityMatrix k0 = PureState(basis_ket(2, 0)).density();
  DensityMatrix k1 = PureState(basis_ket(2, 1)).density();
  CHECK_THROWS_AS(d_min(k0, k1), std::domain_error);

  // ordering on random full-rank pairs
  for (int i = 0; i < 50; ++i) {
    Eigen::Index d = 2 + (i % 5);
    DensityMatrix a(random_density(d, rng)), b(random_density(d, rng));
    double lo = d_min(a, b).value;
    double mid = rel_entropy(a, b);
    double hi = d_max(a, b).value;
    CHECK(lo <= mid + 1e-9);
    CHECK(mid <= hi + 1e-9);
  }
}

TEST_CASE("hypothesis testing relative entropy") {
  DensityMatrix plus = plus_state();
  DensityMatrix mixed(maximally_mixed(2));
  CHECK(d_hypothesis(plus, mixed, 0.0).value == Catch::Approx(1.0).margin(1e-9));
  CHECK(d_hypothesis(mixed, mixed, 0.5).value == Catch::Approx(1.0).margin(1e-6));
  Rng rng(33);
  DensityMatrix rho(random_density(3, rng));
  CHECK(d_hypothesis(rho, rho, 0.0).value == Catch::Approx(0.0).margin(1e-9));

  // D_H^0 equals D_min on random pairs.
  for (int i = 0; i < 25; ++i) {
    DensityMatrix a(random_density(3, rng)), b(random_density(3, rng));
    CHECK(d_hypothesis(a, b, 0.0).value ==
          Catch::Approx(d_min(a, b).value).margin(1e-6));
  }

  // Commuting case against the knapsack oracle.
  for (int i = 0; i < 10; ++i) {
    Eigen::Index d = 3 + (i % 2);
    RVector p(d), q(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      p(j) = rng.uniform() + 0.05;
      q(j) = rng.uniform() + 0.05;
    }
    p /= p.sum();
    q /= q.sum();
    CMatrix pm = CMatrix::Zero(d, d), qm = CMatrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      pm(j, j) = p(j);
      qm(j, j) = q(j);
    }
    double eps = 0.05 + 0.4 * rng.uniform();
    double got = d_hypothesis(DensityMatrix(pm), DensityMatrix(qm), eps).value;
    double want = diagonal_dh_oracle(p, q, eps);
    CHECK(got == Catch::Approx(want).margin(1e-6));
  }

  // Monotone nondecreasing in eps.
  DensityMatrix a(random_density(3, rng)), b(random_density(3, rng));
  double prev = -1.0;
  for (double eps : {0.0, 0.01, 0.05, 0.1}) {
    double v = d_hypothesis(a, b, eps).value;
    CHECK(v >= prev - 1e-7);
    prev = v;
  }
}

TEST_CASE("free fidelity") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  DensityMatrix incoherent(CMatrix((CMatrix(2, 2) << 0.7, 0, 0, 0.3).finished()));
  CHECK(free_fidelity(incoherent, coh.free_set).value ==
        Catch::Approx(1.0).margin(1e-7));
  CHECK(free_fidelity(plus_state(), coh.free_set).value ==
        Catch::Approx(0.5).margin(1e-9));

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix golden = PureState(magic_golden_ket()).density();
  CHECK(free_fidelity(golden, magic.free_set).value ==
        Catch::Approx((3.0 + std::sqrt(3.0)) / 6.0).margin(1e-9));

  // Mixed-state path cross-checked against the grid oracle.
  Rng rng(41);
  DensityMatrix mixed(random_density(2, rng));
  MeasureReport ff = free_fidelity(mixed, magic.free_set);
  auto obj = [&](const CMatrix& s) { return fidelity(mixed.matrix(), s); };
  GridOracleResult g = grid_oracle(obj, magic.free_set, 0.02);
  CHECK(ff.value >= g.best_value - 1e-7);
  CHECK(ff.value <= g.best_value + g.gap + 1e-7);
}

TEST_CASE("resource measures") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  DensityMatrix incoherent(CMatrix((CMatrix(2, 2) << 0.7, 0, 0, 0.3).finished()));
  for (ResourceKind k : {ResourceKind::dmax, ResourceKind::dmin}) {
    CHECK(resource_measure(incoherent, coh.free_set, k).value ==
          Catch::Approx(0.0).margin(1e-6));
  }
  CHECK(resource_measure(plus_state(), coh.free_set, ResourceKind::dmax).value ==
        Catch::Approx(1.0).margin(1e-6));

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix tstate = PureState(t_state_ket()).density();
  CHECK(resource_measure(tstate, magic.free_set, ResourceKind::dmax).value ==
        Catch::Approx(std::log2(4.0 - 2.0 * std::sqrt(2.0))).margin(1e-6));

  // LR_G equality: the generalized-robustness witness program agrees.
  Rng rng(43);
  for (int i = 0; i < 5; ++i) {
    DensityMatrix rho(random_density(2, rng));
    double lhs = resource_measure(rho, magic.free_set, ResourceKind::dmax).value;
    double rhs = *generalized_robustness(rho, magic.free_set).lr;
    CHECK(lhs == Catch::Approx(rhs).margin(1e-6));
  }

  // Entanglement: the Bell state carries one bit in both measures.
  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  DensityMatrix bell = PureState(maximally_entangled_ket(2)).density();
  CHECK(resource_measure(bell, ent.free_set, ResourceKind::dmin).value ==
        Catch::Approx(1.0).margin(1e-6));
  CHECK(resource_measure(bell, ent.free_set, ResourceKind::dmax).value ==
        Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("free robustness") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix tstate = PureState(t_state_ket()).density();
  MeasureReport r = free_robustness(tstate, magic.free_set);
  CHECK(r.value == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-6));
  CHECK(*r.lr == Catch::Approx(0.5).margin(1e-6));
  // decomposition check: (rho + s sigma)/(1+s) is free
  double s = r.value / 2.0;
  CMatrix tau = (tstate.matrix() + s * *r.robustness_mixing) / (1.0 + s);
  CHECK(membership(DensityMatrix(hermitize(tau)), magic.free_set, 1e-6).inside);

  BuiltinTheory coh = builtin_theory("coherence", {2});
  CHECK(std::isinf(free_robustness(plus_state(), coh.free_set).value));
  DensityMatrix incoherent(CMatrix((CMatrix(2, 2) << 0.7, 0, 0, 0.3).finished()));
  CHECK(free_robustness(incoherent, coh.free_set).value ==
        Catch::Approx(0.0).margin(1e-9));

  // free state in a polytope theory
  MeasureReport rf = free_robustness(DensityMatrix(maximally_mixed(2)),
                                     magic.free_set);
  CHECK(rf.value == Catch::Approx(0.0).margin(1e-6));

  // Entanglement robustness: decomposition verified PPT on both sides.
  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  DensityMatrix bell = PureState(maximally_entangled_ket(2)).density();
  MeasureReport rb = free_robustness(bell, ent.free_set);
  CHECK(std::isfinite(rb.value));
  CHECK(rb.value > 0.0);
  CMatrix mixed_in = (bell.matrix() + (rb.value / 2.0) * *rb.robustness_mixing) /
                     (1.0 + rb.value / 2.0);
  CHECK(min_eigenvalue(partial_transpose_second(hermitize(mixed_in), 2, 2)) >=
        -1e-7);
}

TEST_CASE("smoothed measures") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  DensityMatrix plus = plus_state();

  // eps = 0 reduces to the unsmoothed value.
  CHECK(smooth_measure(plus, coh.free_set, 0.0, SmoothKind::dmax).value ==
        Catch::Approx(1.0).margin(1e-6));

  // Monotone nonincreasing in eps; closed form for the qubit coherence case:
  // smoothed Dmax = log2(1 + max(0, 1-2eps)) by the Bloch-disk oracle.
  double prev = kInf;
  for (double eps : {0.0, 0.01, 0.05, 0.1, 0.5}) {
    double v = smooth_measure(plus, coh.free_set, eps, SmoothKind::dmax).value;
    CHECK(v <= prev + 1e-7);
    prev = v;
    double oracle = log2_safe(1.0 + std::max(0.0, 1.0 - 2.0 * eps));
    CHECK(v == Catch::Approx(oracle).margin(2e-5));
    CHECK(v >= -1e-9);
    CHECK(v <= log2_safe(2.0 * (1.0 - eps + std::sqrt(eps * (1.0 - eps)))) + 1e-6);
  }

  // Smoothed robustness in an FFR theory.
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix tstate = PureState(t_state_ket()).density();
  double r0 = free_robustness(tstate, magic.free_set).value;
  double r1 = smooth_measure(tstate, magic.free_set, 0.03, SmoothKind::lr).value;
  CHECK(r1 <= r0 + 1e-7);
  CHECK(r1 >= 0.0);

  // Heuristic state-smoothed dmin is labeled and never below the unsmoothed.
  MeasureReport h =
      smooth_measure(plus, coh.free_set, 0.02, SmoothKind::dmin_heuristic, 3);
  CHECK(h.estimated);
  CHECK(h.method == MeasureMethod::grid_heuristic);
  CHECK(h.value >=
        resource_measure(plus, coh.free_set, ResourceKind::dmin).value - 1e-9);
}

TEST_CASE("lambda measures") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  DensityMatrix plus = plus_state();
  CHECK(lambda_measure(plus, *coh.rd_map, LambdaKind::f_lambda).value ==
        Catch::Approx(0.5).margin(1e-9));

  // Collapse anchor: dmax_lambda equals dmax for golden states d=2..4.
  for (Eigen::Index d : {2, 3, 4}) {
    BuiltinTheory c = builtin_theory("coherence", {double(d)});
    DensityMatrix golden = PureState(uniform_superposition_ket(d)).density();
    double a = lambda_measure(golden, *c.rd_map, LambdaKind::dmax_lambda).value;
    double b = resource_measure(golden, c.free_set, ResourceKind::dmax).value;
    CHECK(a == Catch::Approx(b).margin(1e-6));
    CHECK(a == Catch::Approx(log2_safe(double(d))).margin(1e-9));
  }

  // Barred measure on a free state under the pseudo depolarizing map.
  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  RdMapSpec dep = RdMapSpec::depolarizing_pseudo_map(4, 0.8);
  DensityMatrix prod = PureState(kron_vec(basis_ket(2, 0), basis_ket(2, 1))).density();
  CHECK(lambda_measure(prod, dep, LambdaKind::dmax_lambda, 0.0, ent.free_set).value ==
        Catch::Approx(0.0).margin(1e-12));

  // Smoothed dmax_lambda: eps=0 matches the plain value, small eps decreases.
  double v0 = lambda_measure(plus, *coh.rd_map, LambdaKind::dmax_lambda, 0.0).value;
  double v1 = lambda_measure(plus, *coh.rd_map, LambdaKind::dmax_lambda, 0.05).value;
  CHECK(v1 <= v0 + 1e-6);
  // The lambda variant optimizes against Delta(rho') rather than the best
  // incoherent state, so it upper-bounds the plain smoothed measure.
  double direct = smooth_measure(plus, coh.free_set, 0.05, SmoothKind::dmax).value;
  CHECK(v1 >= direct - 1e-6);
}

TEST_CASE("modification coefficients") {
  for (Eigen::Index d : {2, 3, 4}) {
    BuiltinTheory coh = builtin_theory("coherence", {double(d)});
    DensityMatrix golden = PureState(uniform_superposition_ket(d)).density();
    ModCoefficient mf =
        modification_coefficient(golden, d, CoeffKind::f, coh.free_set);
    CHECK(mf.value == Catch::Approx(1.0).margin(1e-9));
  }

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix golden = PureState(magic_golden_ket()).density();
  ModCoefficient mm =
      modification_coefficient(golden, 2, CoeffKind::dmax, magic.free_set);
  CHECK(mm.value == Catch::Approx(std::log2(3.0 - std::sqrt(3.0))).margin(1e-6));

  DensityMatrix tstate = PureState(t_state_ket()).density();
  ModCoefficient mlr =
      modification_coefficient(tstate, 2, CoeffKind::lr, magic.free_set);
  CHECK(mlr.value == Catch::Approx(0.5).margin(1e-6));

  BuiltinTheory coh2 = builtin_theory("coherence", {2});
  ModCoefficient mfl = modification_coefficient(
      plus_state(), 2, CoeffKind::f_lambda, coh2.free_set, coh2.rd_map);
  CHECK(mfl.value == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("max-relative entropy can order pairs opposite to relative entropy") {
  RVector l1(3), l2(3);
  l1 << 0.5296, 0.0228, 0.4476;
  l2 << 0.0368, 0.1570, 0.8062;
  DensityMatrix sigma_hat = PureState(maximally_entangled_ket(3)).density();
  auto bar = [](const RVector& l) {
    CMatrix s = CMatrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) s(i, i) = l(i) / l.sum();
    return DensityMatrix(kron(maximally_mixed(3), s));
  };
  DensityMatrix s1 = bar(l1), s2 = bar(l2);
  double dmax1 = d_max(sigma_hat, s1).value;
  double dmax2 = d_max(sigma_hat, s2).value;
  double d1 = rel_entropy(sigma_hat, s1);
  double d2 = rel_entropy(sigma_hat, s2);
  CHECK(dmax1 > dmax2);
  CHECK(d1 < d2);
}

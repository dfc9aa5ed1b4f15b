#include <catch2/catch_amalgamated.hpp>

#include "qrt/golden.hpp"

using namespace qrt;

TEST_CASE("golden state of coherence theories") {
  for (Eigen::Index d : {2, 3}) {
    BuiltinTheory coh = builtin_theory("coherence", {double(d)});
    GoldenSearchOptions opt;
    opt.seed = 11;
    opt.starts = 32;
    GoldenReport g = find_golden_state(coh.free_set, opt, coh.rd_map);
    CHECK(g.g_d == Catch::Approx(1.0).margin(1e-6));
    CHECK(g.collapse_residual <= 1e-6);
    CHECK(g.coefficients.count("m_max_lambda") == 1);
    CHECK(g.coefficients["m_max_lambda"] == Catch::Approx(1.0).margin(1e-6));
    // found state is the uniform superposition up to phases
    for (Eigen::Index i = 0; i < d; ++i)
      CHECK(std::abs(g.ket(i)) == Catch::Approx(1.0 / std::sqrt(double(d))).margin(1e-5));
  }
}

TEST_CASE("golden state of the magic octahedron") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  GoldenSearchOptions opt;
  opt.seed = 7;
  GoldenReport g = find_golden_state(magic.free_set, opt);
  CHECK(g.g_d == Catch::Approx(std::log2(3.0 - std::sqrt(3.0))).margin(1e-8));
  CHECK(g.collapse_residual <= 1e-6);
  // canonical octant: Bloch (1,1,1)/sqrt(3)
  Eigen::Vector3d b = bloch_vector(PureState(g.ket).projector());
  CHECK(b(0) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-5));
  CHECK(b(1) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-5));
  CHECK(b(2) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-5));
  CHECK(g.orbit_size >= 1);
}

TEST_CASE("golden search is deterministic given the seed") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  std::vector<double> values;
  for (std::uint64_t seed : {3ull, 17ull, 23ull, 41ull, 99ull}) {
    GoldenSearchOptions opt;
    opt.seed = seed;
    opt.starts = 24;
    values.push_back(find_golden_state(magic.free_set, opt).g_d);
  }
  for (double v : values) CHECK(std::abs(v - values.front()) <= 1e-8);

  GoldenSearchOptions opt;
  opt.seed = 5;
  GoldenReport a = find_golden_state(magic.free_set, opt);
  GoldenReport b = find_golden_state(magic.free_set, opt);
  CHECK(max_abs(CMatrix(a.ket * a.ket.adjoint()) - CMatrix(b.ket * b.ket.adjoint())) ==
        0.0);
}

TEST_CASE("collapse fails for non-golden pure states in qutrit coherence") {
  BuiltinTheory coh = builtin_theory("coherence", {3});
  CVector skew(3);
  skew << std::sqrt(0.8), std::sqrt(0.1), std::sqrt(0.1);
  GoldenReport g = verify_collapse(PureState(skew), coh.free_set);
  CHECK(g.collapse_residual > 0.1);
  CHECK_FALSE(g.converged);
}

TEST_CASE("magic qubit: m_max below m_LR for the T state") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  GoldenReport g = verify_collapse(PureState(t_state_ket()), magic.free_set);
  CHECK(g.coefficients["m_max"] ==
        Catch::Approx(std::log2(4.0 - 2.0 * std::sqrt(2.0))).margin(1e-6));
  REQUIRE(g.m_lr.has_value());
  CHECK(*g.m_lr == Catch::Approx(0.5).margin(1e-6));
  CHECK(g.coefficients["m_max"] < *g.m_lr);
}

TEST_CASE("thermodynamic golden states") {
  GoldenReport g = golden_thermo((RVector(2) << 0.0, 1.0).finished(), 1.0);
  CHECK(g.g_d == Catch::Approx(std::log2(1.0 + std::exp(1.0))).margin(1e-10));
  CHECK(g.collapse_residual <= 1e-8);
  CHECK(std::abs(g.ket(1)) == Catch::Approx(1.0).margin(1e-12));

  // Near-infinite temperature reduces to the purity theory: g = 1.
  GoldenReport p = golden_thermo((RVector(2) << 0.0, 1.0).finished(), 1e6);
  CHECK(p.g_d == Catch::Approx(1.0).margin(1e-4));

  // Degenerate Hamiltonian: tie broken to the first index, g = 1 exactly.
  GoldenReport dgen = golden_thermo((RVector(2) << 0.0, 0.0).finished(), 2.0);
  CHECK(dgen.g_d == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(dgen.ket(0)) == Catch::Approx(1.0).margin(1e-12));

  // Formula check against independently recomputed partition functions.
  Rng rng(55);
  for (int i = 0; i < 10; ++i) {
    Eigen::Index d = 2 + (i % 3);
    RVector en(d);
    for (Eigen::Index j = 0; j < d; ++j) en(j) = rng.uniform(-1.0, 1.0);
    double t = 0.3 + rng.uniform();
    GoldenReport r = golden_thermo(en, t);
    double z = 0.0, emax = en.maxCoeff();
    for (Eigen::Index j = 0; j < d; ++j) z += std::exp(-en(j) / t);
    double gd = -log2_safe(std::exp(-emax / t) / z) / log2_safe(double(d));
    CHECK(r.g_d == Catch::Approx(gd).margin(1e-8));
  }
}

TEST_CASE("golden maximality over random pure states") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  GoldenSearchOptions opt;
  opt.seed = 13;
  GoldenReport g = find_golden_state(magic.free_set, opt);
  Rng rng(77);
  for (int i = 0; i < 25; ++i) {
    PureState psi(random_pure_ket(2, rng));
    GoldenReport other = verify_collapse(psi, magic.free_set);
    CHECK(other.coefficients["m_max"] <= g.coefficients["m_max"] + 1e-6);
    CHECK(other.coefficients["m_min"] <= g.coefficients["m_min"] + 1e-6);
  }
}

TEST_CASE("superposition golden state satisfies the slice geometry") {
  BuiltinTheory sup = builtin_theory("superposition", {1});
  GoldenSearchOptions opt;
  opt.seed = 3;
  GoldenReport g = find_golden_state(sup.free_set, opt);
  PureState analytic = reference_state(sup.family, 2);
  CHECK(max_abs(CMatrix(g.ket * g.ket.adjoint()) - analytic.projector()) < 1e-5);
  // equal overlap with both basis states
  const auto& verts = sup.free_set.vertex_list();
  double o1 = (g.ket.adjoint() * verts[0] * g.ket)(0, 0).real();
  double o2 = (g.ket.adjoint() * verts[1] * g.ket)(0, 0).real();
  CHECK(o1 == Catch::Approx(o2).margin(1e-7));
}

#include <catch2/catch_amalgamated.hpp>

#include "qrt/grid_oracle.hpp"
#include "qrt/theories.hpp"

using namespace qrt;

TEST_CASE("membership: coherence, magic, entanglement") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  MembershipReport m = membership(DensityMatrix(maximally_mixed(2)), coh.free_set);
  CHECK(m.inside);
  REQUIRE(m.weights.size() == 2);
  CHECK(m.weights(0) == Catch::Approx(0.5).margin(1e-9));

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  DensityMatrix tproj = PureState(t_state_ket()).density();
  MembershipReport mt = membership(tproj, magic.free_set);
  CHECK_FALSE(mt.inside);
  REQUIRE(mt.witness.size() > 0);
  double at_rho = (mt.witness * tproj.matrix()).trace().real();
  double max_free = -kInf;
  for (const auto& v : magic.free_set.vertex_list())
    max_free = std::max(max_free, (mt.witness * v).trace().real());
  CHECK(at_rho > 1.0);
  CHECK(max_free <= 1.0 + 1e-7);

  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  DensityMatrix bell = PureState(maximally_entangled_ket(2)).density();
  MembershipReport mb = membership(bell, ent.free_set);
  CHECK_FALSE(mb.inside);
  CHECK(mb.residual == Catch::Approx(0.5).margin(1e-9));

  CHECK_THROWS_AS(membership(DensityMatrix(maximally_mixed(3)), coh.free_set),
                  std::invalid_argument);
}

TEST_CASE("membership agrees with Bloch l1 condition for the octahedron") {
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  Rng rng(123);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    CMatrix rho = random_density(2, rng);
    Eigen::Vector3d b = bloch_vector(rho);
    double l1 = std::abs(b(0)) + std::abs(b(1)) + std::abs(b(2));
    if (std::abs(l1 - 1.0) < 1e-4) continue;  // skip knife-edge cases
    MembershipReport m = membership(DensityMatrix(rho), magic.free_set);
    CHECK(m.inside == (l1 <= 1.0));
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("builtin theories") {
  BuiltinTheory coh = builtin_theory("coherence", {3});
  CHECK(coh.free_set.kind() == FreeSetKind::diagonal_simplex);
  PureState phi3 = reference_state(coh.family, 3);
  CHECK(max_abs(phi3.projector() -
                PureState(uniform_superposition_ket(3)).projector()) < 1e-12);

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  const auto& verts = magic.free_set.vertex_list();
  REQUIRE(verts.size() == 6);
  bool found_plus_x = false;
  for (const auto& v : verts)
    if (max_abs(v - 0.5 * (identityC(2) + pauli_x())) < 1e-12) found_plus_x = true;
  CHECK(found_plus_x);

  BuiltinTheory thermo = builtin_theory("thermo", {0.0, 1.0, 1.0});
  CMatrix tau = thermo.free_set.gibbs_state();
  double z = 1.0 + std::exp(-1.0);
  CHECK(tau(0, 0).real() == Catch::Approx(1.0 / z).margin(1e-12));
  CHECK(tau(1, 1).real() == Catch::Approx(std::exp(-1.0) / z).margin(1e-12));

  BuiltinTheory magic2 = builtin_theory("magic_qubit", {2});
  CHECK(magic2.free_set.vertex_list().size() == 60);
  for (const auto& v : magic2.free_set.vertex_list())
    CHECK(std::abs((v * v).trace().real() - 1.0) < 1e-9);
}

TEST_CASE("rd maps") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  DensityMatrix plus = PureState(uniform_superposition_ket(2)).density();
  DensityMatrix dephased = apply_rd_map(*coh.rd_map, plus);
  CHECK(max_abs(dephased.matrix() - maximally_mixed(2)) < 1e-12);

  BuiltinTheory thermo = builtin_theory("thermo", {0.0, 1.0, 0.7});
  Rng rng(4);
  DensityMatrix anything(random_density(2, rng));
  CHECK(max_abs(apply_rd_map(*thermo.rd_map, anything).matrix() -
                thermo.free_set.gibbs_state()) < 1e-12);

  // Depolarizing the Bell state at p = 2/3 reaches the PPT boundary.
  RdMapSpec dep = RdMapSpec::depolarizing_pseudo_map(4, 2.0 / 3.0);
  DensityMatrix bell = PureState(maximally_entangled_ket(2)).density();
  DensityMatrix iso = apply_rd_map(dep, bell);
  double pt = min_eigenvalue(partial_transpose_second(iso.matrix(), 2, 2));
  CHECK(pt >= -1e-10);
  CHECK(pt <= 1e-10);

  // Validation: exact maps fix free states and are idempotent.
  RdMapValidation v = validate_rd_map(*coh.rd_map, coh.free_set);
  CHECK(v.ok);
  CHECK(v.idempotence_residual <= 1e-9);

  // Pseudo map only needs to land inside the free set.
  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  RdMapValidation vp = validate_rd_map(dep, ent.free_set);
  CHECK(vp.ok);

  // A claimed RD channel in an FFR theory is rejected.
  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  RdMapSpec bogus = RdMapSpec::linear_custom_map(
      2, superop_matrix(2, 2, [](const CMatrix& u) { return u; }), true, false,
      false);
  RdMapValidation vb = validate_rd_map(bogus, magic.free_set);
  CHECK_FALSE(vb.ok);
}

TEST_CASE("classification") {
  BuiltinTheory coh = builtin_theory("coherence", {3});
  TheoryClassification c = classify_theory(coh.free_set, coh.family, 4);
  CHECK(c.affine.value);
  CHECK_FALSE(c.ffr.value);
  CHECK(c.ct.value);
  CHECK(c.ch.value);

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  TheoryClassification cm = classify_theory(magic.free_set);
  CHECK_FALSE(cm.affine.value);
  CHECK(cm.affine.certified);
  CHECK(cm.ffr.value);

  BuiltinTheory sup = builtin_theory("superposition", {1});
  TheoryClassification cs = classify_theory(sup.free_set, sup.family, 2);
  CHECK(cs.ct.value);
  CHECK(cs.ct.residual <= 1e-10);
  CHECK(cs.affine.value);  // chord through two pure states

  BuiltinTheory thermo = builtin_theory("thermo", {0.0, 1.0, 1.0});
  TheoryClassification ct = classify_theory(thermo.free_set);
  CHECK(ct.affine.value);
  CHECK_FALSE(ct.ffr.value);

  BuiltinTheory ent = builtin_theory("entanglement_2x2");
  TheoryClassification ce = classify_theory(ent.free_set, ent.family, 4);
  CHECK(ce.ffr.value);
  CHECK_FALSE(ce.affine.value);
  CHECK_FALSE(ce.ct.value);  // overlap with Bell varies over product states
}

TEST_CASE("reference families and neighbors") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  PureState phi4 = reference_state(coh.family, 4);
  CHECK(max_abs(phi4.projector() -
                PureState(uniform_superposition_ket(4)).projector()) < 1e-12);

  ReferenceFamily tpow;
  tpow.ladder_kind = LadderKind::explicit_list;
  tpow.ladder = {2, 4};
  tpow.ctor = RefConstructor::tensor_power;
  tpow.seed_ket = t_state_ket();
  PureState tt = reference_state(tpow, 4);
  CHECK(max_abs(tt.projector() -
                PureState(tensor_power_ket(t_state_ket(), 2)).projector()) < 1e-12);

  ReferenceFamily pow2;
  pow2.ladder_kind = LadderKind::pow2;
  pow2.ctor = RefConstructor::golden;
  pow2.golden_tag = "coherence";
  Neighbors nb = neighbors(pow2, 4);
  REQUIRE(nb.down.has_value());
  REQUIRE(nb.up.has_value());
  CHECK(*nb.down == 2);
  CHECK(*nb.up == 8);

  CHECK_THROWS_AS(reference_state(pow2, 3), std::invalid_argument);
  Neighbors nb2 = neighbors(pow2, 2);
  CHECK_FALSE(nb2.down.has_value());
}

TEST_CASE("grid oracle") {
  BuiltinTheory coh = builtin_theory("coherence", {2});
  CMatrix plus = PureState(uniform_superposition_ket(2)).projector();
  auto overlap = [&](const CMatrix& s) { return (plus * s).trace().real(); };
  GridOracleResult g = grid_oracle(overlap, coh.free_set, 1e-3);
  CHECK(g.best_value == Catch::Approx(0.5).margin(1e-9));

  BuiltinTheory magic = builtin_theory("magic_qubit", {1});
  CMatrix golden = PureState(magic_golden_ket()).projector();
  auto overlap2 = [&](const CMatrix& s) { return (golden * s).trace().real(); };
  GridOracleResult g2 = grid_oracle(overlap2, magic.free_set, 0.05);
  CHECK(g2.best_value ==
        Catch::Approx((3.0 + std::sqrt(3.0)) / 6.0).margin(1e-9));

  BuiltinTheory thermo = builtin_theory("thermo", {0.0, 1.0, 1.0});
  Rng rng(8);
  CMatrix rho = random_density(2, rng);
  auto fid = [&](const CMatrix& s) { return fidelity(rho, s); };
  GridOracleResult g3 = grid_oracle(fid, thermo.free_set, 1e-3);
  CHECK(g3.best_value ==
        Catch::Approx(fidelity(rho, thermo.free_set.gibbs_state())).margin(1e-12));
  CHECK(g3.gap == 0.0);
}

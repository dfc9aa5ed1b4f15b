#include <catch2/catch_amalgamated.hpp>

#include "qrt/conic.hpp"
#include "qrt/states.hpp"

using namespace qrt;

namespace {

// Single-qubit stabilizer octahedron vertices.
std::vector<CMatrix> octahedron_vertices() {
  std::vector<CMatrix> v;
  for (const CMatrix& p : {pauli_x(), pauli_y(), pauli_z()}) {
    v.push_back(0.5 * (identityC(2) + p));
    v.push_back(0.5 * (identityC(2) - p));
  }
  return v;
}

CMatrix t_state() {
  CVector t(2);
  t << 1.0 / std::sqrt(2.0), std::exp(Complex(0, kPi / 4)) / std::sqrt(2.0);
  return t * t.adjoint();
}

// Independent oracle for the octahedron robustness problem: the minimal total
// weight of an affine stabilizer decomposition equals max(1, l1 norm of the
// Bloch vector), found by enumerating the dual cube directions (facets).
double octahedron_decomposition_weight(const CMatrix& rho) {
  Eigen::Vector3d b = bloch_vector(rho);
  double best = 1.0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        best = std::max(best, sx * b(0) + sy * b(1) + sz * b(2));
  return best;
}

}  // namespace

TEST_CASE("lp: min x subject to x >= 1") {
  ConicProgram p;
  VarRef x = p.add_scalar(1.0);
  VarRef s = p.add_scalar(0.0);
  p.row().s(x, 1.0).s(s, -1.0).eq(1.0);
  SolveReport r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == Catch::Approx(1.0).margin(1e-8));
  CHECK(r.scalars(0) == Catch::Approx(1.0).margin(1e-7));
  CHECK(r.max_eq_residual < 1e-8);
}

TEST_CASE("lp: octahedron robustness of |T><T| matches facet oracle") {
  auto verts = octahedron_vertices();
  CMatrix rho = t_state();

  ConicProgram p;
  std::vector<VarRef> a, b;
  for (int i = 0; i < 6; ++i) a.push_back(p.add_scalar(1.0));
  for (int i = 0; i < 6; ++i) b.push_back(p.add_scalar(0.0));
  auto basis = hermitian_basis(2);
  for (const CMatrix& e : basis) {
    auto row = p.row();
    for (int i = 0; i < 6; ++i) {
      double ci = (e * verts[i]).trace().real();
      row.s(b[i], ci).s(a[i], -ci);
    }
    row.eq((e * rho).trace().real());
  }
  SolveReport r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::optimal);

  double total_weight = octahedron_decomposition_weight(rho);  // = sqrt(2)
  CHECK(total_weight == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  // LP minimizes the negative mass s; total weight = 1 + 2s.
  CHECK(r.objective == Catch::Approx((total_weight - 1.0) / 2.0).margin(1e-7));
}

TEST_CASE("lp: infeasible equalities produce a certificate") {
  ConicProgram p;
  VarRef x1 = p.add_scalar(0.0);
  VarRef x2 = p.add_scalar(0.0);
  p.row().s(x1, 1.0).s(x2, 1.0).eq(1.0);
  p.row().s(x1, 1.0).s(x2, -1.0).eq(3.0);
  SolveReport r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::infeasible);
  CHECK(r.dual.size() == 2);
}

TEST_CASE("lp: unbounded below is detected") {
  ConicProgram p;
  VarRef x1 = p.add_scalar(-1.0);
  VarRef x2 = p.add_scalar(0.0);
  p.row().s(x2, 1.0).eq(1.0);
  SolveReport r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::unbounded);
}

TEST_CASE("sdp: max eigenvalue of diag(1,3)") {
  ConicProgram p;
  VarRef lam = p.add_scalar(1.0);
  BlockRef s = p.add_block(2);
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 3.0;
  // S = lam I - A
  auto basis = hermitian_basis(2);
  for (const CMatrix& e : basis) {
    p.row().m(s, e).s(lam, -(e.trace().real())).eq(-(e * a).trace().real());
  }
  SolveReport r = solve_sdp(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == Catch::Approx(3.0).margin(1e-7));
}

TEST_CASE("sdp: max eigenvalue of random Hermitian matches eigen oracle") {
  Rng rng(42);
  for (Eigen::Index d : {2, 3, 5}) {
    CMatrix a = random_hermitian(d, rng);
    ConicProgram p;
    VarRef lam = p.add_scalar(1.0);
    VarRef lam_neg = p.add_scalar(-1.0);  // allow negative optimum
    BlockRef s = p.add_block(d);
    for (const CMatrix& e : hermitian_basis(d)) {
      p.row()
          .m(s, e)
          .s(lam, -(e.trace().real()))
          .s(lam_neg, e.trace().real())
          .eq(-(e * a).trace().real());
    }
    SolveReport r = solve_sdp(p);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.objective == Catch::Approx(max_eigenvalue(a)).margin(1e-6));
  }
}

TEST_CASE("sdp: hypothesis test program at eps=0") {
  // min Tr(P sigma) s.t. 0 <= P <= I, Tr(P rho) >= 1, rho=|+><+|, sigma=I/2.
  CMatrix rho = PureState(uniform_superposition_ket(2)).projector();
  CMatrix sigma = maximally_mixed(2);

  ConicProgram p;
  BlockRef pb = p.add_block(2, sigma);
  BlockRef qb = p.add_block(2);
  VarRef slack = p.add_scalar(0.0);
  for (const CMatrix& e : hermitian_basis(2))
    p.row().m(pb, e).m(qb, e).eq(e.trace().real());
  p.row().m(pb, rho).s(slack, -1.0).eq(1.0);
  SolveReport r = solve_sdp(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("sdp: scalar feasibility boundary lambda=1") {
  // min lam s.t. lam*sigma - rho >= 0 with rho = sigma = I/2: optimum 1.
  ConicProgram p;
  VarRef lam = p.add_scalar(1.0);
  BlockRef s = p.add_block(2);
  CMatrix sigma = maximally_mixed(2), rho = maximally_mixed(2);
  for (const CMatrix& e : hermitian_basis(2))
    p.row().m(s, e).s(lam, -(e * sigma).trace().real()).eq(-(e * rho).trace().real());
  SolveReport r = solve_sdp(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("sdp: infeasible psd pinning") {
  ConicProgram p;
  BlockRef s = p.add_block(2);
  for (const CMatrix& e : hermitian_basis(2))
    p.row().m(s, e).eq(-(e.trace().real()));  // S = -I
  SolveReport r = solve(p);
  REQUIRE(r.status == SolveStatus::infeasible);
}

TEST_CASE("lp solved as degenerate sdp agrees") {
  // Octahedron robustness again, with 1x1 blocks instead of scalars.
  auto verts = octahedron_vertices();
  CMatrix rho = t_state();

  ConicProgram lp;
  std::vector<VarRef> a, b;
  for (int i = 0; i < 6; ++i) a.push_back(lp.add_scalar(1.0));
  for (int i = 0; i < 6; ++i) b.push_back(lp.add_scalar(0.0));
  ConicProgram sdp;
  std::vector<BlockRef> ab, bb;
  CMatrix one = CMatrix::Ones(1, 1);
  for (int i = 0; i < 6; ++i) ab.push_back(sdp.add_block(1, one));
  for (int i = 0; i < 6; ++i) bb.push_back(sdp.add_block(1));
  for (const CMatrix& e : hermitian_basis(2)) {
    auto row_lp = lp.row();
    auto row_sdp = sdp.row();
    for (int i = 0; i < 6; ++i) {
      double ci = (e * verts[i]).trace().real();
      row_lp.s(b[i], ci).s(a[i], -ci);
      row_sdp.m(bb[i], ci * one).m(ab[i], -ci * one);
    }
    row_lp.eq((e * rho).trace().real());
    row_sdp.eq((e * rho).trace().real());
  }
  SolveReport r1 = solve_lp(lp);
  SolveReport r2 = solve_sdp(sdp);
  REQUIRE(r1.status == SolveStatus::optimal);
  REQUIRE(r2.status == SolveStatus::optimal);
  CHECK(std::abs(r1.objective - r2.objective) < 1e-7);
}

TEST_CASE("duality gap small and reports deterministic") {
  ConicProgram p;
  VarRef lam = p.add_scalar(1.0);
  BlockRef s = p.add_block(3);
  Rng rng(3);
  CMatrix a = random_hermitian(3, rng);
  a += (std::abs(min_eigenvalue(a)) + 1.0) * identityC(3);
  for (const CMatrix& e : hermitian_basis(3))
    p.row().m(s, e).s(lam, -(e.trace().real())).eq(-(e * a).trace().real());

  SolveReport r1 = solve(p);
  SolveReport r2 = solve(p);
  REQUIRE(r1.status == SolveStatus::optimal);
  CHECK(r1.duality_gap <= 1e-6);
  CHECK(r1.objective == r2.objective);  // bit identical
  CHECK((r1.scalars - r2.scalars).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r1.iterations == r2.iterations);
}

#include <catch2/catch.hpp>

#include "polycert/sdp.hpp"
#include "test_helpers.hpp"

using namespace polycert;

namespace {

// p(x) = c0 + c1 x + c2 x^2 as a Gram problem over basis [1, x]:
//   Q00 = c0, 2 Q01 = c1, Q11 = c2
sdp::Problem gram_problem(double c0, double c1, double c2) {
  sdp::Problem p;
  int blk = p.add_block(2);
  int r0 = p.add_row(c0);
  p.add_block_var_coeff(r0, blk, 0, 0, 1.0);
  int r1 = p.add_row(c1);
  p.add_block_var_coeff(r1, blk, 0, 1, 2.0);
  int r2 = p.add_row(c2);
  p.add_block_var_coeff(r2, blk, 1, 1, 1.0);
  return p;
}

}  // namespace

TEST_CASE("1 + x^2 is PSD-representable", "[sdp]") {
  auto prob = gram_problem(1.0, 0.0, 1.0);
  auto sol = sdp::solve_feasibility(prob);
  REQUIRE(sol.status == sdp::Status::optimal);
  CHECK(sol.max_eq_residual <= 1e-8);
  CHECK(sol.min_eigenvalue >= -1e-9);
  // near diag(1,1): Q01 forced to 0, diagonal pinned by equalities
  CHECK(sol.blocks[0](0, 0) == Approx(1.0).margin(1e-6));
  CHECK(sol.blocks[0](1, 1) == Approx(1.0).margin(1e-6));
  CHECK(sol.blocks[0](0, 1) == Approx(0.0).margin(1e-6));
}

TEST_CASE("-x^2 - 1 is infeasible", "[sdp]") {
  auto prob = gram_problem(-1.0, 0.0, -1.0);
  auto sol = sdp::solve_feasibility(prob);
  CHECK(sol.status == sdp::Status::infeasible);
  CHECK(sol.decided);
}

TEST_CASE("(x-1)^2: marginal feasibility is accepted", "[sdp]") {
  auto prob = gram_problem(1.0, -2.0, 1.0);
  auto sol = sdp::solve_feasibility(prob);
  REQUIRE(sol.status == sdp::Status::optimal);
  CHECK(sol.max_eq_residual <= 1e-8);
  CHECK(sol.min_eigenvalue >= -1e-9);
}

TEST_CASE("x^2 + c with c free, minimize c", "[sdp]") {
  // rows: Q00 - c = 0 ; 2 Q01 = 0 ; Q11 = 1. minimize c => c -> 0.
  sdp::Problem p;
  p.num_free = 1;
  p.objective = {1.0};
  int blk = p.add_block(2);
  int r0 = p.add_row(0.0);
  p.add_block_var_coeff(r0, blk, 0, 0, 1.0);
  p.add_free_coeff(r0, 0, -1.0);
  int r1 = p.add_row(0.0);
  p.add_block_var_coeff(r1, blk, 0, 1, 2.0);
  int r2 = p.add_row(1.0);
  p.add_block_var_coeff(r2, blk, 1, 1, 1.0);

  auto sol = sdp::solve(p);
  REQUIRE(sol.status == sdp::Status::optimal);
  CHECK(sol.free_values[0] == Approx(0.0).margin(1e-6));
}

TEST_CASE("random sums of squares are recovered as feasible", "[sdp]") {
  TestRng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    // p = q1^2 + q2^2 with random quadratics over basis [1, x, x^2]
    double q1[3], q2[3];
    for (int i = 0; i < 3; ++i) {
      q1[i] = rng.uniform(-2, 2);
      q2[i] = rng.uniform(-2, 2);
    }
    // coefficients of p in x^0..x^4
    double c[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c[i + j] += q1[i] * q1[j] + q2[i] * q2[j];

    sdp::Problem p;
    int blk = p.add_block(3);
    // basis [1, x, x^2]; monomial x^d matched by pairs i+j=d
    for (int d = 0; d <= 4; ++d) {
      int r = p.add_row(c[d]);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
          if (i + j == d) p.add_block_var_coeff(r, blk, i, j, i == j ? 1.0 : 2.0);
    }
    auto sol = sdp::solve_feasibility(p);
    REQUIRE(sol.status == sdp::Status::optimal);
    CHECK(sol.max_eq_residual <= 1e-7);
    CHECK(sol.min_eigenvalue >= -1e-9);
  }
}

TEST_CASE("negativity witness: p negative at a point is not certified", "[sdp]") {
  // p = x^2 - 0.1 is negative at 0
  auto prob = gram_problem(-0.1, 0.0, 1.0);
  auto sol = sdp::solve_feasibility(prob);
  CHECK(sol.status != sdp::Status::optimal);
}

TEST_CASE("determinism across runs", "[sdp]") {
  auto prob = gram_problem(2.0, 1.0, 3.0);
  auto s1 = sdp::solve_feasibility(prob);
  auto s2 = sdp::solve_feasibility(prob);
  REQUIRE(s1.status == s2.status);
  REQUIRE(s1.blocks.size() == s2.blocks.size());
  CHECK((s1.blocks[0] - s2.blocks[0]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("free variable equality interaction", "[sdp]") {
  // X11 = 1, X00 = y, minimize y with X PSD and X01 = 0.7
  // => y* = 0.49 (rank-one boundary)
  sdp::Problem p;
  p.num_free = 1;
  p.objective = {1.0};
  int blk = p.add_block(2);
  int r0 = p.add_row(0.0);
  p.add_block_var_coeff(r0, blk, 0, 0, 1.0);
  p.add_free_coeff(r0, 0, -1.0);
  int r1 = p.add_row(1.0);
  p.add_block_var_coeff(r1, blk, 1, 1, 1.0);
  int r2 = p.add_row(0.7);
  p.add_block_var_coeff(r2, blk, 0, 1, 1.0);

  auto sol = sdp::solve(p);
  REQUIRE(sol.status == sdp::Status::optimal);
  CHECK(sol.free_values[0] == Approx(0.49).margin(1e-5));
}

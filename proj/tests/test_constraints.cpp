#include <catch2/catch.hpp>

#include <cmath>

#include "polycert/constraints.hpp"
#include "test_helpers.hpp"

using namespace polycert;

TEST_CASE("sector constraint forms", "[constraints]") {
  // [-0.5379, 0]: (0 v - w)(w + 0.5379 v) = -w^2 - 0.5379 v w
  auto c = sector_constraint(-0.5379, 0.0);
  CHECK(c.p.coeff({0, 2}) == Approx(-1.0));
  CHECK(c.p.coeff({1, 1}) == Approx(-0.5379));
  CHECK(c.p.degree() == 2);

  // [-0.368, 0.318]: (0.318 v - w)(w + 0.368 v)
  auto c2 = sector_constraint(-0.368, 0.318);
  auto direct = parse_polynomial("0.318*v - w", vw_vars()) *
                parse_polynomial("0.368*v + w", vw_vars());
  CHECK(approx_equal(c2.p, direct, 1e-15));

  CHECK_THROWS_AS(sector_constraint(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("sector vanishes on its boundary lines", "[constraints]") {
  double alpha = -0.4, beta = 0.7;
  auto c = sector_constraint(alpha, beta);
  for (double bound : {alpha, beta}) {
    Polynomial line(vw_vars());
    line.add_term({1, 0}, bound);  // w = bound * v
    auto restricted = substitute(c.p, {{"w", line}});
    CHECK(max_abs_coeff(restricted) <= 1e-15);
  }
}

TEST_CASE("sector [0,1] on tanh verifies globally", "[constraints]") {
  auto c = sector_constraint(0.0, 1.0);
  auto rep = verify_constraint(c, make_delta(DeltaOperator::Tag::tanh), {-5, 5});
  CHECK(rep.ok);

  auto tight = sector_constraint(0.9, 1.0);
  auto rep2 = verify_constraint(tight, make_delta(DeltaOperator::Tag::tanh), {-5, 5});
  CHECK_FALSE(rep2.ok);
  CHECK_FALSE(rep2.violations.empty());
}

TEST_CASE("taylor constraint instantiation", "[constraints]") {
  // T = v, k=3, eps=1: (v^3 - (w - v))(v^3 + (w - v))
  auto c = taylor_constraint({0.0, 1.0}, 1, 3, 1.0, 1.0);
  auto expect = parse_polynomial("v^3 - w + v", vw_vars()) *
                parse_polynomial("v^3 + w - v", vw_vars());
  CHECK(approx_equal(c.p, expect, 1e-15));

  // residual-zero case: substituting w = T gives eps1*eps2*v^(2k)
  Polynomial T(vw_vars());
  T.add_term({1, 0}, 1.0);
  auto onT = substitute(c.p, {{"w", T}});
  auto v6 = parse_polynomial("v^6", vw_vars());
  CHECK(approx_equal(onT, v6, 1e-15));
}

TEST_CASE("taylor constraint on arctanh verifies locally", "[constraints]") {
  // arctanh bracketed via its series, n=5, k=7. The residual is
  // x^7/7 + x^9/9 + ..., so eps below 1/7 can never hold; eps = 0.5 covers
  // the ratio up to |x| = 0.9 (~0.44 at the endpoint).
  DeltaOperator atanh_op;
  atanh_op.tag = DeltaOperator::Tag::custom;
  atanh_op.eval = [](double x) { return std::atanh(x); };
  atanh_op.lo = -0.9;
  atanh_op.hi = 0.9;
  atanh_op.name = "arctanh";

  auto c = taylor_constraint(arctanh_coefficients(5), 5, 7, 0.5, 0.5);
  auto rep = verify_constraint(c, atanh_op, {-0.9, 0.9});
  CHECK(rep.ok);

  auto too_tight = taylor_constraint(arctanh_coefficients(5), 5, 7, 0.05, 0.05);
  CHECK_FALSE(verify_constraint(too_tight, atanh_op, {-0.9, 0.9}).ok);
}

TEST_CASE("pade approximant basics", "[constraints]") {
  // exp [1/1]: N = 1 + x/2, D = 1 - x/2
  std::vector<double> expc{1.0, 1.0, 0.5};
  auto [N, D] = pade_approximant(expc, 1, 1);
  CHECK(N.coeff({0}) == Approx(1.0));
  CHECK(N.coeff({1}) == Approx(0.5));
  CHECK(D.coeff({0}) == Approx(1.0));
  CHECK(D.coeff({1}) == Approx(-0.5));

  // [m/0]: truncated Taylor
  auto [N2, D2] = pade_approximant(expc, 2, 0);
  CHECK(N2.coeff({2}) == Approx(0.5));
  CHECK(D2 == Polynomial::constant(1.0, {"v"}));
}

TEST_CASE("pade [3/2] of tanh approximates to 1e-3 on [-1,1]", "[constraints]") {
  auto [N, D] = pade_approximant(taylor_coefficients(DeltaOperator::Tag::tanh, 5), 3, 2);
  // x(x^2+15)/(6x^2+15) scaled to D(0)=1
  CHECK(N.coeff({1}) == Approx(1.0));
  CHECK(N.coeff({3}) == Approx(1.0 / 15.0));
  CHECK(D.coeff({2}) == Approx(0.4));
  for (double x = -1.0; x <= 1.0; x += 0.01) {
    double nd = evaluate(N, {x}) / evaluate(D, {x});
    CHECK(std::abs(std::tanh(x) - nd) <= 1e-3);
  }
}

TEST_CASE("pade constraint identity and validity", "[constraints]") {
  // triple-integrator recipe: [3/2] of tanh(v)-v, k=1, eps1=0.01, eps2=0.03
  auto [N, D] =
      pade_approximant(taylor_coefficients(DeltaOperator::Tag::tanh_minus_identity, 5), 3, 2);
  auto c = pade_constraint(N, D, 1, 0.01, 0.03, {-4, 4});

  // symbolic identity: p = e1*e2*v^2*D^2 + (e1-e2) v D u - u^2, u = wD - N
  auto v = Polynomial::variable("v", vw_vars());
  auto w = Polynomial::variable("w", vw_vars());
  auto Dl = D.with_vars(vw_vars());
  auto Nl = N.with_vars(vw_vars());
  auto u = w * Dl - Nl;
  auto q = (0.01 * 0.03) * v * v * Dl * Dl + (0.01 - 0.03) * v * Dl * u - u * u;
  CHECK(approx_equal(c.p, q, 1e-12));

  auto rep =
      verify_constraint(c, make_delta(DeltaOperator::Tag::tanh_minus_identity, -4, 4), {-4, 4});
  CHECK(rep.ok);

  // degenerate D on interval must be rejected: D = v (root at 0)
  auto Dbad = Polynomial::variable("v", {"v"});
  CHECK_THROWS_AS(pade_constraint(N, Dbad, 1, 0.1, 0.1, {-1, 1}), std::runtime_error);
}

TEST_CASE("figure-style pade constraint on tanh", "[constraints]") {
  auto [N, D] = pade_approximant(taylor_coefficients(DeltaOperator::Tag::tanh, 5), 3, 2);
  auto c = pade_constraint(N, D, 1, 0.1, 0.1, {-5, 5});
  auto rep = verify_constraint(c, make_delta(DeltaOperator::Tag::tanh), {-5, 5});
  CHECK(rep.ok);
}

TEST_CASE("box validity polynomials", "[constraints]") {
  auto q = box_validity(-3, 3);
  auto expect = parse_polynomial("9 - w^2", vw_vars());
  CHECK(approx_equal(q, expect, 1e-15));

  auto q2 = box_validity(0, 3.1);
  auto expect2 = parse_polynomial("3.1*w - w^2", vw_vars());
  CHECK(approx_equal(q2, expect2, 1e-15));

  double mid = evaluate(q2, {0.0, 1.55});
  CHECK(mid == Approx(1.55 * 1.55));
  CHECK_THROWS_AS(box_validity(2, 2), std::invalid_argument);
}

TEST_CASE("hand catalog constraints verify on recorded intervals", "[constraints]") {
  auto cat = hand_constraints();
  REQUIRE(cat.count("tanh_cubic") == 1);
  REQUIRE(cat.count("exp_quadratic") == 1);

  const auto& tc = cat["tanh_cubic"];
  REQUIRE(tc.interval.has_value());
  CHECK(evaluate(tc.p, {0.0, 0.0}) == 0.0);
  auto rep = verify_constraint(tc, make_delta(DeltaOperator::Tag::tanh), *tc.interval);
  CHECK(rep.ok);
  // the interval is a strict subset of the real line (cubic band is local)
  CHECK(tc.interval->second < 2.0);
  CHECK(tc.interval->second > 1.5);

  const auto& eq = cat["exp_quadratic"];
  REQUIRE(eq.interval.has_value());
  auto rep2 =
      verify_constraint(eq, make_delta(DeltaOperator::Tag::exp_minus_affine), *eq.interval);
  CHECK(rep2.ok);
  // x = 1 lies outside: (e-2-0.3)(0.7-(e-2)) < 0
  double y = std::exp(1.0) - 2.0;
  CHECK(evaluate(eq.p, {1.0, y}) < 0.0);
  CHECK(eq.interval->second < 1.0);

  // dense grid inside the interval
  auto delta = make_delta(DeltaOperator::Tag::tanh);
  for (int i = 0; i <= 10000; ++i) {
    double x = tc.interval->first +
               (tc.interval->second - tc.interval->first) * static_cast<double>(i) / 10000;
    CHECK(evaluate(tc.p, {x, delta.eval(x)}) >= -1e-9);
  }
}

TEST_CASE("verification is invariant under positive scaling", "[constraints]") {
  auto cat = hand_constraints();
  const auto& tc = cat["tanh_cubic"];
  auto delta = make_delta(DeltaOperator::Tag::tanh);
  for (double lambda : {1e-3, 1.0, 1e3}) {
    PolynomialConstraint scaled = tc;
    scaled.p = lambda * tc.p;
    auto rep = verify_constraint(scaled, delta, *tc.interval);
    CHECK(rep.ok);
  }
}

TEST_CASE("validity polynomials exempt graph points", "[constraints]") {
  // exp-system style box: once the graph leaves w in [0, 3.1] (near v = 1.77)
  // the points are exempt from the claim
  PolynomialConstraint c;
  c.p = parse_polynomial("3.1 - w", vw_vars());
  c.validity.push_back(box_validity(0.0, 3.1));
  auto delta = make_delta(DeltaOperator::Tag::exp_minus_affine, -4, 2);
  PolynomialConstraint bare = c;
  bare.validity.clear();
  CHECK_FALSE(verify_constraint(bare, delta, {-4, 2}).ok);
  CHECK(verify_constraint(c, delta, {-4, 2}).ok);
}

TEST_CASE("taylor coefficient tables", "[constraints]") {
  auto t = taylor_coefficients(DeltaOperator::Tag::tanh, 7);
  CHECK(t[1] == Approx(1.0));
  CHECK(t[3] == Approx(-1.0 / 3.0));
  CHECK(t[5] == Approx(2.0 / 15.0));
  CHECK(t[7] == Approx(-17.0 / 315.0));

  auto e = taylor_coefficients(DeltaOperator::Tag::exp_minus_affine, 4);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == Approx(0.5));
  CHECK(e[3] == Approx(1.0 / 6.0));
  CHECK(e[4] == Approx(1.0 / 24.0));

  // series actually approximates the function near 0
  auto tm = taylor_coefficients(DeltaOperator::Tag::tanh_minus_identity, 15);
  Polynomial T({"v"});
  for (size_t d = 0; d < tm.size(); ++d)
    if (tm[d] != 0.0) T.add_term({static_cast<int>(d)}, tm[d]);
  for (double x = -0.5; x <= 0.5; x += 0.05)
    CHECK(evaluate(T, {x}) == Approx(std::tanh(x) - x).margin(1e-10));
}

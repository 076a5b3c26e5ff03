#include <catch2/catch.hpp>

#include <cmath>

#include "polycert/parse.hpp"
#include "polycert/polynomial.hpp"
#include "test_helpers.hpp"

using namespace polycert;

namespace {

Polynomial P(const std::string& s, std::vector<std::string> vars) {
  return parse_polynomial(s, vars);
}

Polynomial random_poly(TestRng& rng, const std::vector<std::string>& vars, int deg,
                       bool integer_coeffs = false) {
  MonomialBasis b = monomial_basis(vars, deg);
  Polynomial p(vars);
  for (const auto& m : b.monomials) {
    if (rng.uniform() < 0.4) continue;
    double c = integer_coeffs ? static_cast<double>(rng.uniform_int(-5, 5))
                              : rng.uniform(-2.0, 2.0);
    p.add_term(m, c);
  }
  return p;
}

}  // namespace

TEST_CASE("difference of squares", "[poly]") {
  auto x = Polynomial::variable("x", {"x"});
  auto one = Polynomial::constant(1.0, {"x"});
  auto prod = (x + one) * (x - one);
  CHECK(prod == P("x^2 - 1", {"x"}));
}

TEST_CASE("additive identity", "[poly]") {
  TestRng rng(7);
  auto p = random_poly(rng, {"x", "y"}, 4);
  CHECK(p + Polynomial({"x", "y"}) == p);
}

TEST_CASE("factored vs expanded agree pointwise", "[poly]") {
  // (x - y^3 - y) * (y^3/6 + y - x): evaluate both forms at random points.
  std::vector<std::string> vars{"x", "y"};
  auto f1 = P("x - y^3 - y", vars);
  auto f2 = P("0.16666666666666666*y^3 + y - x", vars);
  auto expanded = f1 * f2;
  CHECK(expanded.degree() == 6);
  TestRng rng(11);
  for (int i = 0; i < 100; ++i) {
    double x = rng.uniform(-2.0, 2.0);
    double y = rng.uniform(-2.0, 2.0);
    double a = evaluate(f1, {x, y}) * evaluate(f2, {x, y});
    double b = evaluate(expanded, {x, y});
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("evaluate basics", "[poly]") {
  CHECK(evaluate(P("x^2 + y", {"x", "y"}), {2.0, 1.0}) == Approx(5.0));
  CHECK(evaluate(Polynomial({"x", "y"}), {3.0, 4.0}) == 0.0);
  double t = std::tanh(1.0);
  CHECK(evaluate(P("2*v*w - 2*w^2", {"v", "w"}), {1.0, t}) ==
        Approx(2.0 * t * (1.0 - t)).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate(P("x", {"x"}), {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("gradient basics", "[poly]") {
  auto g = gradient(P("x^2 + x*y", {"x", "y"}));
  REQUIRE(g.size() == 2);
  CHECK(g[0] == P("2*x + y", {"x", "y"}));
  CHECK(g[1] == P("x", {"x", "y"}));

  auto gc = gradient(P("3", {"x", "y"}));
  CHECK(gc[0].is_zero());
  CHECK(gc[1].is_zero());
}

TEST_CASE("gradient matches central differences", "[poly]") {
  std::vector<std::string> vars{"x", "y", "z"};
  TestRng rng(23);
  auto p = random_poly(rng, vars, 5);
  auto g = gradient(p);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pt{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (size_t i = 0; i < vars.size(); ++i) {
      auto hi = pt, lo = pt;
      hi[i] += h;
      lo[i] -= h;
      double fd = (evaluate(p, {hi.data(), 3}) - evaluate(p, {lo.data(), 3})) / (2 * h);
      CHECK(std::abs(fd - evaluate(g[i], {pt.data(), 3})) <= 1e-6);
    }
  }
}

TEST_CASE("substitute basics", "[poly]") {
  std::vector<std::string> vw{"v", "w"};
  auto p = P("v*w", vw);
  std::map<std::string, Polynomial> bind{{"v", P("x", {"x"})}, {"w", P("x^2", {"x"})}};
  CHECK(substitute(p, bind) == P("x^3", {"x"}));

  std::map<std::string, Polynomial> ident{{"v", P("v", vw)}, {"w", P("w", vw)}};
  auto q = P("2*v*w - 2*w^2 + v^2", vw);
  CHECK(substitute(q, ident) == q);
}

TEST_CASE("substitute then evaluate equals evaluate composed", "[poly]") {
  std::vector<std::string> vw{"v", "w"};
  std::vector<std::string> xy{"x", "y"};
  TestRng rng(31);
  auto outer = random_poly(rng, vw, 3);
  auto h1 = random_poly(rng, xy, 2);
  auto h2 = random_poly(rng, xy, 2);
  auto composed = substitute(outer, {{"v", h1}, {"w", h2}});
  for (int i = 0; i < 40; ++i) {
    double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    double inner1 = evaluate(h1, {x, y});
    double inner2 = evaluate(h2, {x, y});
    double direct = evaluate(outer, {inner1, inner2});
    double via = evaluate(composed, {x, y});
    CHECK(std::abs(direct - via) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("ring distributivity on integer coefficients", "[poly]") {
  TestRng rng(41);
  std::vector<std::string> vars{"x", "y"};
  for (int i = 0; i < 25; ++i) {
    auto a = random_poly(rng, vars, 3, true);
    auto b = random_poly(rng, vars, 3, true);
    auto c = random_poly(rng, vars, 3, true);
    CHECK(a * (b + c) == a * b + a * c);
  }
}

TEST_CASE("product evaluation homomorphism", "[poly]") {
  TestRng rng(43);
  std::vector<std::string> vars{"x", "y"};
  for (int i = 0; i < 25; ++i) {
    auto a = random_poly(rng, vars, 4);
    auto b = random_poly(rng, vars, 4);
    auto ab = a * b;
    double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    double lhs = evaluate(ab, {x, y});
    double rhs = evaluate(a, {x, y}) * evaluate(b, {x, y});
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("parse handles the documented grammar", "[poly]") {
  std::vector<std::string> vars{"x1", "x2"};
  auto p = parse_polynomial("x1^2*x2 - 0.5*x2", vars);
  CHECK(p.coeff({2, 1}) == 1.0);
  CHECK(p.coeff({0, 1}) == -0.5);
  CHECK(p.terms().size() == 2);

  CHECK_THROWS_AS(parse_polynomial("", vars), ParseError);
  CHECK_THROWS_AS(parse_polynomial("x1 + q", vars), ParseError);
  CHECK_THROWS_AS(parse_polynomial("2 x1", vars), ParseError);

  try {
    parse_polynomial("x1 + @", vars);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("render/parse round trip on generated corpus", "[poly]") {
  TestRng rng(57);
  std::vector<std::string> vars{"x", "y_2", "w"};
  for (int i = 0; i < 200; ++i) {
    auto p = random_poly(rng, vars, 4);
    auto q = parse_polynomial(render(p), vars);
    CHECK(q == p);
  }
  CHECK(render(Polynomial({"x"})) == "0");
}

TEST_CASE("monomial_basis counts and order", "[poly]") {
  auto b1 = monomial_basis({"x"}, 1);
  REQUIRE(b1.size() == 2);
  CHECK(b1.monomials[0] == Exponents{0});
  CHECK(b1.monomials[1] == Exponents{1});

  CHECK(monomial_basis({"x", "y"}, 2).size() == 6);
  CHECK(monomial_basis({"x", "w1", "w2"}, 3).size() == 20);

  // graded-lex: 1, x, y, x^2, xy, y^2
  auto b = monomial_basis({"x", "y"}, 2);
  CHECK(b.monomials[3] == Exponents{2, 0});
  CHECK(b.monomials[4] == Exponents{1, 1});
  CHECK(b.monomials[5] == Exponents{0, 2});
}

TEST_CASE("degree conventions", "[poly]") {
  CHECK(Polynomial({"x"}).degree() == 0);
  CHECK(Polynomial::constant(3.0, {"x"}).degree() == 0);
  CHECK(P("x^3*y + x", {"x", "y"}).degree() == 4);
}

TEST_CASE("variable alignment by name union", "[poly]") {
  auto a = P("x + 1", {"x"});
  auto b = P("y", {"y"});
  auto s = a + b;
  CHECK(s.vars() == std::vector<std::string>{"x", "y"});
  CHECK(evaluate(s, {2.0, 3.0}) == Approx(6.0));
}

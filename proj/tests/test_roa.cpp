#include <catch2/catch.hpp>

#include <cmath>

#include "polycert/roa.hpp"
#include "test_helpers.hpp"

using namespace polycert;

namespace {

// scalar xdot = a x (+ w), v = x
SystemModel scalar_model(double a, bool with_channel,
                         std::optional<DeltaOperator> delta = {}) {
  std::vector<std::string> sv{"x"};
  std::vector<std::string> xw{"x", "w"};
  Polynomial f(with_channel ? xw : sv);
  f.add_term(with_channel ? Exponents{1, 0} : Exponents{1}, a);
  if (with_channel) f.add_term({0, 1}, 1.0);
  Polynomial g = Polynomial::variable("x", sv);
  return make_system_model(sv, {f}, g, with_channel ? delta : std::nullopt);
}

DeltaOperator zero_delta() {
  DeltaOperator d;
  d.tag = DeltaOperator::Tag::custom;
  d.eval = [](double) { return 0.0; };
  d.deriv = [](double) { return 0.0; };
  d.lo = -10;
  d.hi = 10;
  d.name = "zero";
  return d;
}

}  // namespace

TEST_CASE("roa_condition on a stable scalar system", "[roa]") {
  // xdot = -x, V = x^2, c = 1, s_c = 0: condition is 2x^2 - eps(x^2) (no w)
  auto model = scalar_model(-1.0, false);
  auto V = parse_polynomial("x^2", {"x"});
  auto cond = roa_condition(V, 1.0, Polynomial({"x"}), {}, model, 1e-6);
  // -dV/dx * f = -2x * -x = 2x^2; minus eps x^2
  CHECK(cond.coeff({2}) == Approx(2.0 - 1e-6));
  CHECK(is_sos(cond).ok());
}

TEST_CASE("validity_conditions trivial region", "[roa]") {
  auto model = scalar_model(-1.0, false);
  auto V = parse_polynomial("x^2", {"x"});
  auto q = Polynomial::constant(1.0, {"x"});
  auto zero = Polynomial({"x"});
  auto conds = validity_conditions(V, 0.5, {q}, {zero}, {zero}, model);
  REQUIRE(conds.size() == 1);
  // (1 + 0)*1 - 0*(c - V) = 1
  CHECK(conds[0] == Polynomial::constant(1.0, {"x"}));
  CHECK(is_sos(conds[0]).ok());
}

TEST_CASE("initial_lyapunov scalar and matrix cases", "[roa]") {
  Eigen::MatrixXd A(1, 1), Q(1, 1);
  A << -1.0;
  Q << 1.0;
  auto V = initial_lyapunov(A, Q, {"x"});
  CHECK(V.coeff({2}) == Approx(0.5));

  // exponential-system linearization [[0,-1],[1,-1]]
  Eigen::MatrixXd A2(2, 2);
  A2 << 0, -1, 1, -1;
  Eigen::MatrixXd Q2 = Eigen::MatrixXd::Identity(2, 2);
  auto V2 = initial_lyapunov(A2, Q2, {"x1", "x2"});
  // Lyapunov residual check by reconstruction
  Eigen::MatrixXd P(2, 2);
  P << V2.coeff({2, 0}), V2.coeff({1, 1}) / 2, V2.coeff({1, 1}) / 2, V2.coeff({0, 2});
  CHECK((A2.transpose() * P + P * A2 + Q2).cwiseAbs().maxCoeff() <= 1e-10);

  // not Hurwitz
  Eigen::MatrixXd A3(1, 1);
  A3 << 0.5;
  CHECK_THROWS_AS(initial_lyapunov(A3, Q, {"x"}), std::runtime_error);
}

TEST_CASE("expansion on stable scalar with channel grows with validity", "[roa]") {
  // xdot = -x + w, w = 0; constraint p = -w^2 >= 0 on the graph
  auto model = scalar_model(-1.0, true, zero_delta());
  PolynomialConstraint c;
  c.p = parse_polynomial("-1*w^2", vw_vars());
  c.name = "zero_w";

  RoaConfig cfg;
  auto V = parse_polynomial("x^2", {"x"});

  PolynomialConstraint c1 = c;
  c1.interval = {{-1.0, 1.0}};
  auto prep1 = roa_detail::prepare(model, {c1}, 2, 4);
  auto e1 = expansion_step(model, prep1, V, 2, 4, cfg, 1.0);
  CHECK(e1.c_star > 0.0);

  PolynomialConstraint c2 = c;
  c2.interval = {{-2.0, 2.0}};
  auto prep2 = roa_detail::prepare(model, {c2}, 2, 4);
  auto e2 = expansion_step(model, prep2, V, 2, 4, cfg, 1.0);
  CHECK(e2.c_star > 1.5 * e1.c_star);

  // {x^2 <= c} inside |x| <= 1 forces c* near 1
  CHECK(e1.c_star == Approx(1.0).epsilon(0.05));
}

TEST_CASE("expansion rejects an unstable system", "[roa]") {
  auto model = scalar_model(+1.0, false);
  auto V = parse_polynomial("x^2", {"x"});
  RoaConfig cfg;
  auto prep = roa_detail::prepare(model, {}, 2, 4);
  CHECK_THROWS_WITH(expansion_step(model, prep, V, 2, 4, cfg, 1.0),
                    Catch::Contains("no certifiable sublevel set"));
}

TEST_CASE("monotone bisection property", "[roa]") {
  // feasibility at c implies feasibility at c/2 (spot check on 3 instances)
  auto model = scalar_model(-1.0, true, zero_delta());
  PolynomialConstraint c;
  c.p = parse_polynomial("-1*w^2", vw_vars());
  c.interval = {{-1.5, 1.5}};
  RoaConfig cfg;
  auto prep = roa_detail::prepare(model, {c}, 2, 4);
  auto V = parse_polynomial("x^2", {"x"});
  for (double level : {2.0, 1.0, 0.5}) {
    auto full = roa_detail::try_expansion(model, prep, V, level, 2, 4, cfg);
    auto half = roa_detail::try_expansion(model, prep, V, level / 2, 2, 4, cfg);
    if (full.ok()) CHECK(half.ok());
  }
}

TEST_CASE("reshape keeps containment", "[roa]") {
  // two-state linear stable system driven through a zero channel; the
  // constraint interval bounds the certifiable level so the alternation is
  // well posed
  std::vector<std::string> sv{"x1", "x2"};
  std::vector<std::string> xw{"x1", "x2", "w"};
  Polynomial f1(xw), f2(xw);
  f1.add_term({0, 1, 0}, 1.0);  // x1' = x2
  f2.add_term({1, 0, 0}, -1.0);
  f2.add_term({0, 1, 0}, -1.0);
  f2.add_term({0, 0, 1}, 1.0);  // x2' = -x1 - x2 + w
  DeltaOperator zd;
  zd.tag = DeltaOperator::Tag::custom;
  zd.eval = [](double) { return 0.0; };
  zd.deriv = [](double) { return 0.0; };
  zd.lo = -10;
  zd.hi = 10;
  zd.name = "zero";
  auto model = make_system_model(sv, {f1, f2}, Polynomial::variable("x1", sv), zd);

  PolynomialConstraint pc;
  pc.p = parse_polynomial("-1*w^2", vw_vars());
  pc.interval = {{-2.0, 2.0}};

  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -1, -1;
  auto V0 = initial_lyapunov(A, Eigen::MatrixXd::Identity(2, 2), sv);

  RoaConfig cfg;
  auto prep = roa_detail::prepare(model, {pc}, 2, 4);
  auto exp = expansion_step(model, prep, V0, 2, 4, cfg, 1.0);
  REQUIRE(exp.c_star > 0);
  auto resh = reshape_step(model, prep, V0, exp.c_star, exp.multipliers, 2, 4, cfg);
  REQUIRE(resh.accepted);

  // containment: sample the boundary {V0 = reshape_c}; V_new <= 1 + 1e-6
  TestRng rng(31337);
  int checked = 0;
  while (checked < 2000) {
    double x1 = rng.uniform(-3, 3), x2 = rng.uniform(-3, 3);
    double v0 = evaluate(V0, {x1, x2});
    if (v0 > 1e-9) {
      double scale = std::sqrt(resh.c_used / v0);
      double y1 = x1 * scale, y2 = x2 * scale;
      CHECK(evaluate(resh.V, {y1, y2}) <= 1.0 + 1e-6);
      ++checked;
    }
  }
}

TEST_CASE("volume of ellipsoids is exact", "[roa]") {
  auto V = parse_polynomial("x^2 + y^2", {"x", "y"});
  auto vol = estimate_volume(V, 1.0, {"x", "y"});
  CHECK(vol.method == "ellipsoid");
  CHECK(vol.value == Approx(M_PI));

  auto V2 = parse_polynomial("x^2 + 4*y^2", {"x", "y"});
  CHECK(estimate_volume(V2, 1.0, {"x", "y"}).value == Approx(M_PI / 2.0));

  // scaling: vol({V <= c}) = c^{n/2} vol({V <= 1})
  CHECK(estimate_volume(V, 4.0, {"x", "y"}).value == Approx(4.0 * M_PI));
}

TEST_CASE("monte carlo volume agrees with the exact ellipsoid", "[roa]") {
  auto V = parse_polynomial("x^2 + y^2", {"x", "y"});
  auto mc = estimate_volume(V, 1.0, {"x", "y"}, RoaConfig::VolumeMethod::monte_carlo,
                            200000, 99);
  CHECK(mc.method == "monte-carlo");
  CHECK(std::abs(mc.value - M_PI) <= 4.0 * mc.std_error + 1e-3);

  // a quartic sublevel set: sanity only (positive, finite)
  auto V4 = parse_polynomial("x^4 + y^4", {"x", "y"});
  auto mc4 = estimate_volume(V4, 1.0, {"x", "y"}, RoaConfig::VolumeMethod::monte_carlo,
                             200000, 99);
  // exact: (2 Gamma(5/4))^2... integral known ~ 3.7081
  CHECK(mc4.value == Approx(3.7081).margin(0.05));
}

TEST_CASE("simulate holds the origin and converges nearby", "[roa]") {
  auto model = scalar_model(-1.0, false);
  auto traj = simulate(model, {0.0}, 5.0, 0.01);
  for (const auto& p : traj) CHECK(p[0] == 0.0);

  auto traj2 = simulate(model, {1.0}, 10.0, 0.01);
  CHECK(std::abs(traj2.back()[0]) <= 1e-3);
  // against exact solution e^{-t}
  CHECK(traj2[100][0] == Approx(std::exp(-1.0)).margin(1e-6));
}

TEST_CASE("falsify a certified scalar set", "[roa]") {
  auto model = scalar_model(-1.0, false);
  auto V = parse_polynomial("x^2", {"x"});
  auto rep = falsify(model, V, 4.0, 50, 123);
  CHECK(rep.samples == 50);
  CHECK(rep.converged == 50);
  CHECK(rep.ok());
}

TEST_CASE("falsify flags divergent samples for an unsound claim", "[roa]") {
  // xdot = x(x-1)(x+1): origin attracts only (-1, 1); claiming x^2 <= 4 is
  // unsound and must produce failures
  std::vector<std::string> sv{"x"};
  Polynomial f(sv);
  f.add_term({3}, 1.0);
  f.add_term({1}, -1.0);  // x^3 - x
  auto model = make_system_model(sv, {f}, Polynomial::variable("x", sv), std::nullopt);
  auto V = parse_polynomial("x^2", {"x"});
  auto rep = falsify(model, V, 4.0, 40, 5);
  CHECK_FALSE(rep.ok());
  auto rep_ok = falsify(model, V, 0.81, 40, 5);
  CHECK(rep_ok.ok());
}

namespace {

// planar stable linear system driven through a zero channel with a bounded
// validity interval, so the certifiable level is finite
std::pair<SystemModel, Polynomial> bounded_planar() {
  std::vector<std::string> sv{"x1", "x2"};
  std::vector<std::string> xw{"x1", "x2", "w"};
  Polynomial f1(xw), f2(xw);
  f1.add_term({0, 1, 0}, 1.0);
  f2.add_term({1, 0, 0}, -1.0);
  f2.add_term({0, 1, 0}, -1.0);
  f2.add_term({0, 0, 1}, 1.0);
  DeltaOperator zd;
  zd.tag = DeltaOperator::Tag::custom;
  zd.eval = [](double) { return 0.0; };
  zd.deriv = [](double) { return 0.0; };
  zd.lo = -10;
  zd.hi = 10;
  zd.name = "zero";
  auto model = make_system_model(sv, {f1, f2}, Polynomial::variable("x1", sv), zd);
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -1, -1;
  auto V0 = initial_lyapunov(A, Eigen::MatrixXd::Identity(2, 2), sv);
  return {model, V0};
}

PolynomialConstraint zero_channel_constraint(double r) {
  PolynomialConstraint pc;
  pc.p = parse_polynomial("-1*w^2", vw_vars());
  pc.interval = {{-r, r}};
  return pc;
}

}  // namespace

TEST_CASE("run_roa end to end on a linear planar system", "[roa]") {
  auto [model, V0] = bounded_planar();
  RoaConfig cfg;
  cfg.constraints = {zero_channel_constraint(2.0)};
  cfg.schedule = {{2, 4, 3}};
  auto cert = run_roa(model, cfg, V0);
  CHECK(cert.sound);
  CHECK(cert.c_level >= 1.0 - 1e-6);
  CHECK(cert.volume.value > 0.0);
  CHECK(cert.max_residual <= 1e-6);
  REQUIRE(cert.trace.size() >= 1);
  // a linear system's certified level should keep expanding in principle,
  // but the toy run just needs a sound, monotone trace
  for (size_t i = 1; i < cert.trace.size(); ++i)
    CHECK(cert.trace[i].volume >= cert.trace[i - 1].volume * (1.0 - 1e-6));
  // falsification gate
  auto rep = falsify(model, cert.V, cert.c_level, 50, 77);
  CHECK(rep.ok());
}

TEST_CASE("degree growth across stages warm starts", "[roa]") {
  auto [model, V0] = bounded_planar();
  RoaConfig cfg;
  cfg.constraints = {zero_channel_constraint(1.5)};
  cfg.schedule = {{2, 4, 1}, {4, 6, 1}};
  auto cert = run_roa(model, cfg, V0);
  CHECK(cert.sound);
  CHECK(cert.V.degree() >= 2);
}

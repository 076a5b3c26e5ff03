#pragma once

// Pointwise polynomial constraints p(v,w) >= 0 on the graph w = Delta(v),
// with validity descriptors q_j(v,w) >= 0. Constructors: sector bounds,
// Taylor- and Pade-residual products, a small hand catalog, and interval
// boxes. Verification is a dense grid scan with sign-change bisection.

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polycert/delta.hpp"
#include "polycert/parse.hpp"
#include "polycert/polynomial.hpp"

namespace polycert {

inline const std::vector<std::string>& vw_vars() {
  static const std::vector<std::string> vars{"v", "w"};
  return vars;
}

struct PolynomialConstraint {
  Polynomial p;  // in (v, w), stored expanded
  std::vector<Polynomial> validity;  // q_j(v,w) >= 0 on the analyzed region
  enum class Provenance { hand, taylor, pade, sector, synthesized, transformed };
  Provenance provenance = Provenance::hand;
  std::optional<std::pair<double, double>> interval;  // v-interval the constraint targets
  std::string name;
  std::vector<Polynomial> factors;  // construction metadata, not used by the pipeline
};

inline const char* to_string(PolynomialConstraint::Provenance p) {
  using P = PolynomialConstraint::Provenance;
  switch (p) {
    case P::hand: return "hand";
    case P::taylor: return "taylor";
    case P::pade: return "pade";
    case P::sector: return "sector";
    case P::synthesized: return "synthesized";
    case P::transformed: return "transformed";
  }
  return "?";
}

// (beta v - w)(w - alpha v)
inline PolynomialConstraint sector_constraint(double alpha, double beta) {
  if (alpha > beta) throw std::invalid_argument("sector_constraint: alpha > beta");
  auto v = Polynomial::variable("v", vw_vars());
  auto w = Polynomial::variable("w", vw_vars());
  PolynomialConstraint c;
  c.factors = {beta * v - w, w - alpha * v};
  c.p = c.factors[0] * c.factors[1];
  c.provenance = PolynomialConstraint::Provenance::sector;
  c.name = "sector";
  return c;
}

// (eps1 v^k - (w - T_n(v))) (eps2 v^k + (w - T_n(v)))
inline PolynomialConstraint taylor_constraint(const std::vector<double>& taylor_coeffs,
                                              int n, int k, double eps1, double eps2) {
  if (eps1 <= 0 || eps2 <= 0) throw std::invalid_argument("taylor_constraint: eps <= 0");
  if (k < 1) throw std::invalid_argument("taylor_constraint: k < 1");
  if (static_cast<size_t>(n) + 1 > taylor_coeffs.size())
    throw std::invalid_argument("taylor_constraint: not enough coefficients");
  auto v = Polynomial::variable("v", vw_vars());
  auto w = Polynomial::variable("w", vw_vars());
  Polynomial T(vw_vars());
  for (int d = 0; d <= n; ++d) T.add_term({d, 0}, taylor_coeffs[static_cast<size_t>(d)]);
  Polynomial resid = w - T;
  Polynomial vk = v.pow(k);
  PolynomialConstraint c;
  c.factors = {eps1 * vk - resid, eps2 * vk + resid};
  c.p = c.factors[0] * c.factors[1];
  c.provenance = PolynomialConstraint::Provenance::taylor;
  c.name = "taylor";
  return c;
}

// [m/n] Pade approximant from Maclaurin coefficients; D(0) = 1.
inline std::pair<Polynomial, Polynomial> pade_approximant(
    const std::vector<double>& taylor_coeffs, int m, int n,
    const std::string& var = "v") {
  if (taylor_coeffs.size() < static_cast<size_t>(m + n + 1))
    throw std::invalid_argument("pade_approximant: need m+n+1 coefficients");
  auto f = [&](int i) { return i >= 0 ? taylor_coeffs[static_cast<size_t>(i)] : 0.0; };
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::MatrixXd T(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) T(i - 1, j - 1) = f(m + i - j);
      rhs(i - 1) = -f(m + i);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
    if (!lu.isInvertible())
      throw std::runtime_error("pade_approximant: singular system (degenerate table entry)");
    d = lu.solve(rhs);
  }
  std::vector<std::string> vars{var};
  Polynomial D(vars);
  D.add_term({0}, 1.0);
  for (int j = 1; j <= n; ++j) D.add_term({j}, d(j - 1));
  Polynomial N(vars);
  for (int i = 0; i <= m; ++i) {
    double c = f(i);
    for (int j = 1; j <= std::min(i, n); ++j) c += d(j - 1) * f(i - j);
    if (c != 0.0) N.add_term({i}, c);
  }
  return {N, D};
}

// (eps1 v^k D - (w D - N)) (eps2 v^k D + (w D - N)); D must be nonvanishing
// on the target interval (checked by a root scan).
inline PolynomialConstraint pade_constraint(const Polynomial& N1, const Polynomial& D1,
                                            int k, double eps1, double eps2,
                                            std::pair<double, double> interval) {
  if (eps1 <= 0 || eps2 <= 0) throw std::invalid_argument("pade_constraint: eps <= 0");
  Polynomial N = N1.with_vars(vw_vars());
  Polynomial D = D1.with_vars(vw_vars());
  const int scan = 4096;
  for (int i = 0; i <= scan; ++i) {
    double x = interval.first + (interval.second - interval.first) * i / scan;
    if (evaluate(D, {x, 0.0}) <= 0.0)
      throw std::runtime_error("pade_constraint: D vanishes on the target interval");
  }
  auto v = Polynomial::variable("v", vw_vars());
  auto w = Polynomial::variable("w", vw_vars());
  Polynomial resid = w * D - N;
  Polynomial vkD = v.pow(k) * D;
  PolynomialConstraint c;
  c.factors = {eps1 * vkD - resid, eps2 * vkD + resid};
  c.p = c.factors[0] * c.factors[1];
  c.provenance = PolynomialConstraint::Provenance::pade;
  c.interval = interval;
  c.name = "pade";
  return c;
}

// q(w) = (w - w_lo)(w_hi - w), nonnegative exactly on the box.
inline Polynomial box_validity(double w_lo, double w_hi) {
  if (w_lo >= w_hi) throw std::invalid_argument("box_validity: empty box");
  auto w = Polynomial::variable("w", vw_vars());
  return (w - Polynomial::constant(w_lo, vw_vars())) *
         (Polynomial::constant(w_hi, vw_vars()) - w);
}

struct VerifyReport {
  bool ok = false;
  struct Violation {
    double x;
    double value;
  };
  std::vector<Violation> violations;
  double min_value = std::numeric_limits<double>::infinity();  // over checked points
  double min_location = 0.0;
  int checked_points = 0;
};

// Scan r(x) = p(x, Delta(x)) over a uniform grid on [a,b]; points where a
// validity polynomial is violated on the graph are exempt. Sign changes are
// refined by bisection to width 1e-12; ok iff no refined value < -1e-9.
inline VerifyReport verify_constraint(const PolynomialConstraint& c,
                                      const DeltaOperator& delta,
                                      std::pair<double, double> interval, int grid_n = 10000) {
  if (grid_n < 1000) throw std::invalid_argument("verify_constraint: grid_n < 1000");
  VerifyReport rep;
  const double a = interval.first, b = interval.second;
  if (a > b) throw std::invalid_argument("verify_constraint: empty interval");
  const double tol = 1e-9;

  auto graph_ok = [&](double x) {
    double y = delta.eval(x);
    for (const auto& q : c.validity)
      if (evaluate(q, {x, y}) < 0.0) return false;
    return true;
  };
  auto r = [&](double x) { return evaluate(c.p, {x, delta.eval(x)}); };

  std::vector<double> xs(static_cast<size_t>(grid_n) + 1);
  std::vector<double> rv(xs.size());
  std::vector<bool> ok_pt(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    xs[i] = a + (b - a) * static_cast<double>(i) / grid_n;
    rv[i] = r(xs[i]);
    ok_pt[i] = graph_ok(xs[i]);
  }

  auto note = [&](double x, double val) {
    if (val < rep.min_value) {
      rep.min_value = val;
      rep.min_location = x;
    }
    if (val < -tol) rep.violations.push_back({x, val});
  };

  for (size_t i = 0; i < xs.size(); ++i) {
    if (!ok_pt[i]) continue;
    ++rep.checked_points;
    note(xs[i], rv[i]);
  }
  // refine sign changes between consecutive checked points
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    if (!ok_pt[i] || !ok_pt[i + 1]) continue;
    if ((rv[i] < 0) == (rv[i + 1] < 0)) continue;
    double lo = xs[i], hi = xs[i + 1];
    double flo = rv[i];
    while (hi - lo > 1e-12) {
      double mid = 0.5 * (lo + hi);
      double fm = r(mid);
      if ((fm < 0) == (flo < 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    // sample the negative lobe near the refined root
    double neg_end = flo < 0 ? xs[i] : xs[i + 1];
    double root = 0.5 * (lo + hi);
    for (int s = 1; s <= 64; ++s) {
      double x = root + (neg_end - root) * s / 64.0;
      if (graph_ok(x)) note(x, r(x));
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

// Largest interval [a,b] containing 0 on which p(x, Delta(x)) >= -1e-9,
// determined by outward grid scan and boundary bisection, then pulled
// inward by a relative margin so verify_constraint passes on it.
inline std::pair<double, double> find_validity_interval(const PolynomialConstraint& c,
                                                        const DeltaOperator& delta,
                                                        double search_lo, double search_hi,
                                                        int grid_n = 20000) {
  auto r = [&](double x) { return evaluate(c.p, {x, delta.eval(x)}); };
  const double tol = 1e-9;
  auto bisect_boundary = [&](double good, double bad) {
    for (int it = 0; it < 200 && std::abs(bad - good) > 1e-13; ++it) {
      double mid = 0.5 * (good + bad);
      if (r(mid) >= -tol)
        good = mid;
      else
        bad = mid;
    }
    return good;
  };
  double hi = search_hi;
  {
    double step = (search_hi - 0.0) / grid_n;
    double x = 0.0;
    while (x + step <= search_hi && r(x + step) >= -tol) x += step;
    hi = (x + step > search_hi) ? search_hi : bisect_boundary(x, x + step);
  }
  double lo = search_lo;
  {
    double step = (0.0 - search_lo) / grid_n;
    double x = 0.0;
    while (x - step >= search_lo && r(x - step) >= -tol) x -= step;
    lo = (x - step < search_lo) ? search_lo : bisect_boundary(x, x - step);
  }
  // pull inward so grid re-verification is clean
  double width = hi - lo;
  return {lo + 1e-6 * width, hi - 1e-6 * width};
}

// Hand-built catalog. Validity intervals are determined empirically at
// construction (largest interval around 0 passing the graph scan).
inline std::map<std::string, PolynomialConstraint> hand_constraints() {
  std::map<std::string, PolynomialConstraint> out;
  auto v = Polynomial::variable("v", vw_vars());
  auto w = Polynomial::variable("w", vw_vars());

  {
    // cubic-in-w band around tanh: (v - w^3 - w)(w^3/6 + w - v)
    PolynomialConstraint c;
    c.factors = {v - w.pow(3) - w, (1.0 / 6.0) * w.pow(3) + w - v};
    c.p = c.factors[0] * c.factors[1];
    c.provenance = PolynomialConstraint::Provenance::hand;
    c.name = "tanh_cubic";
    c.interval = find_validity_interval(c, make_delta(DeltaOperator::Tag::tanh), -6, 6);
    out["tanh_cubic"] = std::move(c);
  }
  {
    // quadratic-in-v band around e^v - v - 1: (w - 0.3 v^2)(0.7 v^2 - w)
    PolynomialConstraint c;
    c.factors = {w - 0.3 * v * v, 0.7 * v * v - w};
    c.p = c.factors[0] * c.factors[1];
    c.provenance = PolynomialConstraint::Provenance::hand;
    c.name = "exp_quadratic";
    c.interval =
        find_validity_interval(c, make_delta(DeltaOperator::Tag::exp_minus_affine), -6, 6);
    out["exp_quadratic"] = std::move(c);
  }
  return out;
}

}  // namespace polycert

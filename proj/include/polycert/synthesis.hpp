#pragma once

// Numerical synthesis of polynomial constraints for a scalar nonlinearity:
// minimize a tanh-squashed score over near-graph test points, subject to
// nonnegativity on graph samples and a unit coefficient norm. Solved by the
// augmented-Lagrangian driver in nlp.hpp with analytic gradients. The
// transformed variant searches over a graph map (h1, h2) with
// p = h2 (h1 - h2) built by construction and a strict-monotonicity surrogate
// on h1 along the graph.

#include <cmath>
#include <string>
#include <vector>

#include "polycert/constraints.hpp"
#include "polycert/delta.hpp"
#include "polycert/nlp.hpp"
#include "polycert/rng.hpp"

namespace polycert {

struct WeightedPoint {
  double x, y, weight;
};

struct TestPointConfig {
  int n_tx = 60;
  std::pair<double, double> x_interval{0, 0};  // {0,0}: use the delta domain
  int n_ty = 9;
  double below = 0.5, above = 0.5;  // neighborhood half-widths around Delta(x)
  enum class Weight { uniform, origin_peaked_v, origin_peaked_w, sign_weighted };
  Weight weight = Weight::uniform;
  double sign_a = 1.0, sign_b = 0.5;  // sign_weighted: a if v >= 0 else b
  double s = 0.0;                     // objective scale; 0 = auto from init
};

inline double point_weight(const TestPointConfig& cfg, double x, double y) {
  switch (cfg.weight) {
    case TestPointConfig::Weight::uniform: return 1.0;
    case TestPointConfig::Weight::origin_peaked_v: return 1.0 + std::exp(-x * x);
    case TestPointConfig::Weight::origin_peaked_w: return 1.0 + std::exp(-y * y);
    case TestPointConfig::Weight::sign_weighted: return x >= 0.0 ? cfg.sign_a : cfg.sign_b;
  }
  return 1.0;
}

inline std::vector<WeightedPoint> generate_test_points(const TestPointConfig& cfg,
                                                       const DeltaOperator& delta, Rng& rng) {
  if (cfg.n_tx < 1 || cfg.n_ty < 1)
    throw std::invalid_argument("generate_test_points: counts must be >= 1");
  if (cfg.below < 0 || cfg.above < 0)
    throw std::invalid_argument("generate_test_points: negative half-width");
  double lo = cfg.x_interval.first, hi = cfg.x_interval.second;
  if (lo == 0.0 && hi == 0.0) {
    lo = delta.lo;
    hi = delta.hi;
  }
  std::vector<WeightedPoint> pts;
  pts.reserve(static_cast<size_t>(cfg.n_tx) * cfg.n_ty);
  for (int i = 0; i < cfg.n_tx; ++i) {
    double x = rng.uniform(lo, hi);
    double dy = delta.eval(x);
    for (int j = 0; j < cfg.n_ty; ++j) {
      double y = rng.uniform(dy - cfg.below, dy + cfg.above);
      pts.push_back({x, y, point_weight(cfg, x, y)});
    }
  }
  return pts;
}

// sum_i w_i tanh(s p(x_i, y_i))
inline double synthesis_objective(const Polynomial& p, const std::vector<WeightedPoint>& pts,
                                  double s) {
  if (s <= 0) throw std::invalid_argument("synthesis_objective: s must be positive");
  double sum = 0.0;
  for (const auto& pt : pts) sum += pt.weight * std::tanh(s * evaluate(p, {pt.x, pt.y}));
  return sum;
}

// Value and analytic gradient of the objective in coefficient space:
// d/d theta_j = sum_i w_i s sech^2(s p_i) m_j(x_i, y_i).
inline std::pair<double, std::vector<double>> synthesis_objective_gradient(
    const std::vector<Exponents>& monomials, const std::vector<double>& theta,
    const std::vector<WeightedPoint>& pts, double s) {
  double f = 0.0;
  std::vector<double> grad(theta.size(), 0.0);
  for (const auto& pt : pts) {
    std::vector<double> mv(monomials.size());
    double pval = 0.0;
    for (size_t j = 0; j < monomials.size(); ++j) {
      double m = 1.0;
      for (int k = 0; k < monomials[j][0]; ++k) m *= pt.x;
      for (int k = 0; k < monomials[j][1]; ++k) m *= pt.y;
      mv[j] = m;
      pval += theta[j] * m;
    }
    double t = std::tanh(s * pval);
    f += pt.weight * t;
    double df = pt.weight * s * (1.0 - t * t);
    for (size_t j = 0; j < monomials.size(); ++j) grad[j] += df * mv[j];
  }
  return {f, grad};
}

struct SynthesisProblem {
  DeltaOperator delta;
  int degree = 6;
  std::pair<double, double> constraint_interval{0, 0};  // {0,0}: delta domain
  int n_constraint_points = 401;
  TestPointConfig test_cfg;
  std::vector<Exponents> template_monomials;  // empty: graded basis, degrees
                                              // [min_template_degree, degree]
  int min_template_degree = 2;  // keeps p(0,0) = 0 and grad p(0,0) = 0, which the
                                // certification multipliers need at the equilibrium
  std::vector<Polynomial> validity;           // attached to the result
  uint64_t seed = 1;
  nlp::AlOptions nlp;
  // graph samples are held above graph_margin * min(x^2, 1) so the dense
  // post-verification does not find dips between samples; violations found
  // by verification are appended as new samples for up to refine_rounds
  double graph_margin = 1e-6;
  int refine_rounds = 3;
};

struct SynthesisResult {
  PolynomialConstraint constraint;
  bool converged = false;
  bool feasible = false;  // graph samples >= -1e-8 and unit coefficient norm
  bool verified = false;  // verify_constraint on the constraint interval
  VerifyReport report;
  double objective = 0.0, objective_init = 0.0;
  double min_constraint_value = 0.0;
  double scale_s = 0.0;
  uint64_t seed = 0;
  std::string warning;
};

namespace detail {

inline std::vector<double> default_constraint_points(std::pair<double, double> iv, int n) {
  std::vector<double> xs;
  xs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    xs.push_back(iv.first + (iv.second - iv.first) * i / std::max(1, n - 1));
  return xs;
}

inline nlp::Mat monomial_matrix(const std::vector<Exponents>& monos,
                                const std::vector<std::pair<double, double>>& pts) {
  nlp::Mat M(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(monos.size()));
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < monos.size(); ++j) {
      double m = 1.0;
      for (int k = 0; k < monos[j][0]; ++k) m *= pts[i].first;
      for (int k = 0; k < monos[j][1]; ++k) m *= pts[i].second;
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m;
    }
  return M;
}

inline Polynomial poly_from_coeffs(const std::vector<Exponents>& monos, const nlp::Vec& theta) {
  Polynomial p(vw_vars());
  for (size_t j = 0; j < monos.size(); ++j)
    if (theta(static_cast<Eigen::Index>(j)) != 0.0)
      p.add_term(monos[j], theta(static_cast<Eigen::Index>(j)));
  return p;
}

}  // namespace detail

inline SynthesisResult synthesize(const SynthesisProblem& problem, const Polynomial& init) {
  SynthesisResult res;
  res.seed = problem.seed;

  std::pair<double, double> iv = problem.constraint_interval;
  if (iv.first == 0.0 && iv.second == 0.0) iv = {problem.delta.lo, problem.delta.hi};

  std::vector<Exponents> monos = problem.template_monomials;
  if (monos.empty()) {
    for (const auto& m : monomial_basis(vw_vars(), problem.degree).monomials)
      if (total_degree(m) >= problem.min_template_degree) monos.push_back(m);
  }
  const int J = static_cast<int>(monos.size());

  // init coefficients over the template
  nlp::Vec theta0 = nlp::Vec::Zero(J);
  {
    Polynomial ini = init.with_vars(vw_vars());
    for (const auto& [e, c] : ini.terms()) {
      auto it = std::find(monos.begin(), monos.end(), e);
      if (it == monos.end())
        throw std::invalid_argument("synthesize: init has support outside the template");
      theta0(static_cast<Eigen::Index>(it - monos.begin())) = c;
    }
    double n0 = theta0.norm();
    if (n0 == 0.0) throw std::invalid_argument("synthesize: zero init");
    theta0 /= n0;
  }

  // test points (fixed across refinement rounds)
  Rng rng(problem.seed);
  auto tps = generate_test_points(problem.test_cfg, problem.delta, rng);
  std::vector<std::pair<double, double>> test_xy;
  std::vector<double> weights;
  for (const auto& tp : tps) {
    test_xy.push_back({tp.x, tp.y});
    weights.push_back(tp.weight);
  }
  nlp::Mat T = detail::monomial_matrix(monos, test_xy);
  nlp::Vec w = Eigen::Map<nlp::Vec>(weights.data(), static_cast<Eigen::Index>(weights.size()));

  // objective scale
  double s = problem.test_cfg.s;
  if (s <= 0.0) {
    nlp::Vec pv = (T * theta0).cwiseAbs();
    std::vector<double> v(pv.data(), pv.data() + pv.size());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    double med = v[v.size() / 2];
    s = 1.0 / std::max(3.0 * med, 1e-12);
  }
  res.scale_s = s;

  auto objective = [&](const nlp::Vec& th, nlp::Vec& grad) -> double {
    nlp::Vec u = T * th;
    double f = 0.0;
    nlp::Vec du(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      double t = std::tanh(s * u(i));
      f += w(i) * t;
      du(i) = w(i) * s * (1.0 - t * t);
    }
    grad = T.transpose() * du;
    return f;
  };

  // graph samples; refinement rounds append verification violations
  std::vector<double> xs = detail::default_constraint_points(iv, problem.n_constraint_points);
  xs.push_back(0.0);
  if (static_cast<int>(xs.size()) < J)
    res.warning = "fewer constraint points than coefficients";

  nlp::Vec theta = theta0;
  for (int round = 0; round <= std::max(0, problem.refine_rounds); ++round) {
    std::vector<std::pair<double, double>> graph_pts;
    for (double x : xs) graph_pts.push_back({x, problem.delta.eval(x)});
    nlp::Mat G = detail::monomial_matrix(monos, graph_pts);
    nlp::Vec margin(static_cast<Eigen::Index>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i)
      margin(static_cast<Eigen::Index>(i)) =
          problem.graph_margin * std::min(xs[i] * xs[i], 1.0);

    nlp::ConstrainedProblem cp;
    cp.dim = J;
    cp.objective = objective;
    cp.inequalities.count = static_cast<int>(xs.size());
    cp.inequalities.value = [&](const nlp::Vec& th, nlp::Vec& out) { out = G * th - margin; };
    cp.inequalities.jacobian = [&](const nlp::Vec&, nlp::Mat& out) { out = G; };
    cp.equalities.count = 1;
    cp.equalities.value = [&](const nlp::Vec& th, nlp::Vec& out) {
      out.resize(1);
      out(0) = th.squaredNorm() - 1.0;
    };
    cp.equalities.jacobian = [&](const nlp::Vec& th, nlp::Mat& out) {
      out.resize(1, th.size());
      out.row(0) = 2.0 * th.transpose();
    };

    nlp::AlResult al = augmented_lagrangian(cp, theta0, problem.nlp);

    auto assess = [&](const nlp::Vec& th) {
      double minc = (G * th).minCoeff();
      nlp::Vec gd(J);
      double f = objective(th, gd);
      return std::pair<double, double>{minc, f};
    };

    nlp::Vec cand = al.x / al.x.norm();  // exact unit norm
    auto [minc, fval] = assess(cand);
    auto [minc0, fval0] = assess(theta0);
    res.objective_init = fval0;

    bool cand_ok = minc >= -1e-8;
    bool init_ok = minc0 >= -1e-8;
    if (cand_ok && (!init_ok || fval <= fval0 + 1e-9)) {
      theta = cand;
      res.converged = al.converged;
      res.objective = fval;
      res.min_constraint_value = minc;
    } else if (init_ok) {
      theta = theta0;
      res.objective = fval0;
      res.min_constraint_value = minc0;
      if (res.warning.find("did not improve") == std::string::npos) {
        res.warning += (res.warning.empty() ? "" : "; ");
        res.warning += "optimizer did not improve on the initial constraint";
      }
    } else {
      throw std::runtime_error("synthesize: no feasible iterate");
    }
    res.feasible = res.min_constraint_value >= -1e-8 && std::abs(theta.norm() - 1.0) <= 1e-8;

    res.constraint.p = detail::poly_from_coeffs(monos, theta);
    res.constraint.provenance = PolynomialConstraint::Provenance::synthesized;
    res.constraint.interval = iv;
    res.constraint.validity = problem.validity;
    res.constraint.name = "synthesized";
    res.report = verify_constraint(res.constraint, problem.delta, iv);
    res.verified = res.report.ok;
    if (res.verified || res.report.violations.empty()) break;
    for (const auto& viol : res.report.violations) xs.push_back(viol.x);
  }
  return res;
}

struct TransformedSynthesisResult {
  Polynomial h1, h2;
  SynthesisResult base;
};

// Minimum of d/dx h1(x, Delta(x)) over the constraint points; the synthesis
// enforces >= 1e-6 as the strict-monotonicity surrogate.
inline double h1_graph_derivative_min(const Polynomial& h1, const DeltaOperator& delta,
                                      const std::vector<double>& xs) {
  auto g = gradient(h1.with_vars(vw_vars()));
  double m = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    double y = delta.eval(x);
    m = std::min(m, evaluate(g[0], {x, y}) + evaluate(g[1], {x, y}) * delta.derivative(x));
  }
  return m;
}

inline TransformedSynthesisResult synthesize_transformed(const SynthesisProblem& problem,
                                                         int h1_degree, int h2_degree,
                                                         const Polynomial& init_h1,
                                                         const Polynomial& init_h2) {
  TransformedSynthesisResult out;
  SynthesisResult& res = out.base;
  res.seed = problem.seed;

  std::pair<double, double> iv = problem.constraint_interval;
  if (iv.first == 0.0 && iv.second == 0.0) iv = {problem.delta.lo, problem.delta.hi};

  auto m1 = monomial_basis(vw_vars(), h1_degree).monomials;
  auto m2 = monomial_basis(vw_vars(), h2_degree).monomials;
  const int J1 = static_cast<int>(m1.size());
  const int J2 = static_cast<int>(m2.size());
  const int J = J1 + J2;

  auto pack = [&](const Polynomial& a, const Polynomial& b) {
    nlp::Vec th = nlp::Vec::Zero(J);
    Polynomial al = a.with_vars(vw_vars()), bl = b.with_vars(vw_vars());
    for (const auto& [e, c] : al.terms()) {
      auto it = std::find(m1.begin(), m1.end(), e);
      if (it == m1.end()) throw std::invalid_argument("init h1 exceeds degree");
      th(static_cast<Eigen::Index>(it - m1.begin())) = c;
    }
    for (const auto& [e, c] : bl.terms()) {
      auto it = std::find(m2.begin(), m2.end(), e);
      if (it == m2.end()) throw std::invalid_argument("init h2 exceeds degree");
      th(static_cast<Eigen::Index>(J1 + (it - m2.begin()))) = c;
    }
    return th;
  };
  nlp::Vec theta0 = pack(init_h1, init_h2);
  theta0 /= theta0.norm();

  std::vector<double> xs = detail::default_constraint_points(iv, problem.n_constraint_points);
  std::vector<std::pair<double, double>> graph_pts;
  for (double x : xs) graph_pts.push_back({x, problem.delta.eval(x)});
  Rng rng(problem.seed);
  auto tps = generate_test_points(problem.test_cfg, problem.delta, rng);

  nlp::Mat B1g = detail::monomial_matrix(m1, graph_pts);
  nlp::Mat B2g = detail::monomial_matrix(m2, graph_pts);
  std::vector<std::pair<double, double>> test_xy;
  std::vector<double> weights;
  for (const auto& tp : tps) {
    test_xy.push_back({tp.x, tp.y});
    weights.push_back(tp.weight);
  }
  nlp::Mat B1t = detail::monomial_matrix(m1, test_xy);
  nlp::Mat B2t = detail::monomial_matrix(m2, test_xy);
  nlp::Vec w = Eigen::Map<nlp::Vec>(weights.data(), static_cast<Eigen::Index>(weights.size()));

  // h1' along the graph is linear in theta1: rows of Gm
  nlp::Mat Gm(static_cast<Eigen::Index>(xs.size()), J1);
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i], y = problem.delta.eval(x);
    double dy = problem.delta.derivative(x);
    for (int j = 0; j < J1; ++j) {
      const Exponents& e = m1[static_cast<size_t>(j)];
      double dv = 0.0, dw = 0.0;
      if (e[0] > 0) {
        double t = e[0];
        for (int k = 0; k < e[0] - 1; ++k) t *= x;
        for (int k = 0; k < e[1]; ++k) t *= y;
        dv = t;
      }
      if (e[1] > 0) {
        double t = e[1];
        for (int k = 0; k < e[0]; ++k) t *= x;
        for (int k = 0; k < e[1] - 1; ++k) t *= y;
        dw = t;
      }
      Gm(static_cast<Eigen::Index>(i), j) = dv + dw * dy;
    }
  }

  double s = problem.test_cfg.s;
  if (s <= 0.0) {
    nlp::Vec h1v = B1t * theta0.head(J1), h2v = B2t * theta0.tail(J2);
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < h1v.size(); ++i)
      vals.push_back(std::abs(h2v(i) * (h1v(i) - h2v(i))));
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    s = 1.0 / std::max(vals[vals.size() / 2], 1e-12);
  }
  res.scale_s = s;

  const double mono_eps = 1e-6;
  const int N = static_cast<int>(xs.size());

  nlp::ConstrainedProblem cp;
  cp.dim = J;
  cp.objective = [&](const nlp::Vec& th, nlp::Vec& grad) -> double {
    nlp::Vec h1v = B1t * th.head(J1), h2v = B2t * th.tail(J2);
    double f = 0.0;
    nlp::Vec d1(h1v.size()), d2(h1v.size());
    for (Eigen::Index i = 0; i < h1v.size(); ++i) {
      double pv = h2v(i) * (h1v(i) - h2v(i));
      double t = std::tanh(s * pv);
      f += w(i) * t;
      double base = w(i) * s * (1.0 - t * t);
      d1(i) = base * h2v(i);
      d2(i) = base * (h1v(i) - 2.0 * h2v(i));
    }
    grad.resize(J);
    grad.head(J1) = B1t.transpose() * d1;
    grad.tail(J2) = B2t.transpose() * d2;
    return f;
  };
  cp.inequalities.count = 2 * N;
  cp.inequalities.value = [&](const nlp::Vec& th, nlp::Vec& out) {
    nlp::Vec h1v = B1g * th.head(J1), h2v = B2g * th.tail(J2);
    out.resize(2 * N);
    for (int i = 0; i < N; ++i) out(i) = h2v(i) * (h1v(i) - h2v(i));
    out.tail(N) = Gm * th.head(J1) - nlp::Vec::Constant(N, mono_eps);
  };
  cp.inequalities.jacobian = [&](const nlp::Vec& th, nlp::Mat& out) {
    nlp::Vec h1v = B1g * th.head(J1), h2v = B2g * th.tail(J2);
    out = nlp::Mat::Zero(2 * N, J);
    for (int i = 0; i < N; ++i) {
      out.row(i).head(J1) = h2v(i) * B1g.row(i);
      out.row(i).tail(J2) = (h1v(i) - 2.0 * h2v(i)) * B2g.row(i);
    }
    out.block(N, 0, N, J1) = Gm;
  };
  cp.equalities.count = 1;
  cp.equalities.value = [&](const nlp::Vec& th, nlp::Vec& out) {
    out.resize(1);
    out(0) = th.squaredNorm() - 1.0;
  };
  cp.equalities.jacobian = [&](const nlp::Vec& th, nlp::Mat& out) {
    out.resize(1, th.size());
    out.row(0) = 2.0 * th.transpose();
  };

  nlp::AlResult al = augmented_lagrangian(cp, theta0, problem.nlp);

  auto build = [&](const nlp::Vec& th) {
    Polynomial h1 = detail::poly_from_coeffs(m1, th.head(J1));
    Polynomial h2 = detail::poly_from_coeffs(m2, th.tail(J2));
    return std::pair<Polynomial, Polynomial>{h1, h2};
  };

  auto [h1c, h2c] = build(al.x);
  Polynomial pc = h2c * (h1c - h2c);
  double cn = coeff_norm2(pc);
  if (cn <= 0.0) throw std::runtime_error("synthesize_transformed: degenerate result");
  double t = 1.0 / std::sqrt(cn);
  out.h1 = t * h1c;
  out.h2 = t * h2c;
  Polynomial p = out.h2 * (out.h1 - out.h2);

  // feasibility of the exact product polynomial on the graph samples
  double minc = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : graph_pts) minc = std::min(minc, evaluate(p, {x, y}));
  double monomin = h1_graph_derivative_min(out.h1, problem.delta, xs);
  if (minc < -1e-8 || monomin < 0.0) {
    // fall back to the (normalized) initial map when it is feasible
    auto [h10, h20] = build(theta0);
    Polynomial p0 = h20 * (h10 - h20);
    double cn0 = coeff_norm2(p0);
    double t0 = 1.0 / std::sqrt(cn0);
    Polynomial h1f = t0 * h10, h2f = t0 * h20;
    Polynomial pf = h2f * (h1f - h2f);
    double minc0 = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : graph_pts) minc0 = std::min(minc0, evaluate(pf, {x, y}));
    if (minc0 >= -1e-8 && h1_graph_derivative_min(h1f, problem.delta, xs) > 0.0) {
      out.h1 = h1f;
      out.h2 = h2f;
      p = pf;
      minc = minc0;
      res.warning = "optimizer did not improve on the initial transformation";
    } else {
      throw std::runtime_error("synthesize_transformed: no feasible iterate");
    }
  }
  res.converged = al.converged;
  res.feasible = minc >= -1e-8 && std::abs(coeff_norm2(p) - 1.0) <= 1e-8;
  res.min_constraint_value = minc;

  res.constraint.p = p;
  res.constraint.provenance = PolynomialConstraint::Provenance::transformed;
  res.constraint.interval = iv;
  res.constraint.validity = problem.validity;
  res.constraint.name = "transformed";
  res.constraint.factors = {out.h2, out.h1 - out.h2};
  res.report = verify_constraint(res.constraint, problem.delta, iv);
  res.verified = res.report.ok;
  return out;
}

}  // namespace polycert

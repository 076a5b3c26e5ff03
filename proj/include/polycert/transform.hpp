#pragma once

// Constraint transformations through polynomial graph maps
// h(v, w) = (h1(v, w), h2(v, w)) restricted to the graph of Delta. Only the
// static (memoryless) case is computational; the induced operator
// h2 o h1^{-1} is represented by samples, never by symbolic inversion.

#include <Eigen/Dense>
#include <vector>

#include "polycert/constraints.hpp"
#include "polycert/delta.hpp"
#include "polycert/polynomial.hpp"

namespace polycert {

struct GraphMap {
  Polynomial h1;  // in (v, w)
  Polynomial h2;

  static GraphMap identity() {
    return {Polynomial::variable("v", vw_vars()), Polynomial::variable("w", vw_vars())};
  }
};

struct QuadraticForm {
  Eigen::Matrix2d M;  // symmetric

  // [v w] M [v w]^T expanded
  Polynomial poly() const {
    Polynomial p(vw_vars());
    p.add_term({2, 0}, M(0, 0));
    p.add_term({1, 1}, M(0, 1) + M(1, 0));
    p.add_term({0, 2}, M(1, 1));
    return p;
  }
};

// psi(h1, h2): exact polynomial composition.
inline Polynomial compose_constraint(const Polynomial& psi, const GraphMap& h) {
  return substitute(psi.with_vars(vw_vars()),
                    {{"v", h.h1.with_vars(vw_vars())}, {"w", h.h2.with_vars(vw_vars())}});
}

// Mt = H^T M H (symmetrized) and its quadratic-form polynomial.
inline std::pair<QuadraticForm, Polynomial> quad_transform(const Eigen::Matrix2d& H,
                                                           const QuadraticForm& M) {
  Eigen::Matrix2d Mt = H.transpose() * M.M * H;
  Mt = 0.5 * (Mt + Mt.transpose().eval());
  QuadraticForm out{Mt};
  return {out, out.poly()};
}

// Example-style tightness helper for linear H = [a b; c d] against
// slope-restricted odd nonlinearities: (ad - bc) / (b^2 - d^2).
inline double slope_tightness_ratio(const Eigen::Matrix2d& H) {
  double a = H(0, 0), b = H(0, 1), c = H(1, 0), d = H(1, 1);
  return (a * d - b * c) / (b * b - d * d);
}

struct InvertibilityReport {
  bool ok = false;
  double min_abs_derivative = 0.0;
  double sign = 0.0;  // +1 increasing, -1 decreasing, 0 indeterminate
};

// d/dx h1(x, Delta(x)) by chain rule; ok iff one sign with margin >= 1e-9
// across the grid.
inline InvertibilityReport check_h1_invertible(const GraphMap& h, const DeltaOperator& delta,
                                               std::pair<double, double> interval,
                                               int grid_n = 10000) {
  auto d1 = gradient(h.h1.with_vars(vw_vars()));
  InvertibilityReport rep;
  double lo = interval.first, hi = interval.second;
  double minval = std::numeric_limits<double>::infinity();
  double maxval = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid_n; ++i) {
    double x = lo + (hi - lo) * static_cast<double>(i) / grid_n;
    double y = delta.eval(x);
    double dy = delta.derivative(x);
    double der = evaluate(d1[0], {x, y}) + evaluate(d1[1], {x, y}) * dy;
    minval = std::min(minval, der);
    maxval = std::max(maxval, der);
  }
  const double margin = 1e-9;
  if (minval >= margin) {
    rep.ok = true;
    rep.sign = 1.0;
    rep.min_abs_derivative = minval;
  } else if (maxval <= -margin) {
    rep.ok = true;
    rep.sign = -1.0;
    rep.min_abs_derivative = -maxval;
  } else {
    rep.ok = false;
    rep.min_abs_derivative = std::min(std::abs(minval), std::abs(maxval));
  }
  return rep;
}

struct SampledOperator {
  std::vector<double> vt;  // h1 along the graph, sorted
  std::vector<double> wt;  // h2 at the matching parameter
  std::vector<double> x;   // original parameter per sample
};

// Samples of the induced operator h2 o h1^{-1} on the graph of Delta.
inline SampledOperator tilde_delta(const GraphMap& h, const DeltaOperator& delta,
                                   const std::vector<double>& x_grid) {
  auto inv = check_h1_invertible(
      h, delta, {x_grid.front(), x_grid.back()},
      std::max<int>(1000, static_cast<int>(x_grid.size())));
  if (!inv.ok)
    throw std::runtime_error("tilde_delta: h1 is not invertible along the graph");
  SampledOperator out;
  struct Row {
    double v, w, x;
  };
  std::vector<Row> rows;
  rows.reserve(x_grid.size());
  for (double x : x_grid) {
    double y = delta.eval(x);
    rows.push_back({evaluate(h.h1, {x, y}), evaluate(h.h2, {x, y}), x});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.v < b.v; });
  for (const auto& r : rows) {
    out.vt.push_back(r.v);
    out.wt.push_back(r.w);
    out.x.push_back(r.x);
  }
  return out;
}

}  // namespace polycert

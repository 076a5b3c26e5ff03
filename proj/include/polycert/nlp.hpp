#pragma once

// Smooth constrained minimization: augmented Lagrangian (Powell-Hestenes-
// Rockafellar for inequalities) with an L-BFGS inner loop. Gradients are
// analytic throughout; constraint groups are vectorized with dense
// Jacobians, which is the right shape for coefficient-space problems.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace polycert::nlp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct LbfgsOptions {
  int max_iterations = 400;
  double grad_tol = 1e-10;
  int memory = 12;
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline LbfgsResult lbfgs_minimize(const std::function<double(const Vec&, Vec&)>& fg, Vec x0,
                                  const LbfgsOptions& opt = {}) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  Vec x = std::move(x0);
  Vec g(n), gnew(n);
  double f = fg(x, g);

  std::vector<Vec> S, Y;
  std::vector<double> rho;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    double gnorm = g.norm();
    res.grad_norm = gnorm;
    if (gnorm <= opt.grad_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    Vec q = g;
    std::vector<double> alpha(S.size());
    for (size_t i = S.size(); i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) {
      double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
      q *= gamma;
    }
    for (size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    Vec d = -q;
    double dg = d.dot(g);
    if (dg > -1e-14 * d.norm() * gnorm) {
      d = -g;
      dg = -gnorm * gnorm;
    }

    // backtracking Armijo
    double t = 1.0;
    const double c1 = 1e-4;
    double fnew = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      Vec xn = x + t * d;
      fnew = fg(xn, gnew);
      if (std::isfinite(fnew) && fnew <= f + c1 * t * dg) {
        Vec s = t * d;
        Vec y = gnew - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
          S.push_back(std::move(s));
          Y.push_back(std::move(y));
          rho.push_back(1.0 / sy);
          if (static_cast<int>(S.size()) > opt.memory) {
            S.erase(S.begin());
            Y.erase(Y.begin());
            rho.erase(rho.begin());
          }
        }
        x = std::move(xn);
        f = fnew;
        g = gnew;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent at machine scale
  }
  res.x = std::move(x);
  res.f = f;
  return res;
}

// A differentiable vector-valued function with a dense Jacobian.
struct VectorFn {
  int count = 0;
  std::function<void(const Vec&, Vec&)> value;     // out: count
  std::function<void(const Vec&, Mat&)> jacobian;  // out: count x dim
};

struct ConstrainedProblem {
  int dim = 0;
  std::function<double(const Vec&, Vec&)> objective;  // value + gradient
  VectorFn inequalities;  // g(x) >= 0 componentwise (count may be 0)
  VectorFn equalities;    // c(x) = 0 componentwise (count may be 0)
};

struct AlOptions {
  int outer_iterations = 60;
  double rho0 = 10.0;
  double rho_max = 1e10;
  double rho_growth = 4.0;
  double tol_ineq = 1e-9;
  double tol_eq = 1e-10;
  LbfgsOptions inner;
};

struct AlResult {
  Vec x;
  double objective = 0.0;
  double max_ineq_violation = 0.0;  // max(0, -min g_i)
  double max_eq_violation = 0.0;
  bool feasible = false;
  bool converged = false;
  int outer_iterations = 0;
};

inline AlResult augmented_lagrangian(const ConstrainedProblem& prob, Vec x0,
                                     const AlOptions& opt = {}) {
  const int ni = prob.inequalities.count;
  const int ne = prob.equalities.count;
  Vec lambda = Vec::Zero(ni);
  Vec mu = Vec::Zero(ne);
  double rho = opt.rho0;

  Vec x = std::move(x0);
  Vec gi(ni), ce(ne);
  Mat Ji(ni, prob.dim), Je(ne, prob.dim);

  auto violations = [&](const Vec& xq, double& vi, double& veq) {
    vi = 0.0;
    veq = 0.0;
    if (ni > 0) {
      prob.inequalities.value(xq, gi);
      vi = std::max(0.0, -gi.minCoeff());
    }
    if (ne > 0) {
      prob.equalities.value(xq, ce);
      veq = ce.cwiseAbs().maxCoeff();
    }
  };

  AlResult res;
  double prev_viol = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opt.outer_iterations; ++outer) {
    res.outer_iterations = outer + 1;
    auto L = [&](const Vec& xq, Vec& grad) -> double {
      Vec gobj(prob.dim);
      double f = prob.objective(xq, gobj);
      grad = gobj;
      if (ni > 0) {
        prob.inequalities.value(xq, gi);
        prob.inequalities.jacobian(xq, Ji);
        for (int i = 0; i < ni; ++i) {
          double slack = lambda(i) - rho * gi(i);
          if (slack > 0.0) {
            f += (slack * slack - lambda(i) * lambda(i)) / (2.0 * rho);
            grad -= slack * Ji.row(i).transpose();
          } else {
            f -= lambda(i) * lambda(i) / (2.0 * rho);
          }
        }
      }
      if (ne > 0) {
        prob.equalities.value(xq, ce);
        prob.equalities.jacobian(xq, Je);
        f += mu.dot(ce) + 0.5 * rho * ce.squaredNorm();
        grad += Je.transpose() * (mu + rho * ce);
      }
      return f;
    };

    LbfgsResult inner = lbfgs_minimize(L, x, opt.inner);
    x = inner.x;

    double vi, veq;
    violations(x, vi, veq);
    double viol = std::max(vi, veq);
    if (vi <= opt.tol_ineq && veq <= opt.tol_eq) {
      res.converged = inner.converged || viol == 0.0;
      if (res.converged) break;
    }
    // multiplier updates
    if (ni > 0) {
      prob.inequalities.value(x, gi);
      for (int i = 0; i < ni; ++i) lambda(i) = std::max(0.0, lambda(i) - rho * gi(i));
    }
    if (ne > 0) {
      prob.equalities.value(x, ce);
      mu += rho * ce;
    }
    if (viol > 0.25 * prev_viol && rho < opt.rho_max) rho *= opt.rho_growth;
    prev_viol = viol;
  }

  Vec gdummy(prob.dim);
  res.objective = prob.objective(x, gdummy);
  violations(x, res.max_ineq_violation, res.max_eq_violation);
  res.feasible = res.max_ineq_violation <= 1e-8 && res.max_eq_violation <= 1e-7;
  res.x = std::move(x);
  return res;
}

}  // namespace polycert::nlp

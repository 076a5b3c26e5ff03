#pragma once

// Region-of-attraction certification for systems
//
//   xdot = f(x, w),  v = g(x),  w = Delta(v)
//
// with f, g polynomial and Delta abstracted by pointwise polynomial
// constraints p_i(v, w) >= 0 on their validity regions. Certification
// alternates an expansion step (fixed V, bisect the level c, solve for
// multipliers) and a reshape step (fixed s_c, re-decide V at level 1 while
// containing a sublevel set of the previous estimate).
//
// Validity handling: the v-interval of each constraint and any x-only
// validity polynomial become set-containment side conditions
//   (1 + s_d) q - s_n (c - V) in Sigma[(x,w)].
// A w-dependent validity polynomial cannot appear in that form (the
// expression is negative for large |w| no matter the multipliers); it is
// instead used as an extra multiplied constraint in the decay condition,
// and the v-interval is tightened so the box provably holds along the
// graph on the certified region.

#include <Eigen/Dense>
#include <chrono>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "polycert/constraints.hpp"
#include "polycert/delta.hpp"
#include "polycert/rng.hpp"
#include "polycert/sos.hpp"

namespace polycert {

struct SystemModel {
  std::vector<std::string> state_vars;
  std::vector<Polynomial> f;  // n entries, polynomials in (state..., w)
  Polynomial g;               // scalar, polynomial in state
  std::optional<DeltaOperator> delta;

  int n() const { return static_cast<int>(state_vars.size()); }
  bool has_channel() const { return delta.has_value(); }

  std::vector<std::string> xw_vars() const {
    std::vector<std::string> v = state_vars;
    if (has_channel()) v.push_back("w");
    return v;
  }
};

inline SystemModel make_system_model(std::vector<std::string> state_vars,
                                     std::vector<Polynomial> f, Polynomial g,
                                     std::optional<DeltaOperator> delta) {
  SystemModel m;
  m.state_vars = std::move(state_vars);
  m.f = std::move(f);
  m.g = std::move(g);
  m.delta = std::move(delta);
  if (m.f.size() != m.state_vars.size())
    throw std::invalid_argument("system model: f arity mismatch");
  std::vector<double> zero(m.state_vars.size() + (m.has_channel() ? 1 : 0), 0.0);
  for (const auto& fi : m.f)
    if (std::abs(evaluate(fi.with_vars(m.xw_vars()), zero)) > 0)
      throw std::invalid_argument("system model: f(0,0) != 0");
  std::vector<double> zx(m.state_vars.size(), 0.0);
  if (std::abs(evaluate(m.g.with_vars(m.state_vars), zx)) > 0)
    throw std::invalid_argument("system model: g(0) != 0");
  if (m.has_channel() && m.delta->fixed_point_at_zero &&
      std::abs(m.delta->eval(0.0)) > 1e-12)
    throw std::invalid_argument("system model: delta(0) != 0");
  return m;
}

struct RoaStage {
  int n_V = 2;
  int n_total = 6;
  int iterations = 1;
};

struct RoaConfig {
  std::vector<PolynomialConstraint> constraints;
  std::vector<RoaStage> schedule;
  double epsilon = 1e-6;
  double bisect_rel_tol = 1e-3;
  int max_doublings = 20;
  double bisect_floor_factor = 1e-9;
  std::pair<double, double> reshape_range{0.90, 0.99};
  int reshape_trials = 6;
  enum class VolumeMethod { automatic, ellipsoid, monte_carlo };
  VolumeMethod volume_method = VolumeMethod::automatic;
  int mc_samples = 1000000;
  int mc_samples_trace = 100000;
  uint64_t seed = 12345;
  double converge_rel_tol = 1e-4;  // volume change over 3 iterations
  SolverTolerances sos_tol;
  bool verbose = false;
};

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::string method;
};

struct RoaIterationRecord {
  int stage = 0;
  int iteration = 0;
  int n_V = 0, n_total = 0;
  double c_star = 0.0;
  double volume = 0.0;
  bool reshaped = false;
  double reshape_c = 0.0;
  int solves = 0;
  double seconds = 0.0;
};

struct RoaCertificate {
  Polynomial V;
  double c_level = 0.0;
  std::map<std::string, Polynomial> multipliers;
  SosCertificate expansion_cert;   // decay condition and side conditions
  SosCertificate positivity_cert;  // V - l_x in Sigma
  VolumeEstimate volume;
  std::vector<RoaIterationRecord> trace;
  bool sound = false;
  double max_residual = 0.0;
  std::string message;
};

namespace roa_detail {

inline int even_floor_clamped(int d) { return d <= 0 ? 0 : 2 * (d / 2); }

inline Polynomial l_x(const SystemModel& m, double eps) {
  Polynomial p(m.state_vars);
  for (size_t i = 0; i < m.state_vars.size(); ++i) {
    Exponents e(m.state_vars.size(), 0);
    e[i] = 2;
    p.add_term(e, eps);
  }
  return p;
}

inline Polynomial l_xw(const SystemModel& m, double eps) {
  auto vars = m.xw_vars();
  Polynomial p(vars);
  for (size_t i = 0; i < vars.size(); ++i) {
    Exponents e(vars.size(), 0);
    e[i] = 2;
    p.add_term(e, eps);
  }
  return p;
}

// A constraint lowered into system coordinates.
struct PreparedConstraint {
  std::string name;
  Polynomial p_x;    // p(g(x), w)
  int s_degree = 0;  // multiplier degree for the decay condition
};

struct PreparedValidity {
  std::string name;
  Polynomial q_x;  // side-condition polynomial in x (w-free)
  int s_d_degree = 0, s_n_degree = 0;
};

struct Prepared {
  std::vector<PreparedConstraint> mains;      // p_i and w-box entries
  std::vector<PreparedValidity> sides;        // interval + x-only validity
  std::vector<std::pair<double, double>> effective_intervals;  // per input constraint
};

// Largest subinterval of [a,b] containing 0 where q(v, Delta(v)) >= 0.
inline std::pair<double, double> tighten_interval(const Polynomial& q,
                                                  const DeltaOperator& delta, double a,
                                                  double b) {
  auto val = [&](double v) { return evaluate(q, {v, delta.eval(v)}); };
  if (val(0.0) < 0.0)
    throw std::runtime_error("validity box excludes the origin on the graph");
  const int grid = 20000;
  auto scan = [&](double from, double to) {
    // walk from 0 toward `to`; return last good point
    double step = (to - from) / grid;
    double x = from;
    for (int i = 1; i <= grid; ++i) {
      double nx = from + step * i;
      if (val(nx) < 0.0) {
        double good = x, bad = nx;
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (good + bad);
          if (val(mid) >= 0.0)
            good = mid;
          else
            bad = mid;
        }
        return good;
      }
      x = nx;
    }
    return to;
  };
  return {scan(0.0, a), scan(0.0, b)};
}

inline Prepared prepare(const SystemModel& model, const std::vector<PolynomialConstraint>& cs,
                        int n_V, int n_total) {
  Prepared out;
  auto vars = model.xw_vars();
  Polynomial gx = model.g.with_vars(model.state_vars);

  auto compose = [&](const Polynomial& pvw) {
    Polynomial p = pvw.with_vars(vw_vars());
    std::map<std::string, Polynomial> bind;
    bind["v"] = gx;
    bind["w"] = Polynomial::variable("w", {"w"});
    return substitute(p, bind).with_vars(vars);
  };

  int ci = 0;
  for (const auto& c : cs) {
    ++ci;
    std::string base = c.name.empty() ? "p" + std::to_string(ci) : c.name;
    Polynomial p_x = compose(c.p);
    if (p_x.degree() > n_total)
      throw std::runtime_error("degree overflow: constraint '" + base +
                               "' composed degree " + std::to_string(p_x.degree()) +
                               " exceeds n_total " + std::to_string(n_total));
    PreparedConstraint pc;
    pc.name = base;
    pc.p_x = p_x;
    pc.s_degree = even_floor_clamped(n_total - p_x.degree());
    out.mains.push_back(std::move(pc));

    double lo = c.interval ? c.interval->first : 0.0;
    double hi = c.interval ? c.interval->second : 0.0;
    bool have_interval = c.interval.has_value();

    for (size_t j = 0; j < c.validity.size(); ++j) {
      Polynomial q = c.validity[j].with_vars(vw_vars());
      bool w_dependent = q.degree_in(1) > 0;
      if (w_dependent) {
        if (!model.has_channel())
          throw std::runtime_error("w-dependent validity in a channel-free model");
        if (!have_interval)
          throw std::runtime_error("constraint '" + base +
                                   "' has a w-dependent validity but no v-interval");
        auto t = tighten_interval(q, *model.delta, lo, hi);
        lo = std::max(lo, t.first);
        hi = std::min(hi, t.second);
        // the box itself becomes a multiplied constraint in the decay condition
        Polynomial q_x = compose(q);
        if (q_x.degree() > n_total)
          throw std::runtime_error("degree overflow: validity of '" + base + "'");
        PreparedConstraint wc;
        wc.name = base + "_box" + std::to_string(j);
        wc.p_x = q_x;
        wc.s_degree = even_floor_clamped(n_total - q_x.degree());
        out.mains.push_back(std::move(wc));
      } else {
        PreparedValidity pv;
        pv.name = base + "_q" + std::to_string(j);
        pv.q_x = compose(q);
        if (pv.q_x.degree() > n_total)
          throw std::runtime_error("degree overflow: validity of '" + base + "'");
        pv.s_d_degree = even_floor_clamped(n_total - pv.q_x.degree());
        pv.s_n_degree = even_floor_clamped(n_total - n_V);
        out.sides.push_back(std::move(pv));
      }
    }
    if (have_interval) {
      Polynomial qv(vw_vars());
      // (v - lo)(hi - v)
      auto vv = Polynomial::variable("v", vw_vars());
      qv = (vv - Polynomial::constant(lo, vw_vars())) *
           (Polynomial::constant(hi, vw_vars()) - vv);
      PreparedValidity pv;
      pv.name = base + "_interval";
      pv.q_x = compose(qv);
      if (pv.q_x.degree() > n_total)
        throw std::runtime_error("degree overflow: interval validity of '" + base + "'");
      pv.s_d_degree = even_floor_clamped(n_total - pv.q_x.degree());
      pv.s_n_degree = even_floor_clamped(n_total - n_V);
      out.sides.push_back(std::move(pv));
    }
    out.effective_intervals.push_back({lo, hi});
  }
  return out;
}

// The decay expression vanishes at the origin together with its gradient,
// so a multiplier whose constraint is nonzero (in value or slope) at the
// origin is structurally forced to vanish there; drop the constant from its
// Gram basis to keep feasible iterates off the PSD boundary.
inline bool multiplier_drops_constant(const Polynomial& p_x) {
  std::vector<double> zero(p_x.nvars(), 0.0);
  if (std::abs(evaluate(p_x, {zero.data(), zero.size()})) > 1e-12) return true;
  for (const auto& [e, c] : p_x.terms())
    if (total_degree(e) == 1 && std::abs(c) > 1e-12) return true;
  return false;
}

inline AffPoly neg_grad_V_dot_f(const SystemModel& model, const AffPoly& V) {
  auto vars = model.xw_vars();
  AffPoly acc(vars);
  auto gv = gradient(V);  // over state vars
  for (size_t i = 0; i < model.f.size(); ++i) {
    AffPoly gi = gv[i].with_vars(vars);
    AffPoly fi = lift(model.f[i].with_vars(vars));
    acc = acc - gi * fi;
  }
  return acc;
}

}  // namespace roa_detail

// Decay-condition polynomial with everything resolved numerically:
//   -grad(V).f - eps(x.x + w.w) - s_c (c - V) - sum_i s_i p_i(g(x), w)
inline Polynomial roa_condition(const Polynomial& V, double c, const Polynomial& s_c,
                                const std::vector<std::pair<Polynomial, Polynomial>>&
                                    multiplier_constraint_pairs,
                                const SystemModel& model, double epsilon) {
  auto vars = model.xw_vars();
  Polynomial acc(vars);
  auto gv = gradient(V.with_vars(model.state_vars));
  for (size_t i = 0; i < model.f.size(); ++i)
    acc = acc - gv[i].with_vars(vars) * model.f[i].with_vars(vars);
  acc = acc - roa_detail::l_xw(model, epsilon).with_vars(vars);
  Polynomial cmv = Polynomial::constant(c, vars) - V.with_vars(vars);
  acc = acc - s_c.with_vars(vars) * cmv;
  for (const auto& [s, p] : multiplier_constraint_pairs)
    acc = acc - s.with_vars(vars) * p.with_vars(vars);
  return acc;
}

// Side-condition polynomials (1 + s_d) q - s_n (c - V), all resolved.
inline std::vector<Polynomial> validity_conditions(
    const Polynomial& V, double c, const std::vector<Polynomial>& qs,
    const std::vector<Polynomial>& s_d, const std::vector<Polynomial>& s_n,
    const SystemModel& model) {
  auto vars = model.xw_vars();
  std::vector<Polynomial> out;
  Polynomial cmv = Polynomial::constant(c, vars) - V.with_vars(vars);
  for (size_t j = 0; j < qs.size(); ++j) {
    Polynomial q = qs[j].with_vars(vars);
    out.push_back(q + s_d[j].with_vars(vars) * q - s_n[j].with_vars(vars) * cmv);
  }
  return out;
}

struct ExpansionResult {
  double c_star = 0.0;
  std::map<std::string, Polynomial> multipliers;
  SosCertificate cert;
  int solves = 0;
};

namespace roa_detail {

// Feasibility of the expansion program at a fixed level c.
inline SosCertificate try_expansion(const SystemModel& model, const Prepared& prep,
                                    const Polynomial& V, double c, int n_V, int n_total,
                                    const RoaConfig& cfg) {
  auto vars = model.xw_vars();
  SosProgram prog;
  AffPoly E = neg_grad_V_dot_f(model, lift(V.with_vars(model.state_vars)).with_vars(vars));
  E = E - lift(l_xw(model, cfg.epsilon).with_vars(vars));

  int dsc = even_floor_clamped(n_total - n_V);
  const auto& sc = prog.add_sos_poly("s_c", vars, dsc, /*drop_constant=*/true);
  Polynomial cmv = Polynomial::constant(c, vars) - V.with_vars(vars);
  E = E - sc.poly * lift(cmv);

  for (const auto& pc : prep.mains) {
    bool drop = multiplier_drops_constant(pc.p_x);
    if (drop && pc.s_degree == 0) continue;  // the multiplier is forced to zero
    const auto& s = prog.add_sos_poly("s_" + pc.name, vars, pc.s_degree, drop);
    E = E - s.poly * lift(pc.p_x.with_vars(vars));
  }
  prog.require_sos(E, "decay");

  for (const auto& pv : prep.sides) {
    const auto& sd = prog.add_sos_poly("s_d_" + pv.name, vars, pv.s_d_degree);
    const auto& sn = prog.add_sos_poly("s_n_" + pv.name, vars, pv.s_n_degree);
    AffPoly q = lift(pv.q_x.with_vars(vars));
    AffPoly cond = q + sd.poly * lift(pv.q_x.with_vars(vars)) - sn.poly * lift(cmv);
    prog.require_sos(cond, "validity_" + pv.name);
  }
  return solve(prog.compile(), cfg.sos_tol);
}

}  // namespace roa_detail

// Bisection over the certified level c for a fixed V.
inline ExpansionResult expansion_step(const SystemModel& model,
                                      const roa_detail::Prepared& prep, const Polynomial& V,
                                      int n_V, int n_total, const RoaConfig& cfg,
                                      double c_seed = 1.0) {
  ExpansionResult res;
  SosCertificate best;
  double c_lo = 0.0, c_hi = 0.0;

  auto attempt = [&](double c) {
    ++res.solves;
    SosCertificate cert = roa_detail::try_expansion(model, prep, V, c, n_V, n_total, cfg);
    // a feasibility claim is only meaningful when the certificate residual
    // is small against the claimed level
    if (cert.ok() && cert.max_residual > 1e-2 * c) {
      cert.status = sdp::Status::numerical_failure;
      cert.message = "residual not small against the claimed level";
    }
    return cert;
  };

  double c = c_seed > 0 ? c_seed : 1.0;
  SosCertificate cert = attempt(c);
  if (cert.ok()) {
    c_lo = c;
    best = std::move(cert);
    for (int d = 0; d < cfg.max_doublings; ++d) {
      double cn = c_lo * 2.0;
      SosCertificate up = attempt(cn);
      if (!up.ok()) {
        c_hi = cn;
        break;
      }
      c_lo = cn;
      best = std::move(up);
    }
    if (c_hi == 0.0) {
      // never found infeasible; accept the cap
      res.c_star = c_lo;
      res.cert = std::move(best);
      for (const auto& [name, poly] : res.cert.decision_polys) res.multipliers[name] = poly;
      return res;
    }
  } else {
    double floor = c * cfg.bisect_floor_factor;
    c_hi = c;
    double cn = c * 0.5;
    bool found = false;
    while (cn >= floor) {
      SosCertificate down = attempt(cn);
      if (down.ok()) {
        c_lo = cn;
        best = std::move(down);
        found = true;
        break;
      }
      c_hi = cn;
      cn *= 0.5;
    }
    if (!found) throw std::runtime_error("expansion: no certifiable sublevel set");
  }

  while (c_hi - c_lo > cfg.bisect_rel_tol * c_lo) {
    double mid = 0.5 * (c_lo + c_hi);
    SosCertificate m = attempt(mid);
    if (m.ok()) {
      c_lo = mid;
      best = std::move(m);
    } else {
      c_hi = mid;
    }
  }
  res.c_star = c_lo;
  res.cert = std::move(best);
  for (const auto& [name, poly] : res.cert.decision_polys) res.multipliers[name] = poly;
  return res;
}

struct ReshapeResult {
  bool accepted = false;
  Polynomial V;
  double c_used = 0.0;
  SosCertificate cert;
  int solves = 0;
};

namespace roa_detail {

inline SosCertificate try_reshape(const SystemModel& model, const Prepared& prep,
                                  const Polynomial& V_prev, double c, const Polynomial& s_c,
                                  const std::vector<Polynomial>& s_n_fixed, int n_V,
                                  int n_total, const RoaConfig& cfg) {
  auto vars = model.xw_vars();
  SosProgram prog;
  const auto& Vd = prog.add_free_poly("V", model.state_vars, n_V, /*min_degree=*/2);

  // V - l_x in Sigma[x]
  prog.require_sos(Vd.poly - lift(l_x(model, cfg.epsilon)), "positivity");

  AffPoly Vxw = Vd.poly.with_vars(vars);
  AffPoly one = lift(Polynomial::constant(1.0, vars));

  // decay condition at level 1 with s_c fixed
  AffPoly E = neg_grad_V_dot_f(model, Vxw);
  E = E - lift(l_xw(model, cfg.epsilon).with_vars(vars));
  E = E - lift(s_c.with_vars(vars)) * (one - Vxw);
  for (const auto& pc : prep.mains) {
    bool drop = multiplier_drops_constant(pc.p_x);
    if (drop && pc.s_degree == 0) continue;
    const auto& s = prog.add_sos_poly("s_" + pc.name, vars, pc.s_degree, drop);
    E = E - s.poly * lift(pc.p_x.with_vars(vars));
  }
  prog.require_sos(E, "decay");

  // containment: 1 - V - s_e (c - V_prev) in Sigma
  int dse = even_floor_clamped(n_total - std::max(n_V, V_prev.degree()));
  const auto& se = prog.add_sos_poly("s_e", vars, dse);
  Polynomial cmvprev = Polynomial::constant(c, vars) - V_prev.with_vars(vars);
  prog.require_sos(one - Vxw - se.poly * lift(cmvprev), "containment");

  // s_n multiplies the decision V, so it stays fixed from the expansion,
  // like s_c; s_d only multiplies data and is re-decided.
  for (size_t j = 0; j < prep.sides.size(); ++j) {
    const auto& pv = prep.sides[j];
    const auto& sd = prog.add_sos_poly("s_d_" + pv.name, vars, pv.s_d_degree);
    AffPoly q = lift(pv.q_x.with_vars(vars));
    AffPoly cond = q + sd.poly * lift(pv.q_x.with_vars(vars)) -
                   (one - Vxw) * lift(s_n_fixed[j].with_vars(vars));
    prog.require_sos(cond, "validity_" + pv.name);
  }
  return solve(prog.compile(), cfg.sos_tol);
}

}  // namespace roa_detail

// Re-decide V at level 1 with the expansion multipliers that touch V (s_c
// and the side-condition s_n) held fixed, bisecting c in [0.90, 0.99] c*
// for the largest feasible containment level.
inline ReshapeResult reshape_step(const SystemModel& model, const roa_detail::Prepared& prep,
                                  const Polynomial& V_prev, double c_star,
                                  const std::map<std::string, Polynomial>& expansion_mults,
                                  int n_V, int n_total, const RoaConfig& cfg) {
  ReshapeResult res;
  const Polynomial& s_c_star = expansion_mults.at("s_c");
  std::vector<Polynomial> s_n_fixed;
  for (const auto& pv : prep.sides) s_n_fixed.push_back(expansion_mults.at("s_n_" + pv.name));
  auto attempt = [&](double c) {
    ++res.solves;
    return roa_detail::try_reshape(model, prep, V_prev, c, s_c_star, s_n_fixed, n_V, n_total,
                                   cfg);
  };

  double lo_frac = cfg.reshape_range.first, hi_frac = cfg.reshape_range.second;
  SosCertificate top = attempt(hi_frac * c_star);
  if (top.ok()) {
    res.accepted = true;
    res.c_used = hi_frac * c_star;
    res.V = top.decision_polys.at("V");
    res.cert = std::move(top);
    return res;
  }
  SosCertificate bottom = attempt(lo_frac * c_star);
  if (!bottom.ok()) return res;  // stagnation: caller keeps V_prev

  double lo = lo_frac, hi = hi_frac;
  SosCertificate best = std::move(bottom);
  for (int it = 0; it < cfg.reshape_trials; ++it) {
    double mid = 0.5 * (lo + hi);
    SosCertificate m = attempt(mid * c_star);
    if (m.ok()) {
      lo = mid;
      best = std::move(m);
    } else {
      hi = mid;
    }
  }
  res.accepted = true;
  res.c_used = lo * c_star;
  res.V = best.decision_polys.at("V");
  res.cert = std::move(best);
  return res;
}

// x^T P x from the solution of A^T P + P A = -Q.
inline Polynomial initial_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                   const std::vector<std::string>& state_vars) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i).real() >= -1e-12)
      throw std::runtime_error("initial_lyapunov: A is not Hurwitz");

  // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P) = -vec(Q)
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  Eigen::MatrixXd At = A.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        K(i * n + j, k * n + j) += At(i, k);  // (A^T P)_ij = sum_k At_ik P_kj
        K(i * n + j, i * n + k) += A(k, j);   // (P A)_ij  = sum_k P_ik A_kj
      }
  Eigen::VectorXd q(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i * n + j) = -Q(i, j);
  Eigen::VectorXd p = K.fullPivLu().solve(q);
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) P(i, j) = p(i * n + j);
  P = 0.5 * (P + P.transpose().eval());

  double resid = (A.transpose() * P + P * A + Q).cwiseAbs().maxCoeff();
  if (resid > 1e-10) throw std::runtime_error("initial_lyapunov: residual too large");

  Polynomial V(state_vars);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Exponents e(state_vars.size(), 0);
      e[static_cast<size_t>(i)] += 1;
      e[static_cast<size_t>(j)] += 1;
      V.add_term(e, i == j ? P(i, i) : 2.0 * P(i, j));
    }
  return V;
}

// Volume of {x : V(x) <= c}. Quadratic V: exact ellipsoid volume. Otherwise
// Monte Carlo over an axis-aligned box from coordinate-wise line search.
inline VolumeEstimate estimate_volume(const Polynomial& V, double c,
                                      const std::vector<std::string>& state_vars,
                                      RoaConfig::VolumeMethod method =
                                          RoaConfig::VolumeMethod::automatic,
                                      int mc_samples = 1000000, uint64_t seed = 12345) {
  const int n = static_cast<int>(state_vars.size());
  Polynomial Vx = V.with_vars(state_vars);
  bool quadratic = Vx.degree() == 2;
  if (quadratic)
    for (const auto& [e, coef] : Vx.terms())
      if (total_degree(e) != 2) quadratic = false;

  VolumeEstimate out;
  if ((method == RoaConfig::VolumeMethod::automatic && quadratic) ||
      method == RoaConfig::VolumeMethod::ellipsoid) {
    if (!quadratic) throw std::invalid_argument("estimate_volume: V is not quadratic");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [e, coef] : Vx.terms()) {
      int i = -1, j = -1;
      for (int k = 0; k < n; ++k) {
        if (e[static_cast<size_t>(k)] == 2) i = j = k;
        if (e[static_cast<size_t>(k)] == 1) (i < 0 ? i : j) = k;
      }
      if (i == j)
        P(i, i) = coef;
      else {
        P(i, j) += coef / 2.0;
        P(j, i) += coef / 2.0;
      }
    }
    double det = P.determinant();
    if (det <= 0) throw std::runtime_error("estimate_volume: sublevel set unbounded");
    double unit_ball = std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
    out.value = unit_ball * std::pow(c, n / 2.0) / std::sqrt(det);
    out.method = "ellipsoid";
    return out;
  }

  // bounding box by per-axis line search, inflated for safety
  std::vector<double> box_lo(static_cast<size_t>(n)), box_hi(static_cast<size_t>(n));
  auto cross = [&](int axis, double sign) {
    double r = 1e-3;
    std::vector<double> pt(static_cast<size_t>(n), 0.0);
    auto val = [&](double rr) {
      pt[static_cast<size_t>(axis)] = sign * rr;
      double v = evaluate(Vx, {pt.data(), pt.size()});
      pt[static_cast<size_t>(axis)] = 0.0;
      return v;
    };
    int guard = 0;
    while (val(r) <= c && guard++ < 600) r *= 1.5;
    if (r > 1e12) throw std::runtime_error("estimate_volume: sublevel set unbounded");
    double lo = r / 1.5, hi = r;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (val(mid) <= c ? lo : hi) = mid;
    }
    return hi;
  };
  for (int k = 0; k < n; ++k) {
    box_hi[static_cast<size_t>(k)] = 1.5 * cross(k, +1.0);
    box_lo[static_cast<size_t>(k)] = -1.5 * cross(k, -1.0);
  }

  for (int round = 0; round < 5; ++round) {
    Rng rng(seed);
    double boxvol = 1.0;
    for (int k = 0; k < n; ++k)
      boxvol *= box_hi[static_cast<size_t>(k)] - box_lo[static_cast<size_t>(k)];
    int64_t inside = 0;
    std::vector<double> pt(static_cast<size_t>(n));
    std::vector<int> near_face_hits(static_cast<size_t>(n), 0);
    for (int i = 0; i < mc_samples; ++i) {
      for (int k = 0; k < n; ++k)
        pt[static_cast<size_t>(k)] =
            rng.uniform(box_lo[static_cast<size_t>(k)], box_hi[static_cast<size_t>(k)]);
      if (evaluate(Vx, {pt.data(), pt.size()}) <= c) {
        ++inside;
        for (int k = 0; k < n; ++k) {
          double span = box_hi[static_cast<size_t>(k)] - box_lo[static_cast<size_t>(k)];
          if (pt[static_cast<size_t>(k)] > box_hi[static_cast<size_t>(k)] - 0.02 * span ||
              pt[static_cast<size_t>(k)] < box_lo[static_cast<size_t>(k)] + 0.02 * span)
            ++near_face_hits[static_cast<size_t>(k)];
        }
      }
    }
    bool grew = false;
    for (int k = 0; k < n; ++k)
      if (near_face_hits[static_cast<size_t>(k)] > 0) {
        double mid = 0.5 * (box_hi[static_cast<size_t>(k)] + box_lo[static_cast<size_t>(k)]);
        double half = 0.75 * (box_hi[static_cast<size_t>(k)] - box_lo[static_cast<size_t>(k)]);
        box_hi[static_cast<size_t>(k)] = mid + half;
        box_lo[static_cast<size_t>(k)] = mid - half;
        grew = true;
      }
    if (!grew || round == 4) {
      double frac = static_cast<double>(inside) / mc_samples;
      out.value = boxvol * frac;
      out.std_error = boxvol * std::sqrt(frac * (1.0 - frac) / mc_samples);
      out.method = "monte-carlo";
      return out;
    }
  }
  return out;
}

// Fixed-step RK4 trajectory of xdot = f(x, Delta(g(x))).
inline std::vector<std::vector<double>> simulate(const SystemModel& model,
                                                 std::vector<double> x0, double t_end,
                                                 double dt) {
  if (dt <= 0) throw std::invalid_argument("simulate: dt must be positive");
  const int n = model.n();
  auto vars = model.xw_vars();
  std::vector<Polynomial> f;
  for (const auto& fi : model.f) f.push_back(fi.with_vars(vars));
  Polynomial gx = model.g.with_vars(model.state_vars);

  auto deriv = [&](const std::vector<double>& x, std::vector<double>& dx) {
    std::vector<double> xw = x;
    if (model.has_channel()) {
      double v = evaluate(gx, {x.data(), x.size()});
      xw.push_back(model.delta->eval(v));
    }
    for (int i = 0; i < n; ++i)
      dx[static_cast<size_t>(i)] = evaluate(f[static_cast<size_t>(i)], {xw.data(), xw.size()});
  };

  std::vector<std::vector<double>> traj;
  std::vector<double> x = std::move(x0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  int steps = static_cast<int>(std::ceil(t_end / dt));
  traj.push_back(x);
  for (int s = 0; s < steps; ++s) {
    deriv(x, k1);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    deriv(tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    deriv(tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    deriv(tmp, k4);
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      norm2 += x[i] * x[i];
    }
    traj.push_back(x);
    if (norm2 > 1e12) break;  // diverged; trajectory truncated
  }
  return traj;
}

struct FalsifyReport {
  int samples = 0;
  int converged = 0;
  std::vector<std::vector<double>> failures;  // interior points that failed
  bool ok() const { return failures.empty(); }
};

// Sample the certified set and require every trajectory to reach the origin.
// Success: enters ||x|| <= 1e-4 at some time, or ends with ||x(t_end)|| <= 1e-3.
inline FalsifyReport falsify(const SystemModel& model, const Polynomial& V, double c,
                             int n_samples, uint64_t seed = 7777, double t_end = 50.0,
                             double dt = 0.01) {
  FalsifyReport rep;
  const int n = model.n();
  Polynomial Vx = V.with_vars(model.state_vars);

  // sampling box from per-axis crossings (the set is inside the box only
  // approximately; rejection handles the rest)
  std::vector<double> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    std::vector<double> pt(static_cast<size_t>(n), 0.0);
    double r = 1e-3;
    int guard = 0;
    auto val = [&](double s) {
      pt[static_cast<size_t>(k)] = s;
      double v = evaluate(Vx, {pt.data(), pt.size()});
      pt[static_cast<size_t>(k)] = 0;
      return v;
    };
    while (val(r) <= c && guard++ < 600) r *= 1.5;
    hi[static_cast<size_t>(k)] = 1.2 * r;
    r = 1e-3;
    guard = 0;
    while (val(-r) <= c && guard++ < 600) r *= 1.5;
    lo[static_cast<size_t>(k)] = -1.2 * r;
  }

  Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(n));
  int tries = 0;
  while (rep.samples < n_samples && tries < 1000 * n_samples) {
    ++tries;
    for (int k = 0; k < n; ++k)
      x[static_cast<size_t>(k)] = rng.uniform(lo[static_cast<size_t>(k)],
                                              hi[static_cast<size_t>(k)]);
    if (evaluate(Vx, {x.data(), x.size()}) > c) continue;
    ++rep.samples;
    auto traj = simulate(model, x, t_end, dt);
    bool success = false;
    for (const auto& p : traj) {
      double norm = 0.0;
      for (double xi : p) norm += xi * xi;
      if (norm <= 1e-4 * 1e-4) {
        success = true;
        break;
      }
    }
    if (!success) {
      double endnorm = 0.0;
      for (double xi : traj.back()) endnorm += xi * xi;
      success = endnorm <= 1e-3 * 1e-3 && traj.size() > 1;
    }
    if (success)
      ++rep.converged;
    else
      rep.failures.push_back(x);
  }
  return rep;
}

// Algorithm: alternate expansion and reshape over the degree schedule, then
// take a final expansion as the certificate.
inline RoaCertificate run_roa(const SystemModel& model, const RoaConfig& cfg,
                              const Polynomial& V0) {
  RoaCertificate out;
  Polynomial lx = roa_detail::l_x(model, cfg.epsilon);
  SosCertificate init_pos = is_sos(V0.with_vars(model.state_vars) - lx, cfg.sos_tol);
  if (!init_pos.ok())
    throw std::runtime_error("run_roa: V0 - l_x is not certifiably SOS");
  out.positivity_cert = init_pos;

  Polynomial V = V0.with_vars(model.state_vars);
  std::deque<double> recent_volumes;
  bool converged = false;
  int stage_idx = 0;
  int last_nV = 0, last_ntotal = 0;

  for (const auto& stage : cfg.schedule) {
    ++stage_idx;
    last_nV = stage.n_V;
    last_ntotal = stage.n_total;
    auto prep = roa_detail::prepare(model, cfg.constraints, stage.n_V, stage.n_total);
    for (int it = 1; it <= stage.iterations && !converged; ++it) {
      auto t0 = std::chrono::steady_clock::now();
      ExpansionResult exp =
          expansion_step(model, prep, V, stage.n_V, stage.n_total, cfg, 1.0);
      VolumeEstimate vol =
          estimate_volume(V, exp.c_star, model.state_vars, cfg.volume_method,
                          cfg.mc_samples_trace, cfg.seed);

      RoaIterationRecord rec;
      rec.stage = stage_idx;
      rec.iteration = it;
      rec.n_V = stage.n_V;
      rec.n_total = stage.n_total;
      rec.c_star = exp.c_star;
      rec.volume = vol.value;
      rec.solves = exp.solves;

      recent_volumes.push_back(vol.value);
      if (recent_volumes.size() > 4) recent_volumes.pop_front();
      if (recent_volumes.size() == 4) {
        bool small = true;
        for (size_t i = 1; i < recent_volumes.size(); ++i) {
          double prev = recent_volumes[i - 1];
          if (std::abs(recent_volumes[i] - prev) > cfg.converge_rel_tol * std::abs(prev))
            small = false;
        }
        if (small) converged = true;
      }

      if (!converged) {
        ReshapeResult resh =
            reshape_step(model, prep, V, exp.c_star, exp.multipliers, stage.n_V,
                         stage.n_total, cfg);
        rec.reshaped = resh.accepted;
        rec.reshape_c = resh.c_used;
        rec.solves += resh.solves;
        if (resh.accepted) {
          V = resh.V;
          out.positivity_cert = resh.cert;  // contains "positivity" block
        }
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.trace.push_back(rec);
      if (cfg.verbose) {
        std::fprintf(stderr, "[roa] stage %d it %d: c*=%.6g vol=%.6g solves=%d (%.1fs)%s\n",
                     stage_idx, it, rec.c_star, rec.volume, rec.solves, rec.seconds,
                     rec.reshaped ? "" : " [reshape stagnated]");
      }
    }
    if (converged) break;
  }

  // final certificate: expansion on the final V
  auto prep = roa_detail::prepare(model, cfg.constraints, last_nV, last_ntotal);
  ExpansionResult fin = expansion_step(model, prep, V, last_nV, last_ntotal, cfg, 1.0);
  out.V = V;
  out.c_level = fin.c_star;
  out.multipliers = fin.multipliers;
  out.expansion_cert = fin.cert;

  // positivity of the final V, checked directly
  SosCertificate pos = is_sos(V - lx, cfg.sos_tol);
  if (pos.ok()) out.positivity_cert = pos;

  out.volume = estimate_volume(V, fin.c_star, model.state_vars, cfg.volume_method,
                               cfg.mc_samples, cfg.seed);

  out.max_residual = std::max(out.expansion_cert.max_residual,
                              pos.ok() ? pos.max_residual : 1.0);
  out.sound = out.expansion_cert.ok() && pos.ok() &&
              out.max_residual <= cfg.sos_tol.residual_accept;
  if (!out.sound) {
    out.message = "certificate failed the independent residual gate";
    throw std::runtime_error("run_roa: " + out.message);
  }
  return out;
}

}  // namespace polycert

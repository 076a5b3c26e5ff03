#pragma once

// SOS feasibility programs and their reduction to PSD-cone conic problems.
//
// Decision objects are polynomials whose coefficients are affine expressions
// in a flat list of decision scalars. A scalar is either a free coefficient
// (of a free-polynomial decision variable or a named scalar) or an entry of
// the Gram matrix of an sos-kind decision variable. Constraints "expr in
// Sigma" get one fresh Gram block each; coefficient matching produces the
// equality rows of the conic problem.
//
// Certificates are re-validated independently of the solver: expand z^T Q z
// coefficient-wise and compare against the instantiated constraint
// polynomial (check_certificate).

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polycert/polynomial.hpp"
#include "polycert/sdp.hpp"

namespace polycert {

struct AffineExpr {
  double c0 = 0.0;
  std::vector<std::pair<int, double>> lin;  // sorted by scalar id

  AffineExpr() = default;
  AffineExpr(double c) : c0(c) {}
  AffineExpr(int c) : c0(c) {}

  static AffineExpr var(int id, double coeff = 1.0) {
    AffineExpr e;
    if (coeff != 0.0) e.lin.push_back({id, coeff});
    return e;
  }

  bool is_constant() const { return lin.empty(); }

  friend AffineExpr operator+(const AffineExpr& a, const AffineExpr& b) {
    AffineExpr out;
    out.c0 = a.c0 + b.c0;
    out.lin.reserve(a.lin.size() + b.lin.size());
    size_t i = 0, j = 0;
    while (i < a.lin.size() || j < b.lin.size()) {
      if (j >= b.lin.size() || (i < a.lin.size() && a.lin[i].first < b.lin[j].first)) {
        out.lin.push_back(a.lin[i++]);
      } else if (i >= a.lin.size() || b.lin[j].first < a.lin[i].first) {
        out.lin.push_back(b.lin[j++]);
      } else {
        double c = a.lin[i].second + b.lin[j].second;
        if (c != 0.0) out.lin.push_back({a.lin[i].first, c});
        ++i;
        ++j;
      }
    }
    return out;
  }

  friend AffineExpr operator*(const AffineExpr& a, const AffineExpr& b) {
    if (!a.lin.empty() && !b.lin.empty())
      throw std::invalid_argument("bilinear product of decision expressions");
    const AffineExpr& affine = a.lin.empty() ? b : a;
    double s = a.lin.empty() ? a.c0 : b.c0;
    AffineExpr out;
    out.c0 = affine.c0 * s;
    if (s != 0.0) {
      out.lin.reserve(affine.lin.size());
      for (const auto& [id, c] : affine.lin) out.lin.push_back({id, c * s});
    }
    return out;
  }
};

inline bool coeff_is_zero(const AffineExpr& e) { return e.c0 == 0.0 && e.lin.empty(); }

using AffPoly = BasicPolynomial<AffineExpr>;

inline AffPoly lift(const Polynomial& p) {
  AffPoly out(p.vars());
  for (const auto& [e, c] : p.terms()) out.add_term(e, AffineExpr(c));
  return out;
}

// Instantiate an affine polynomial at concrete decision-scalar values.
inline Polynomial instantiate(const AffPoly& p, const std::vector<double>& scalar_values) {
  Polynomial out(p.vars());
  for (const auto& [e, a] : p.terms()) {
    double v = a.c0;
    for (const auto& [id, c] : a.lin) v += c * scalar_values[static_cast<size_t>(id)];
    if (v != 0.0) out.add_term(e, v);
  }
  return out;
}

// Gram basis for a target support: monomials beta with 2*beta inside the
// exponent bounding box of the support and within graded degree bounds.
inline MonomialBasis newton_box_basis(const std::vector<std::string>& vars,
                                      const std::vector<Exponents>& support) {
  MonomialBasis out;
  out.vars = vars;
  if (support.empty()) return out;
  const size_t n = vars.size();
  Exponents lo(n, std::numeric_limits<int>::max()), hi(n, 0);
  int dlo = std::numeric_limits<int>::max(), dhi = 0;
  for (const auto& e : support) {
    for (size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], e[i]);
      hi[i] = std::max(hi[i], e[i]);
    }
    dlo = std::min(dlo, total_degree(e));
    dhi = std::max(dhi, total_degree(e));
  }
  MonomialBasis full = monomial_basis(vars, dhi / 2);
  for (const auto& b : full.monomials) {
    bool ok = total_degree(b) >= (dlo + 1) / 2 && total_degree(b) <= dhi / 2;
    for (size_t i = 0; ok && i < n; ++i) ok = 2 * b[i] >= lo[i] && 2 * b[i] <= hi[i];
    if (ok) out.monomials.push_back(b);
  }
  return out;
}

// p = z(x)^T Q z(x) expanded coefficient-wise.
inline Polynomial expand_gram(const MonomialBasis& basis, const Eigen::MatrixXd& Q) {
  Polynomial out(basis.vars);
  const size_t n = basis.size();
  for (size_t u = 0; u < n; ++u)
    for (size_t v = u; v < n; ++v) {
      double q = Q(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
      if (q == 0.0) continue;
      Exponents e(basis.vars.size());
      for (size_t i = 0; i < e.size(); ++i) e[i] = basis.monomials[u][i] + basis.monomials[v][i];
      out.add_term(e, (u == v ? 1.0 : 2.0) * q);
    }
  return out;
}

struct ResidualReport {
  double residual = 0.0;        // ||p - z^T Q z||_inf over coefficients
  double min_eigenvalue = 0.0;  // lambda_min(Q)
};

// Independent of the solver's own report: recomputes the expansion.
inline ResidualReport check_certificate(const Polynomial& p, const MonomialBasis& basis,
                                        const Eigen::MatrixXd& Q) {
  ResidualReport r;
  Polynomial diff = expand_gram(basis, Q) - p;
  r.residual = max_abs_coeff(diff);
  if (Q.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  return r;
}

struct SolverTolerances {
  sdp::Tolerances sdp;
  double residual_accept = 1e-6;  // post-hoc certificate acceptance
};

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------

enum class PolyVarKind { free_polynomial, sos_polynomial };

struct PolyDecisionVar {
  std::string name;
  std::vector<std::string> vars;
  int max_degree = 0;
  PolyVarKind kind = PolyVarKind::free_polynomial;
  bool vanish_at_origin = false;
  MonomialBasis basis;            // sos kind: Gram basis; free kind: coefficient support
  AffPoly poly;                   // symbolic value
  int gram_block = -1;            // sos kind: block index in the conic problem
  std::vector<int> scalar_ids;    // free kind: one per basis monomial
};

struct ScalarVarInfo {
  enum Kind { free_scalar, gram_entry } kind = free_scalar;
  int free_index = -1;  // position in the sdp free-variable vector
  int block = -1, bi = -1, bj = -1;
  std::string name;  // named scalars / provenance
};

struct SosConstraint {
  AffPoly expr;
  std::string label;
  bool equality = false;  // true: expr == 0 instead of expr in Sigma
};

struct ConicBlockInfo {
  std::string label;
  MonomialBasis basis;
  bool from_decision_var = false;
  int constraint_index = -1;  // for constraint blocks
};

struct ConicProblem {
  sdp::Problem sdp;
  std::vector<ConicBlockInfo> blocks;
  std::vector<ScalarVarInfo> scalars;            // global scalar id -> location
  std::vector<SosConstraint> constraints;        // for residual re-instantiation
  std::vector<PolyDecisionVar> decision_vars;
  std::map<std::string, int> named_scalars;      // name -> global scalar id
  bool maximize = false;
  int objective_scalar = -1;  // global scalar id
};

struct SosConstraintCert {
  std::string label;
  MonomialBasis basis;
  Eigen::MatrixXd gram;
  Polynomial target;
  double residual = 0.0;
  double min_eigenvalue = 0.0;
};

struct SosCertificate {
  sdp::Status status = sdp::Status::numerical_failure;
  bool decided = true;
  std::vector<SosConstraintCert> certs;
  std::map<std::string, Polynomial> decision_polys;
  std::map<std::string, double> scalar_values;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_residual = 0.0;
  double min_gram_eigenvalue = 0.0;
  int iterations = 0;
  std::string message;

  bool ok() const { return status == sdp::Status::optimal; }
};

class SosProgram {
 public:
  // Free polynomial decision variable: one scalar per monomial of total
  // degree in [min_degree, max_degree]. min_degree = 1 zeroes the constant
  // coefficient (vanish at origin); 2 additionally drops the gradient,
  // which any positive-definite-at-zero polynomial has to do anyway.
  const PolyDecisionVar& add_free_poly(const std::string& name,
                                       const std::vector<std::string>& vars, int max_degree,
                                       int min_degree = 0) {
    PolyDecisionVar d;
    d.name = name;
    d.vars = vars;
    d.max_degree = max_degree;
    d.kind = PolyVarKind::free_polynomial;
    d.vanish_at_origin = min_degree >= 1;
    d.basis = monomial_basis(vars, max_degree);
    d.poly = AffPoly(vars);
    for (const auto& m : d.basis.monomials) {
      if (total_degree(m) < min_degree) continue;
      int id = new_scalar({ScalarVarInfo::free_scalar, next_free_++, -1, -1, -1,
                           name + render_mono(vars, m)});
      d.scalar_ids.push_back(id);
      d.poly.add_term(m, AffineExpr::var(id));
    }
    vars_.push_back(std::move(d));
    return vars_.back();
  }

  // SOS polynomial decision variable, parameterized by its Gram matrix.
  // drop_constant removes the constant monomial from the Gram basis (use
  // when the value at the origin is structurally forced to zero; keeping
  // the basis element would pin every feasible Gram to the PSD boundary).
  const PolyDecisionVar& add_sos_poly(const std::string& name,
                                      const std::vector<std::string>& vars, int degree,
                                      bool drop_constant = false) {
    if (degree % 2 != 0) throw CompileError("sos decision variable needs even degree");
    PolyDecisionVar d;
    d.name = name;
    d.vars = vars;
    d.max_degree = degree;
    d.kind = PolyVarKind::sos_polynomial;
    d.basis = monomial_basis(vars, degree / 2);
    if (drop_constant && !d.basis.monomials.empty() &&
        total_degree(d.basis.monomials.front()) == 0)
      d.basis.monomials.erase(d.basis.monomials.begin());
    d.gram_block = next_block_++;
    d.poly = gram_poly(d.basis, d.gram_block, name);
    vars_.push_back(std::move(d));
    return vars_.back();
  }

  AffineExpr add_scalar(const std::string& name, std::optional<double> lower = {},
                        std::optional<double> upper = {}) {
    int id = new_scalar({ScalarVarInfo::free_scalar, next_free_++, -1, -1, -1, name});
    named_scalars_[name] = id;
    if (lower) scalar_bounds_.push_back({id, *lower, true});
    if (upper) scalar_bounds_.push_back({id, *upper, false});
    return AffineExpr::var(id);
  }

  void require_sos(AffPoly expr, std::string label) {
    constraints_.push_back({std::move(expr), std::move(label), false});
  }
  void require_zero(AffPoly expr, std::string label) {
    constraints_.push_back({std::move(expr), std::move(label), true});
  }
  void require_affine_zero(AffineExpr e, std::string label) {
    AffPoly p(std::vector<std::string>{});
    p.add_term(Exponents{}, std::move(e));
    require_zero(std::move(p), std::move(label));
  }

  void maximize(const std::string& scalar_name) { set_objective(scalar_name, true); }
  void minimize(const std::string& scalar_name) { set_objective(scalar_name, false); }

  const std::vector<PolyDecisionVar>& decision_vars() const { return vars_; }

  ConicProblem compile() const {
    ConicProblem cp;
    cp.scalars = scalars_;
    cp.decision_vars = vars_;
    cp.constraints = constraints_;
    cp.named_scalars = named_scalars_;
    cp.maximize = maximize_;
    cp.objective_scalar = objective_scalar_;
    cp.sdp.num_free = next_free_;

    // decision Gram blocks first, in declaration order
    cp.blocks.resize(static_cast<size_t>(next_block_));
    for (const auto& d : vars_)
      if (d.kind == PolyVarKind::sos_polynomial) {
        while (cp.sdp.block_sizes.size() <= static_cast<size_t>(d.gram_block))
          cp.sdp.add_block(0);
        cp.sdp.block_sizes[static_cast<size_t>(d.gram_block)] =
            static_cast<int>(d.basis.size());
        cp.blocks[static_cast<size_t>(d.gram_block)] = {d.name, d.basis, true, -1};
      }

    for (size_t ci = 0; ci < constraints_.size(); ++ci) {
      const SosConstraint& c = constraints_[ci];
      compile_constraint(cp, c, static_cast<int>(ci));
    }

    // scalar bounds: v >= lo  =>  v - s = lo with 1x1 slack block s
    for (const auto& [id, bound, is_lower] : scalar_bounds_) {
      int blk = cp.sdp.add_block(1);
      cp.blocks.push_back({"bound:" + scalars_[static_cast<size_t>(id)].name,
                           MonomialBasis{{}, {Exponents{}}}, false, -1});
      int row = cp.sdp.add_row(is_lower ? -bound : bound);
      cp.sdp.add_block_entry(row, blk, 0, 0, 1.0);
      cp.sdp.add_free_coeff(row, scalars_[static_cast<size_t>(id)].free_index,
                            is_lower ? -1.0 : 1.0);
    }

    if (objective_scalar_ >= 0) {
      cp.sdp.objective.assign(static_cast<size_t>(next_free_), 0.0);
      int fi = scalars_[static_cast<size_t>(objective_scalar_)].free_index;
      cp.sdp.objective[static_cast<size_t>(fi)] = maximize_ ? -1.0 : 1.0;
    }
    return cp;
  }

 private:
  AffPoly gram_poly(const MonomialBasis& basis, int block, const std::string& name) {
    AffPoly p(basis.vars);
    const size_t n = basis.size();
    for (size_t u = 0; u < n; ++u)
      for (size_t v = u; v < n; ++v) {
        int id = new_scalar({ScalarVarInfo::gram_entry, -1, block, static_cast<int>(u),
                             static_cast<int>(v), name});
        Exponents e(basis.vars.size());
        for (size_t i = 0; i < e.size(); ++i)
          e[i] = basis.monomials[u][i] + basis.monomials[v][i];
        p.add_term(e, AffineExpr::var(id, u == v ? 1.0 : 2.0));
      }
    return p;
  }

  void compile_constraint(ConicProblem& cp, const SosConstraint& c, int ci) const {
    std::vector<Exponents> support;
    for (const auto& [e, a] : c.expr.terms()) support.push_back(e);

    std::set<Exponents, GradedLexLess> rows_set(support.begin(), support.end());
    int blk = -1;
    MonomialBasis basis;
    std::map<Exponents, std::vector<std::pair<size_t, size_t>>, GradedLexLess> products;
    if (!c.equality) {
      basis = newton_box_basis(c.expr.vars(), support);
      if (basis.size() == 0 && !support.empty())
        throw CompileError("constraint '" + c.label +
                           "' admits no Gram basis (degree inconsistency)");
      blk = cp.sdp.add_block(static_cast<int>(basis.size()));
      cp.blocks.push_back({c.label, basis, false, ci});
      for (size_t u = 0; u < basis.size(); ++u)
        for (size_t v = u; v < basis.size(); ++v) {
          Exponents e(basis.vars.size());
          for (size_t i = 0; i < e.size(); ++i)
            e[i] = basis.monomials[u][i] + basis.monomials[v][i];
          products[e].push_back({u, v});
          rows_set.insert(e);
        }
    }

    for (const Exponents& alpha : rows_set) {
      AffineExpr ea;  // E_alpha
      auto it = c.expr.terms().find(alpha);
      if (it != c.expr.terms().end()) ea = it->second;
      bool has_products = !c.equality && products.count(alpha) > 0;
      if (!has_products && ea.lin.empty()) {
        if (ea.c0 == 0.0) continue;
        if (c.equality)
          throw CompileError("equality constraint '" + c.label +
                             "' has unsatisfiable constant term");
        throw CompileError("constraint '" + c.label + "' monomial " +
                           render_mono(c.expr.vars(), alpha) +
                           " not representable by any Gram product (degree inconsistency)");
      }
      int row = cp.sdp.add_row(ea.c0);
      if (has_products)
        for (auto [u, v] : products[alpha])
          cp.sdp.add_block_var_coeff(row, blk, static_cast<int>(u), static_cast<int>(v),
                                     u == v ? 1.0 : 2.0);
      for (const auto& [id, w] : ea.lin) {
        const ScalarVarInfo& s = scalars_[static_cast<size_t>(id)];
        if (s.kind == ScalarVarInfo::free_scalar)
          cp.sdp.add_free_coeff(row, s.free_index, -w);
        else
          cp.sdp.add_block_var_coeff(row, s.block, s.bi, s.bj, -w);
      }
    }
  }

  void set_objective(const std::string& name, bool maximize) {
    auto it = named_scalars_.find(name);
    if (it == named_scalars_.end()) throw CompileError("unknown scalar: " + name);
    objective_scalar_ = it->second;
    maximize_ = maximize;
  }

  int new_scalar(ScalarVarInfo info) {
    scalars_.push_back(std::move(info));
    return static_cast<int>(scalars_.size()) - 1;
  }

  static std::string render_mono(const std::vector<std::string>& vars, const Exponents& e) {
    std::string s = "[";
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      s += vars[i];
      if (e[i] > 1) s += "^" + std::to_string(e[i]);
      s += " ";
    }
    return s + "]";
  }

  std::vector<PolyDecisionVar> vars_;
  std::vector<ScalarVarInfo> scalars_;
  std::vector<SosConstraint> constraints_;
  std::vector<std::tuple<int, double, bool>> scalar_bounds_;
  std::map<std::string, int> named_scalars_;
  int next_free_ = 0;
  int next_block_ = 0;
  bool maximize_ = false;
  int objective_scalar_ = -1;

  friend class SosProgramTestPeek;
};

inline std::vector<double> resolve_scalars(const ConicProblem& cp, const sdp::Solution& sol) {
  std::vector<double> vals(cp.scalars.size(), 0.0);
  for (size_t i = 0; i < cp.scalars.size(); ++i) {
    const auto& s = cp.scalars[i];
    if (s.kind == ScalarVarInfo::free_scalar) {
      vals[i] = sol.free_values[static_cast<size_t>(s.free_index)];
    } else {
      vals[i] = sol.blocks[static_cast<size_t>(s.block)](s.bi, s.bj);
    }
  }
  return vals;
}

inline SosCertificate solve(const ConicProblem& cp, const SolverTolerances& tol = {}) {
  SosCertificate cert;
  sdp::Solution sol = cp.objective_scalar >= 0 ? sdp::solve(cp.sdp, tol.sdp)
                                               : sdp::solve_feasibility(cp.sdp, tol.sdp);
  cert.status = sol.status;
  cert.decided = sol.decided;
  cert.iterations = sol.iterations;
  cert.message = sol.message;
  if (sol.status != sdp::Status::optimal) return cert;

  std::vector<double> vals = resolve_scalars(cp, sol);

  for (const auto& d : cp.decision_vars) {
    cert.decision_polys[d.name] = instantiate(d.poly, vals);
  }
  for (const auto& [name, id] : cp.named_scalars)
    cert.scalar_values[name] = vals[static_cast<size_t>(id)];
  if (cp.objective_scalar >= 0)
    cert.objective = vals[static_cast<size_t>(cp.objective_scalar)];

  cert.min_gram_eigenvalue = std::numeric_limits<double>::infinity();
  for (size_t bi = 0; bi < cp.blocks.size(); ++bi) {
    const auto& info = cp.blocks[bi];
    if (info.basis.size() == 0 && info.constraint_index < 0 && !info.from_decision_var)
      continue;  // bound slacks
    SosConstraintCert cc;
    cc.label = info.label;
    cc.basis = info.basis;
    cc.gram = sol.blocks[bi];
    if (info.constraint_index >= 0) {
      cc.target =
          instantiate(cp.constraints[static_cast<size_t>(info.constraint_index)].expr, vals);
    } else if (info.from_decision_var) {
      cc.target = expand_gram(info.basis, cc.gram);
    } else {
      continue;  // scalar bound slack block
    }
    ResidualReport rr = check_certificate(cc.target, cc.basis, cc.gram);
    cc.residual = rr.residual;
    cc.min_eigenvalue = rr.min_eigenvalue;
    cert.max_residual = std::max(cert.max_residual, cc.residual);
    cert.min_gram_eigenvalue = std::min(cert.min_gram_eigenvalue, cc.min_eigenvalue);
    cert.certs.push_back(std::move(cc));
  }
  if (!std::isfinite(cert.min_gram_eigenvalue)) cert.min_gram_eigenvalue = 0.0;

  // equality constraints: check residual of instantiated expression
  for (const auto& c : cp.constraints) {
    if (!c.equality) continue;
    Polynomial inst = instantiate(c.expr, vals);
    cert.max_residual = std::max(cert.max_residual, max_abs_coeff(inst));
  }

  if (cert.max_residual > tol.residual_accept ||
      cert.min_gram_eigenvalue < -tol.residual_accept) {
    cert.status = sdp::Status::numerical_failure;
    cert.message = "certificate rejected by independent residual check";
  }
  return cert;
}

// Convenience: single-polynomial SOS membership test. A compile-time degree
// inconsistency (no representable Gram product for a constant term) proves
// non-membership and is reported as infeasible.
inline SosCertificate is_sos(const Polynomial& p, const SolverTolerances& tol = {}) {
  SosProgram prog;
  prog.require_sos(lift(p), "p");
  try {
    return solve(prog.compile(), tol);
  } catch (const CompileError& e) {
    SosCertificate cert;
    cert.status = sdp::Status::infeasible;
    cert.message = e.what();
    return cert;
  }
}

}  // namespace polycert

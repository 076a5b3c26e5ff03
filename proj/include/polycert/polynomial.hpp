#pragma once

// Sparse multivariate polynomials over a fixed, named variable ordering.
// Terms are kept in graded-lex order (total degree, then lexicographic with
// earlier variables ranked higher), which fixes monomial bases and renders
// deterministically. Coefficients are double; exact arithmetic claims apply
// to integer-representable inputs. The coefficient type is a template
// parameter so the SOS layer can reuse the same arithmetic with affine
// expressions in decision variables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polycert {

using Exponents = std::vector<int>;

inline int total_degree(const Exponents& e) {
  return std::accumulate(e.begin(), e.end(), 0);
}

// Graded lexicographic order: lower total degree first; within a degree,
// higher power on earlier variables first (1, x, y, x^2, xy, y^2, ...).
struct GradedLexLess {
  bool operator()(const Exponents& a, const Exponents& b) const {
    const int da = total_degree(a);
    const int db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

namespace detail {

inline bool coeff_is_zero(double c) { return c == 0.0; }

inline double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace detail

template <typename Coeff>
class BasicPolynomial {
 public:
  using TermMap = std::map<Exponents, Coeff, GradedLexLess>;

  BasicPolynomial() = default;
  explicit BasicPolynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static BasicPolynomial constant(Coeff c, std::vector<std::string> vars = {}) {
    BasicPolynomial p(std::move(vars));
    p.add_term(Exponents(p.vars_.size(), 0), std::move(c));
    return p;
  }

  static BasicPolynomial variable(const std::string& name,
                                  std::vector<std::string> vars) {
    BasicPolynomial p(std::move(vars));
    auto it = std::find(p.vars_.begin(), p.vars_.end(), name);
    if (it == p.vars_.end()) throw std::invalid_argument("unknown variable: " + name);
    Exponents e(p.vars_.size(), 0);
    e[static_cast<size_t>(it - p.vars_.begin())] = 1;
    p.add_term(std::move(e), Coeff(1));
    return p;
  }

  const std::vector<std::string>& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  size_t nvars() const { return vars_.size(); }
  bool is_zero() const { return terms_.empty(); }

  // Zero polynomial has degree 0 by convention.
  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  int degree_in(size_t var_index) const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var_index]);
    return d;
  }

  Coeff coeff(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Coeff(0) : it->second;
  }

  void add_term(const Exponents& e, const Coeff& c) {
    if (e.size() != vars_.size()) throw std::invalid_argument("exponent arity mismatch");
    for (int k : e)
      if (k < 0) throw std::invalid_argument("negative exponent");
    accumulate(e, c);
  }

  // Re-embed into a (super)set ordering of variables.
  BasicPolynomial with_vars(const std::vector<std::string>& new_vars) const {
    std::vector<int> pos(vars_.size());
    for (size_t i = 0; i < vars_.size(); ++i) {
      auto it = std::find(new_vars.begin(), new_vars.end(), vars_[i]);
      if (it == new_vars.end())
        throw std::invalid_argument("with_vars: missing variable " + vars_[i]);
      pos[i] = static_cast<int>(it - new_vars.begin());
    }
    BasicPolynomial out(new_vars);
    for (const auto& [e, c] : terms_) {
      Exponents ne(new_vars.size(), 0);
      for (size_t i = 0; i < e.size(); ++i) ne[static_cast<size_t>(pos[i])] = e[i];
      out.terms_.emplace(std::move(ne), c);
    }
    return out;
  }

  friend BasicPolynomial operator+(const BasicPolynomial& a, const BasicPolynomial& b) {
    auto [pa, pb] = aligned(a, b);
    for (const auto& [e, c] : pb.terms_) pa.accumulate(e, c);
    return pa;
  }

  friend BasicPolynomial operator-(const BasicPolynomial& a, const BasicPolynomial& b) {
    auto [pa, pb] = aligned(a, b);
    for (const auto& [e, c] : pb.terms_) pa.accumulate(e, Coeff(-1) * c);
    return pa;
  }

  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    auto [pa, pb] = aligned(a, b);
    BasicPolynomial out(pa.vars_);
    for (const auto& [ea, ca] : pa.terms_) {
      for (const auto& [eb, cb] : pb.terms_) {
        Exponents e(ea.size());
        for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        out.accumulate(e, ca * cb);
      }
    }
    return out;
  }

  BasicPolynomial operator-() const {
    BasicPolynomial out(vars_);
    for (const auto& [e, c] : terms_) out.terms_.emplace(e, Coeff(-1) * c);
    return out;
  }

  friend BasicPolynomial operator*(const Coeff& s, const BasicPolynomial& p) {
    BasicPolynomial out(p.vars_);
    for (const auto& [e, c] : p.terms_) out.accumulate(e, s * c);
    return out;
  }
  friend BasicPolynomial operator*(const BasicPolynomial& p, const Coeff& s) { return s * p; }

  BasicPolynomial pow(int k) const {
    if (k < 0) throw std::invalid_argument("negative power");
    BasicPolynomial r = constant(Coeff(1), vars_);
    for (int i = 0; i < k; ++i) r = r * (*this);
    return r;
  }

  bool operator==(const BasicPolynomial& b) const {
    auto [pa, pb] = aligned(*this, b);
    return pa.terms_ == pb.terms_;
  }

 private:
  static bool coeff_is_zero_adl(const Coeff& c) {
    using detail::coeff_is_zero;
    return coeff_is_zero(c);
  }

  void accumulate(const Exponents& e, const Coeff& c) {
    if (coeff_is_zero_adl(c)) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
    } else {
      it->second = it->second + c;
      if (coeff_is_zero_adl(it->second)) terms_.erase(it);
    }
  }

  static std::pair<BasicPolynomial, BasicPolynomial> aligned(const BasicPolynomial& a,
                                                             const BasicPolynomial& b) {
    if (a.vars_ == b.vars_) return {a, b};
    std::vector<std::string> u = a.vars_;
    for (const auto& v : b.vars_)
      if (std::find(u.begin(), u.end(), v) == u.end()) u.push_back(v);
    return {a.with_vars(u), b.with_vars(u)};
  }

  std::vector<std::string> vars_;
  TermMap terms_;

  template <typename C>
  friend class BasicPolynomial;
};

using Polynomial = BasicPolynomial<double>;

inline double evaluate(const Polynomial& p, std::span<const double> point) {
  if (point.size() != p.nvars())
    throw std::invalid_argument("evaluate: point dimension mismatch");
  double sum = 0.0;
  for (const auto& [e, c] : p.terms()) {
    double m = c;
    for (size_t i = 0; i < e.size(); ++i) m *= detail::ipow(point[i], e[i]);
    sum += m;
  }
  return sum;
}

inline double evaluate(const Polynomial& p, std::initializer_list<double> point) {
  return evaluate(p, std::span<const double>(point.begin(), point.size()));
}

template <typename Coeff>
BasicPolynomial<Coeff> differentiate(const BasicPolynomial<Coeff>& p, size_t var_index) {
  if (var_index >= p.nvars()) throw std::invalid_argument("differentiate: bad index");
  BasicPolynomial<Coeff> out(p.vars());
  for (const auto& [e, c] : p.terms()) {
    if (e[var_index] == 0) continue;
    Exponents ne = e;
    ne[var_index] -= 1;
    out.add_term(std::move(ne), c * Coeff(e[var_index]));
  }
  return out;
}

template <typename Coeff>
std::vector<BasicPolynomial<Coeff>> gradient(const BasicPolynomial<Coeff>& p) {
  std::vector<BasicPolynomial<Coeff>> g;
  g.reserve(p.nvars());
  for (size_t i = 0; i < p.nvars(); ++i) g.push_back(differentiate(p, i));
  return g;
}

// Substitute polynomials for variables; unbound variables pass through.
template <typename Coeff>
BasicPolynomial<Coeff> substitute(
    const BasicPolynomial<Coeff>& p,
    const std::map<std::string, BasicPolynomial<Coeff>>& bindings) {
  for (const auto& [name, q] : bindings)
    if (std::find(p.vars().begin(), p.vars().end(), name) == p.vars().end())
      throw std::invalid_argument("substitute: variable not in polynomial: " + name);

  // Target variable set: unbound vars of p, then vars introduced by bindings.
  std::vector<std::string> out_vars;
  for (const auto& v : p.vars())
    if (!bindings.count(v)) out_vars.push_back(v);
  for (const auto& [name, q] : bindings)
    for (const auto& v : q.vars())
      if (std::find(out_vars.begin(), out_vars.end(), v) == out_vars.end())
        out_vars.push_back(v);

  BasicPolynomial<Coeff> result(out_vars);
  for (const auto& [e, c] : p.terms()) {
    BasicPolynomial<Coeff> term = BasicPolynomial<Coeff>::constant(c, out_vars);
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      const std::string& v = p.vars()[i];
      auto it = bindings.find(v);
      BasicPolynomial<Coeff> base =
          it != bindings.end() ? it->second.with_vars(out_vars)
                               : BasicPolynomial<Coeff>::variable(v, out_vars);
      term = term * base.pow(e[i]);
    }
    result = result + term;
  }
  return result;
}

inline double max_abs_coeff(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

inline double coeff_norm2(const Polynomial& p) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms()) s += c * c;
  return std::sqrt(s);
}

// Drop terms with |coeff| <= eps (numerical cleanup after float arithmetic).
inline Polynomial truncated(const Polynomial& p, double eps) {
  Polynomial out(p.vars());
  for (const auto& [e, c] : p.terms())
    if (std::abs(c) > eps) out.add_term(e, c);
  return out;
}

inline bool approx_equal(const Polynomial& a, const Polynomial& b, double tol) {
  Polynomial d = a - b;
  return max_abs_coeff(d) <= tol;
}

struct MonomialBasis {
  std::vector<std::string> vars;
  std::vector<Exponents> monomials;  // distinct, graded-lex sorted

  size_t size() const { return monomials.size(); }
};

namespace detail {

inline void enumerate_monomials(size_t var, int remaining, Exponents& cur,
                                std::vector<Exponents>& out) {
  if (var + 1 == cur.size()) {
    for (int k = 0; k <= remaining; ++k) {
      cur[var] = k;
      out.push_back(cur);
    }
    cur[var] = 0;
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    cur[var] = k;
    enumerate_monomials(var + 1, remaining - k, cur, out);
  }
  cur[var] = 0;
}

}  // namespace detail

// All monomials of total degree <= max_degree, graded-lex ordered.
inline MonomialBasis monomial_basis(std::vector<std::string> vars, int max_degree) {
  if (max_degree < 0) throw std::invalid_argument("monomial_basis: negative degree");
  MonomialBasis b;
  b.vars = std::move(vars);
  if (b.vars.empty()) {
    b.monomials.push_back({});
    return b;
  }
  Exponents cur(b.vars.size(), 0);
  detail::enumerate_monomials(0, max_degree, cur, b.monomials);
  std::sort(b.monomials.begin(), b.monomials.end(), GradedLexLess{});
  return b;
}

}  // namespace polycert

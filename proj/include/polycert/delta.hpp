#pragma once

// Scalar nonlinearities that get abstracted by polynomial constraints:
// a closed-form tag, an evaluator, an optional derivative, a domain
// interval, and metadata (fixed point at zero, L-infinity gain where
// analytically known).

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polycert {

struct DeltaOperator {
  enum class Tag { tanh, tanh_minus_identity, exp_minus_affine, identity, custom };

  Tag tag = Tag::custom;
  std::function<double(double)> eval;
  std::function<double(double)> deriv;  // empty -> callers fall back to central differences
  double lo = -1.0, hi = 1.0;           // domain interval
  std::optional<double> linf_gain;
  bool fixed_point_at_zero = true;
  std::string name = "custom";

  double derivative(double x) const {
    if (deriv) return deriv(x);
    const double h = 1e-6;
    return (eval(x + h) - eval(x - h)) / (2 * h);
  }

  DeltaOperator with_domain(double a, double b) const {
    DeltaOperator d = *this;
    d.lo = a;
    d.hi = b;
    return d;
  }
};

inline DeltaOperator make_delta(DeltaOperator::Tag tag, double lo = -5.0, double hi = 5.0) {
  DeltaOperator d;
  d.tag = tag;
  d.lo = lo;
  d.hi = hi;
  switch (tag) {
    case DeltaOperator::Tag::tanh:
      d.eval = [](double x) { return std::tanh(x); };
      d.deriv = [](double x) {
        double t = std::tanh(x);
        return 1.0 - t * t;
      };
      d.linf_gain = 1.0;
      d.name = "tanh";
      break;
    case DeltaOperator::Tag::tanh_minus_identity:
      d.eval = [](double x) { return std::tanh(x) - x; };
      d.deriv = [](double x) {
        double t = std::tanh(x);
        return -t * t;
      };
      d.linf_gain = 1.0;
      d.name = "tanh_minus_identity";
      break;
    case DeltaOperator::Tag::exp_minus_affine:
      d.eval = [](double x) { return std::exp(x) - x - 1.0; };
      d.deriv = [](double x) { return std::exp(x) - 1.0; };
      d.name = "exp_minus_affine";
      break;
    case DeltaOperator::Tag::identity:
      d.eval = [](double x) { return x; };
      d.deriv = [](double) { return 1.0; };
      d.linf_gain = 1.0;
      d.name = "identity";
      break;
    case DeltaOperator::Tag::custom:
      throw std::invalid_argument("custom delta needs an explicit evaluator");
  }
  return d;
}

inline DeltaOperator delta_from_name(const std::string& name, double lo = -5.0,
                                     double hi = 5.0) {
  if (name == "tanh") return make_delta(DeltaOperator::Tag::tanh, lo, hi);
  if (name == "tanh_minus_identity")
    return make_delta(DeltaOperator::Tag::tanh_minus_identity, lo, hi);
  if (name == "exp_minus_affine")
    return make_delta(DeltaOperator::Tag::exp_minus_affine, lo, hi);
  if (name == "identity") return make_delta(DeltaOperator::Tag::identity, lo, hi);
  throw std::invalid_argument("unknown delta tag: " + name);
}

// Maclaurin coefficients, degrees 0..max_degree (max 15).
inline std::vector<double> taylor_coefficients(DeltaOperator::Tag tag, int max_degree) {
  if (max_degree < 0 || max_degree > 15)
    throw std::invalid_argument("taylor_coefficients: degree must be in [0,15]");
  std::vector<double> c(static_cast<size_t>(max_degree) + 1, 0.0);
  auto set = [&](int k, double v) {
    if (k <= max_degree) c[static_cast<size_t>(k)] = v;
  };
  switch (tag) {
    case DeltaOperator::Tag::tanh:
    case DeltaOperator::Tag::tanh_minus_identity:
      set(1, 1.0);
      set(3, -1.0 / 3.0);
      set(5, 2.0 / 15.0);
      set(7, -17.0 / 315.0);
      set(9, 62.0 / 2835.0);
      set(11, -1382.0 / 155925.0);
      set(13, 21844.0 / 6081075.0);
      set(15, -929569.0 / 638512875.0);
      if (tag == DeltaOperator::Tag::tanh_minus_identity) c[1] -= 1.0;
      break;
    case DeltaOperator::Tag::exp_minus_affine: {
      double fact = 1.0;
      for (int k = 0; k <= max_degree; ++k) {
        if (k > 0) fact *= k;
        c[static_cast<size_t>(k)] = 1.0 / fact;
      }
      c[0] -= 1.0;
      if (max_degree >= 1) c[1] -= 1.0;
      break;
    }
    case DeltaOperator::Tag::identity:
      set(1, 1.0);
      break;
    case DeltaOperator::Tag::custom:
      throw std::invalid_argument("no builtin series for custom delta");
  }
  return c;
}

// arctanh series: x + x^3/3 + x^5/5 + ...
inline std::vector<double> arctanh_coefficients(int max_degree) {
  if (max_degree < 0 || max_degree > 15)
    throw std::invalid_argument("arctanh_coefficients: degree must be in [0,15]");
  std::vector<double> c(static_cast<size_t>(max_degree) + 1, 0.0);
  for (int k = 1; k <= max_degree; k += 2) c[static_cast<size_t>(k)] = 1.0 / k;
  return c;
}

}  // namespace polycert

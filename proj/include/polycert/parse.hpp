#pragma once

// Text grammar for polynomial I/O, used by config files and the CLI.
//
//   expr    := [+|-] term ((+|-) term)*
//   term    := coeff ('*' varpow)* | varpow ('*' varpow)*
//   varpow  := name ['^' uint]
//   coeff   := decimal floating literal
//
// Whitespace insensitive. Variables must come from the caller-supplied
// ordered list. render() emits coefficients at 17 significant digits so
// parse(render(p)) == p exactly.

#include <charconv>
#include <cctype>
#include <cstdio>
#include <string>
#include <vector>

#include "polycert/polynomial.hpp"

namespace polycert {

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t offset, const std::string& what)
      : std::runtime_error("parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

namespace detail {

struct PolyLexer {
  std::string_view s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool accept(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
};

}  // namespace detail

inline Polynomial parse_polynomial(std::string_view text,
                                   const std::vector<std::string>& vars) {
  detail::PolyLexer lx{text};
  Polynomial out(vars);
  if (lx.eof()) throw ParseError(lx.pos, "empty polynomial");

  auto parse_name = [&]() -> std::string {
    lx.skip_ws();
    size_t start = lx.pos;
    if (start >= lx.s.size() ||
        !(std::isalpha(static_cast<unsigned char>(lx.s[start])) || lx.s[start] == '_'))
      throw ParseError(start, "expected variable name");
    size_t end = start + 1;
    while (end < lx.s.size() &&
           (std::isalnum(static_cast<unsigned char>(lx.s[end])) || lx.s[end] == '_'))
      ++end;
    lx.pos = end;
    return std::string(lx.s.substr(start, end - start));
  };

  auto parse_uint = [&]() -> int {
    lx.skip_ws();
    size_t start = lx.pos;
    int value = 0;
    auto res = std::from_chars(lx.s.data() + start, lx.s.data() + lx.s.size(), value);
    if (res.ec != std::errc{} || value < 0) throw ParseError(start, "expected exponent");
    lx.pos = static_cast<size_t>(res.ptr - lx.s.data());
    return value;
  };

  auto parse_coeff = [&](bool& found) -> double {
    lx.skip_ws();
    size_t start = lx.pos;
    double value = 0.0;
    auto res = std::from_chars(lx.s.data() + start, lx.s.data() + lx.s.size(), value);
    if (res.ec != std::errc{} || res.ptr == lx.s.data() + start) {
      found = false;
      return 1.0;
    }
    found = true;
    lx.pos = static_cast<size_t>(res.ptr - lx.s.data());
    return value;
  };

  bool first = true;
  while (!lx.eof()) {
    double sign = 1.0;
    if (lx.accept('+')) {
      sign = 1.0;
    } else if (lx.accept('-')) {
      sign = -1.0;
    } else if (!first) {
      throw ParseError(lx.pos, "expected '+' or '-' between terms");
    }
    first = false;

    bool have_coeff = false;
    double coeff = parse_coeff(have_coeff);
    Exponents e(vars.size(), 0);
    bool have_var = false;

    bool expect_factor = false;
    if (have_coeff) {
      expect_factor = lx.accept('*');
      if (have_coeff && !expect_factor && std::isalpha(static_cast<unsigned char>(lx.peek())))
        throw ParseError(lx.pos, "expected '*' before variable");
    }
    while (expect_factor || (!have_coeff && !have_var)) {
      size_t name_pos = lx.pos;
      std::string name = parse_name();
      auto it = std::find(vars.begin(), vars.end(), name);
      if (it == vars.end()) throw ParseError(name_pos, "unknown variable: " + name);
      int k = 1;
      if (lx.accept('^')) k = parse_uint();
      e[static_cast<size_t>(it - vars.begin())] += k;
      have_var = true;
      expect_factor = lx.accept('*');
    }
    out.add_term(e, sign * coeff);
  }
  return out;
}

inline std::string render(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  char buf[64];
  // Highest-degree terms first.
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [e, c] = *it;
    if (out.empty()) {
      out += (c < 0) ? "-" : "";
    } else {
      out += (c < 0) ? " - " : " + ";
    }
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
    out += buf;
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      out += "*" + p.vars()[i];
      if (e[i] > 1) out += "^" + std::to_string(e[i]);
    }
  }
  return out;
}

}  // namespace polycert

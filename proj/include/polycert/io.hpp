#pragma once

// JSON schemas and file plumbing shared by the CLI and tests.
//
// Polynomial:  {"vars": [...], "coefficients": [{"exponents": [...],
//              "value": c}, ...]}
// Constraint:  {"vars", "coefficients", "validity": [Polynomial...],
//              "provenance", "interval", "name"}
// Conic debug: {"blocks": [{"size", "label"}...],
//              "eq_rows": [{"entries": [[block,i,j,a]...],
//                           "free": [[var,c]...], "rhs": b}...],
//              "objective": {"free": [...], "maximize": bool}}
//
// Writes are atomic (temp file + rename). Config digests are FNV-1a 64 over
// the raw config bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "polycert/constraints.hpp"
#include "polycert/roa.hpp"
#include "polycert/sos.hpp"

namespace polycert {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json polynomial_to_json(const Polynomial& p) {
  Json j;
  j["vars"] = p.vars();
  Json coeffs = Json::array();
  for (const auto& [e, c] : p.terms()) {
    Json term;
    term["exponents"] = e;
    term["value"] = c;
    coeffs.push_back(term);
  }
  j["coefficients"] = coeffs;
  return j;
}

inline Polynomial polynomial_from_json(const Json& j) {
  if (!j.contains("vars") || !j.contains("coefficients"))
    throw ConfigError("polynomial JSON needs 'vars' and 'coefficients'");
  Polynomial p(j["vars"].get<std::vector<std::string>>());
  for (const auto& term : j["coefficients"]) {
    p.add_term(term["exponents"].get<Exponents>(), term["value"].get<double>());
  }
  return p;
}

inline Json constraint_to_json(const PolynomialConstraint& c) {
  Json j = polynomial_to_json(c.p);
  Json validity = Json::array();
  for (const auto& q : c.validity) validity.push_back(polynomial_to_json(q));
  j["validity"] = validity;
  j["provenance"] = to_string(c.provenance);
  if (c.interval) j["interval"] = {c.interval->first, c.interval->second};
  j["name"] = c.name;
  return j;
}

inline PolynomialConstraint constraint_from_json(const Json& j) {
  PolynomialConstraint c;
  c.p = polynomial_from_json(j);
  if (j.contains("validity"))
    for (const auto& q : j["validity"]) c.validity.push_back(polynomial_from_json(q));
  if (j.contains("interval"))
    c.interval = {{j["interval"][0].get<double>(), j["interval"][1].get<double>()}};
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  std::string prov = j.value("provenance", "hand");
  using P = PolynomialConstraint::Provenance;
  if (prov == "taylor") c.provenance = P::taylor;
  else if (prov == "pade") c.provenance = P::pade;
  else if (prov == "sector") c.provenance = P::sector;
  else if (prov == "synthesized") c.provenance = P::synthesized;
  else if (prov == "transformed") c.provenance = P::transformed;
  else c.provenance = P::hand;
  return c;
}

inline Json certificate_to_json(const RoaCertificate& cert) {
  Json j;
  j["V"] = polynomial_to_json(cert.V);
  j["c_level"] = cert.c_level;
  Json mult;
  for (const auto& [name, p] : cert.multipliers) mult[name] = polynomial_to_json(p);
  j["multipliers"] = mult;
  j["volume"] = {{"value", cert.volume.value},
                 {"std_error", cert.volume.std_error},
                 {"method", cert.volume.method}};
  Json trace = Json::array();
  for (const auto& r : cert.trace) {
    trace.push_back({{"stage", r.stage},
                     {"iteration", r.iteration},
                     {"n_V", r.n_V},
                     {"n_total", r.n_total},
                     {"c_star", r.c_star},
                     {"volume", r.volume},
                     {"reshaped", r.reshaped},
                     {"reshape_c", r.reshape_c},
                     {"solves", r.solves},
                     {"seconds", r.seconds}});
  }
  j["trace"] = trace;
  j["sound"] = cert.sound;
  j["max_residual"] = cert.max_residual;
  return j;
}

inline Json conic_debug_json(const ConicProblem& cp) {
  Json j;
  Json blocks = Json::array();
  for (size_t k = 0; k < cp.sdp.block_sizes.size(); ++k) {
    Json b;
    b["size"] = cp.sdp.block_sizes[k];
    b["label"] = k < cp.blocks.size() ? cp.blocks[k].label : "";
    blocks.push_back(b);
  }
  j["blocks"] = blocks;
  Json rows = Json::array();
  for (int r = 0; r < cp.sdp.num_rows(); ++r) {
    Json row;
    row["entries"] = Json::array();
    row["free"] = Json::array();
    row["rhs"] = cp.sdp.rhs[static_cast<size_t>(r)];
    rows.push_back(row);
  }
  for (size_t k = 0; k < cp.sdp.block_entries.size(); ++k)
    for (const auto& e : cp.sdp.block_entries[k])
      rows[static_cast<size_t>(e.row)]["entries"].push_back(
          {static_cast<int>(k), e.i, e.j, e.a});
  for (const auto& e : cp.sdp.free_entries)
    rows[static_cast<size_t>(e.row)]["free"].push_back({e.var, e.c});
  j["eq_rows"] = rows;
  j["objective"] = {{"free", cp.sdp.objective},
                    {"maximize", cp.maximize},
                    {"scalar", cp.objective_scalar}};
  return j;
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.good()) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace polycert

#pragma once

// Config-file loaders shared by the CLI and the acceptance suite. Configs
// are JSON; polynomials inside configs use the text grammar.

#include "polycert/io.hpp"
#include "polycert/parse.hpp"
#include "polycert/synthesis.hpp"

namespace polycert {

inline DeltaOperator delta_from_config(const Json& j) {
  if (!j.contains("tag")) throw ConfigError("delta needs a 'tag'");
  double lo = -5.0, hi = 5.0;
  if (j.contains("domain")) {
    lo = j["domain"][0].get<double>();
    hi = j["domain"][1].get<double>();
  }
  return delta_from_name(j["tag"].get<std::string>(), lo, hi);
}

inline SystemModel system_from_config(const Json& j) {
  if (!j.contains("states") || !j.contains("f") || !j.contains("g"))
    throw ConfigError("system needs 'states', 'f', 'g'");
  auto states = j["states"].get<std::vector<std::string>>();
  std::vector<std::string> xw = states;
  std::optional<DeltaOperator> delta;
  if (j.contains("delta")) {
    delta = delta_from_config(j["delta"]);
    xw.push_back("w");
  }
  std::vector<Polynomial> f;
  for (const auto& fi : j["f"]) f.push_back(parse_polynomial(fi.get<std::string>(), xw));
  Polynomial g = parse_polynomial(j["g"].get<std::string>(), states);
  return make_system_model(states, std::move(f), std::move(g), std::move(delta));
}

// A constraint entry: {"file": path} | {"sector": [a,b]} | {"poly": text}
// | {"pade": {...}} | {"hand": name}, with optional "interval", "w_box",
// and "name" fields.
inline PolynomialConstraint constraint_from_config(const Json& j,
                                                   const std::optional<DeltaOperator>& delta,
                                                   const std::filesystem::path& base_dir) {
  PolynomialConstraint c;
  if (j.contains("file")) {
    std::filesystem::path p = j["file"].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c = constraint_from_json(Json::parse(read_file(p)));
  } else if (j.contains("sector")) {
    c = sector_constraint(j["sector"][0].get<double>(), j["sector"][1].get<double>());
  } else if (j.contains("poly")) {
    c.p = parse_polynomial(j["poly"].get<std::string>(), vw_vars());
  } else if (j.contains("pade")) {
    const Json& pj = j["pade"];
    DeltaOperator d = pj.contains("delta")
                          ? delta_from_name(pj["delta"].get<std::string>())
                          : (delta ? *delta
                                   : throw ConfigError("pade constraint needs a delta"));
    int m = pj.value("m", 3), n = pj.value("n", 2), k = pj.value("k", 1);
    auto coeffs = taylor_coefficients(d.tag, m + n);
    auto [N, D] = pade_approximant(coeffs, m, n);
    std::pair<double, double> iv{j["interval"][0].get<double>(),
                                 j["interval"][1].get<double>()};
    c = pade_constraint(N, D, k, pj["eps1"].get<double>(), pj["eps2"].get<double>(), iv);
  } else if (j.contains("hand")) {
    auto cat = hand_constraints();
    auto it = cat.find(j["hand"].get<std::string>());
    if (it == cat.end()) throw ConfigError("unknown hand constraint: " +
                                           j["hand"].get<std::string>());
    c = it->second;
  } else {
    throw ConfigError("constraint entry needs one of file/sector/poly/pade/hand");
  }
  if (j.contains("interval"))
    c.interval = {{j["interval"][0].get<double>(), j["interval"][1].get<double>()}};
  if (j.contains("w_box"))
    c.validity.push_back(
        box_validity(j["w_box"][0].get<double>(), j["w_box"][1].get<double>()));
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  return c;
}

struct RoaRunSpec {
  SystemModel model;
  RoaConfig config;
  Polynomial V0;
  int falsify_samples = 100;
};

inline RoaRunSpec roa_from_config(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.contains("system")) throw ConfigError("roa config needs 'system'");
  RoaRunSpec spec{system_from_config(j["system"]), {}, {}, 100};

  if (j.contains("constraints"))
    for (const auto& cj : j["constraints"])
      spec.config.constraints.push_back(
          constraint_from_config(cj, spec.model.delta, base_dir));

  if (!j.contains("schedule")) throw ConfigError("roa config needs 'schedule'");
  for (const auto& sj : j["schedule"]) {
    RoaStage st;
    st.n_V = sj["n_V"].get<int>();
    st.n_total = sj["n_total"].get<int>();
    st.iterations = sj["iterations"].get<int>();
    if (st.n_V % 2 != 0 || st.n_total < st.n_V)
      throw ConfigError("schedule entries need even n_V and n_total >= n_V");
    spec.config.schedule.push_back(st);
  }

  spec.config.epsilon = j.value("epsilon", 1e-6);
  spec.config.seed = j.value("seed", uint64_t{12345});
  spec.config.mc_samples = j.value("mc_samples", 1000000);
  spec.config.mc_samples_trace = j.value("mc_samples_trace", 100000);
  spec.falsify_samples = j.value("falsify_samples", 100);

  if (j.contains("V0")) {
    spec.V0 = parse_polynomial(j["V0"].get<std::string>(), spec.model.state_vars);
  } else if (j.contains("initial_lyapunov")) {
    const Json& lj = j["initial_lyapunov"];
    int n = spec.model.n();
    Eigen::MatrixXd A(n, n), Q(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) {
        A(r, col) = lj["A"][static_cast<size_t>(r)][static_cast<size_t>(col)].get<double>();
        Q(r, col) = lj["Q"][static_cast<size_t>(r)][static_cast<size_t>(col)].get<double>();
      }
    spec.V0 = initial_lyapunov(A, Q, spec.model.state_vars);
  } else {
    throw ConfigError("roa config needs 'V0' or 'initial_lyapunov'");
  }
  return spec;
}

inline SynthesisProblem synthesis_from_config(const Json& j) {
  SynthesisProblem p;
  if (!j.contains("delta")) throw ConfigError("synthesis config needs 'delta'");
  p.delta = delta_from_config(j["delta"]);
  p.degree = j.value("degree", 6);
  if (j.contains("constraint_interval"))
    p.constraint_interval = {j["constraint_interval"][0].get<double>(),
                             j["constraint_interval"][1].get<double>()};
  p.n_constraint_points = j.value("n_constraint_points", 401);
  p.min_template_degree = j.value("min_template_degree", 2);
  p.seed = j.value("seed", uint64_t{1});
  p.graph_margin = j.value("graph_margin", 1e-6);
  p.refine_rounds = j.value("refine_rounds", 3);
  if (j.contains("test_points")) {
    const Json& t = j["test_points"];
    p.test_cfg.n_tx = t.value("n_tx", 60);
    p.test_cfg.n_ty = t.value("n_ty", 9);
    p.test_cfg.below = t.value("below", 0.5);
    p.test_cfg.above = t.value("above", 0.5);
    p.test_cfg.s = t.value("s", 0.0);
    if (t.contains("x_interval"))
      p.test_cfg.x_interval = {t["x_interval"][0].get<double>(),
                               t["x_interval"][1].get<double>()};
    std::string w = t.value("weight", "uniform");
    if (w == "uniform") p.test_cfg.weight = TestPointConfig::Weight::uniform;
    else if (w == "origin_peaked_v") p.test_cfg.weight = TestPointConfig::Weight::origin_peaked_v;
    else if (w == "origin_peaked_w") p.test_cfg.weight = TestPointConfig::Weight::origin_peaked_w;
    else if (w == "sign_weighted") p.test_cfg.weight = TestPointConfig::Weight::sign_weighted;
    else throw ConfigError("unknown weight tag: " + w);
    p.test_cfg.sign_a = t.value("sign_a", 1.0);
    p.test_cfg.sign_b = t.value("sign_b", 0.5);
  }
  if (j.contains("validity_boxes"))
    for (const auto& b : j["validity_boxes"])
      p.validity.push_back(box_validity(b[0].get<double>(), b[1].get<double>()));
  return p;
}

// The initial polynomial for synthesis: {"poly": text} | {"pade": {...}}
// | {"taylor": {...}} over the problem's delta.
inline Polynomial synthesis_init_from_config(const Json& j, const SynthesisProblem& p) {
  if (!j.contains("init")) throw ConfigError("synthesis config needs 'init'");
  const Json& ij = j["init"];
  if (ij.contains("poly")) return parse_polynomial(ij["poly"].get<std::string>(), vw_vars());
  if (ij.contains("pade")) {
    const Json& pj = ij["pade"];
    int m = pj.value("m", 3), n = pj.value("n", 2), k = pj.value("k", 1);
    auto [N, D] = pade_approximant(taylor_coefficients(p.delta.tag, m + n), m, n);
    std::pair<double, double> iv = p.constraint_interval;
    if (iv.first == 0 && iv.second == 0) iv = {p.delta.lo, p.delta.hi};
    return pade_constraint(N, D, k, pj["eps1"].get<double>(), pj["eps2"].get<double>(), iv).p;
  }
  if (ij.contains("taylor")) {
    const Json& tj = ij["taylor"];
    int n = tj.value("n", 3), k = tj.value("k", 1);
    return taylor_constraint(taylor_coefficients(p.delta.tag, n), n, k,
                             tj["eps1"].get<double>(), tj["eps2"].get<double>())
        .p;
  }
  throw ConfigError("synthesis init needs poly/pade/taylor");
}

inline SolverTolerances tolerances_from_env() {
  SolverTolerances tol;
  auto get = [](const char* name, double& target) {
    if (const char* v = std::getenv(name)) target = std::atof(v);
  };
  get("POLYCERT_SDP_FEAS_TOL", tol.sdp.feas);
  get("POLYCERT_SDP_GAP_TOL", tol.sdp.gap);
  get("POLYCERT_SDP_EQ_ACCEPT", tol.sdp.eq_accept);
  get("POLYCERT_SDP_PSD_ACCEPT", tol.sdp.psd_accept);
  get("POLYCERT_RESIDUAL_ACCEPT", tol.residual_accept);
  return tol;
}

}  // namespace polycert

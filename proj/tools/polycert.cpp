// Command-line front end: constraint synthesis, verification, rendering,
// transformation, and ROA certification runs driven by JSON configs.
//
// Exit codes: 0 success, 1 verification failure, 2 config/schema error,
// 3 synthesis or certification failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>

#include "polycert/config.hpp"
#include "polycert/io.hpp"
#include "polycert/transform.hpp"
#include "polycert/version.hpp"

namespace fs = std::filesystem;
using namespace polycert;

namespace {

struct CommonArgs {
  std::string out_dir = ".";
  uint64_t seed = 0;  // 0: keep config seed
  bool dry_run = false;
};

std::string timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct ManifestWriter {
  Json manifest;
  fs::path out_dir;
  std::vector<std::string> outputs;

  ManifestWriter(const std::string& command, const fs::path& dir, const std::string& digest,
                 uint64_t seed)
      : out_dir(dir) {
    fs::create_directories(dir);
    manifest["command"] = command;
    manifest["config_digest"] = digest;
    manifest["seed"] = seed;
    manifest["tool_version"] = kVersion;
    manifest["started"] = timestamp();
  }

  void write_output(const std::string& name, const std::string& content) {
    atomic_write_file(out_dir / name, content);
    outputs.push_back(name);
  }

  void finish() {
    manifest["finished"] = timestamp();
    manifest["outputs"] = outputs;
    atomic_write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

Json load_config(const std::string& path, std::string& digest) {
  std::string text = read_file(path);
  digest = hex64(fnv1a64(text));
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
}

std::pair<double, double> parse_interval(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("interval must be 'a,b'");
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int cmd_synth(const std::string& config_path, const CommonArgs& common) {
  std::string digest;
  Json cfg = load_config(config_path, digest);
  SynthesisProblem prob = synthesis_from_config(cfg);
  if (common.seed != 0) prob.seed = common.seed;
  Polynomial init = synthesis_init_from_config(cfg, prob);

  ManifestWriter mw("synth-constraint", common.out_dir, digest, prob.seed);
  if (common.dry_run) {
    std::printf("synthesis: degree %d, %d constraint points, %d x %d test points\n",
                prob.degree, prob.n_constraint_points, prob.test_cfg.n_tx,
                prob.test_cfg.n_ty);
    return 0;
  }

  SynthesisResult res = synthesize(prob, init);

  Json report;
  report["converged"] = res.converged;
  report["feasible"] = res.feasible;
  report["verified"] = res.verified;
  report["objective"] = res.objective;
  report["objective_init"] = res.objective_init;
  report["min_constraint_value"] = res.min_constraint_value;
  report["scale_s"] = res.scale_s;
  report["seed"] = res.seed;
  report["warning"] = res.warning;
  report["verify_min_value"] = res.report.min_value;
  report["verify_min_location"] = res.report.min_location;

  mw.write_output("constraint.json", constraint_to_json(res.constraint).dump(2) + "\n");
  mw.write_output("synthesis_report.json", report.dump(2) + "\n");
  mw.finish();

  std::printf("synthesized constraint: feasible=%d verified=%d objective %.6f (init %.6f)\n",
              res.feasible, res.verified, res.objective, res.objective_init);
  if (!res.feasible || !res.verified) {
    std::fprintf(stderr, "synthesis failed verification%s%s\n",
                 res.warning.empty() ? "" : ": ", res.warning.c_str());
    return 3;
  }
  return 0;
}

int cmd_verify(const std::string& constraint_path, const std::string& delta_tag,
               const std::string& interval_arg, int grid_n, const CommonArgs& common) {
  auto interval = parse_interval(interval_arg);
  PolynomialConstraint c = constraint_from_json(Json::parse(read_file(constraint_path)));
  if (interval.first == interval.second) {
    std::fprintf(stderr, "warning: empty interval, vacuously satisfied\n");
    return 0;
  }
  DeltaOperator delta = delta_from_name(delta_tag, interval.first, interval.second);
  VerifyReport rep = verify_constraint(c, delta, interval, grid_n);
  std::printf("checked %d grid points: %s (min %.6g at %.6g)\n", rep.checked_points,
              rep.ok ? "ok" : "VIOLATIONS", rep.min_value, rep.min_location);
  if (!rep.ok) {
    std::string csv = "x,value\n";
    for (const auto& v : rep.violations)
      csv += csv_double(v.x) + "," + csv_double(v.value) + "\n";
    fs::create_directories(common.out_dir);
    atomic_write_file(fs::path(common.out_dir) / "violations.csv", csv);
    return 1;
  }
  return 0;
}

int cmd_render(const std::string& constraint_path, const std::string& box_arg, int n,
               const CommonArgs& common) {
  PolynomialConstraint c = constraint_from_json(Json::parse(read_file(constraint_path)));
  double vlo, vhi, wlo, whi;
  if (std::sscanf(box_arg.c_str(), "%lf,%lf,%lf,%lf", &vlo, &vhi, &wlo, &whi) != 4)
    throw ConfigError("--box must be vlo,vhi,wlo,whi");
  std::string csv = "v,w,p,sign\n";
  Polynomial p = c.p.with_vars(vw_vars());
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      double v = vlo + (vhi - vlo) * i / n;
      double w = wlo + (whi - wlo) * j / n;
      double pv = evaluate(p, {v, w});
      csv += csv_double(v) + "," + csv_double(w) + "," + csv_double(pv) + "," +
             (pv >= 0 ? "1" : "-1") + "\n";
    }
  fs::create_directories(common.out_dir);
  atomic_write_file(fs::path(common.out_dir) / "constraint_grid.csv", csv);
  std::printf("wrote %d x %d grid\n", n + 1, n + 1);
  return 0;
}

int cmd_transform(const std::string& h1_text, const std::string& h2_text,
                  const std::string& delta_tag, const std::string& interval_arg,
                  const std::string& psi_text, const CommonArgs& common) {
  auto interval = parse_interval(interval_arg);
  DeltaOperator delta = delta_from_name(delta_tag, interval.first, interval.second);
  GraphMap h{parse_polynomial(h1_text, vw_vars()), parse_polynomial(h2_text, vw_vars())};

  auto inv = check_h1_invertible(h, delta, interval);
  if (!inv.ok) {
    std::fprintf(stderr,
                 "h1 is not invertible along the graph: the derivative changes sign "
                 "(smallest magnitude %.3g)\n",
                 inv.min_abs_derivative);
    return 1;
  }
  std::printf("h1 invertible: %s, min |derivative| %.6g\n",
              inv.sign > 0 ? "increasing" : "decreasing", inv.min_abs_derivative);

  // psi defaults to the sector quadratic form [[0, 0.5], [0.5, -1]], whose
  // composition is h2 (h1 - h2)
  Polynomial psi = psi_text.empty() ? parse_polynomial("v*w - w^2", vw_vars())
                                    : parse_polynomial(psi_text, vw_vars());
  Polynomial composed = compose_constraint(psi, h);

  PolynomialConstraint out;
  out.p = composed;
  out.provenance = PolynomialConstraint::Provenance::transformed;
  out.interval = interval;
  out.name = "transformed";

  ManifestWriter mw("transform", common.out_dir, hex64(fnv1a64(h1_text + "|" + h2_text)), 0);
  mw.write_output("constraint.json", constraint_to_json(out).dump(2) + "\n");

  std::vector<double> grid;
  for (int i = 0; i <= 2000; ++i)
    grid.push_back(interval.first + (interval.second - interval.first) * i / 2000.0);
  auto samples = tilde_delta(h, delta, grid);
  std::string csv = "v_tilde,w_tilde,x\n";
  for (size_t i = 0; i < samples.vt.size(); ++i)
    csv += csv_double(samples.vt[i]) + "," + csv_double(samples.wt[i]) + "," +
           csv_double(samples.x[i]) + "\n";
  mw.write_output("tilde_delta.csv", csv);
  mw.finish();
  std::printf("composed constraint: %s\n", render(composed).c_str());
  return 0;
}

int cmd_roa(const std::string& config_path, const CommonArgs& common, double baseline_volume,
            const std::string& warm_start) {
  std::string digest;
  Json cfg = load_config(config_path, digest);
  RoaRunSpec spec = roa_from_config(cfg, fs::path(config_path).parent_path());
  spec.config.sos_tol = tolerances_from_env();
  spec.config.verbose = true;
  if (common.seed != 0) spec.config.seed = common.seed;
  if (!warm_start.empty()) {
    Json wj = Json::parse(read_file(warm_start));
    spec.V0 = polynomial_from_json(wj["V"]).with_vars(spec.model.state_vars);
  }

  ManifestWriter mw("roa", common.out_dir, digest, spec.config.seed);

  if (common.dry_run) {
    const auto& st = spec.config.schedule.front();
    auto prep = roa_detail::prepare(spec.model, spec.config.constraints, st.n_V, st.n_total);
    std::printf("dry run: stage (%d, %d), %zu multiplied constraints, %zu side conditions\n",
                st.n_V, st.n_total, prep.mains.size(), prep.sides.size());
    return 0;
  }

  auto t0 = std::chrono::steady_clock::now();
  RoaCertificate cert;
  try {
    cert = run_roa(spec.model, spec.config, spec.V0);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "certification failed: %s\n", e.what());
    return 3;
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  FalsifyReport fal =
      falsify(spec.model, cert.V, cert.c_level, spec.falsify_samples, spec.config.seed);

  Json cj = certificate_to_json(cert);
  cj["falsification"] = {{"samples", fal.samples},
                         {"converged", fal.converged},
                         {"failures", fal.failures.size()}};
  cj["wall_seconds"] = wall;
  cj["seed"] = spec.config.seed;
  mw.write_output("certificate.json", cj.dump(2) + "\n");

  {
    std::string csv =
        "stage,iteration,n_V,n_total,c_star,volume,reshaped,reshape_c,solves,seconds\n";
    for (const auto& r : cert.trace)
      csv += std::to_string(r.stage) + "," + std::to_string(r.iteration) + "," +
             std::to_string(r.n_V) + "," + std::to_string(r.n_total) + "," +
             csv_double(r.c_star) + "," + csv_double(r.volume) + "," +
             (r.reshaped ? "1" : "0") + "," + csv_double(r.reshape_c) + "," +
             std::to_string(r.solves) + "," + csv_double(r.seconds) + "\n";
    mw.write_output("trace.csv", csv);
  }

  // level-set samples of {V = c} on coordinate-plane slices (radial scan)
  {
    const auto& sv = spec.model.state_vars;
    Polynomial V = cert.V.with_vars(sv);
    std::string csv = "plane,a,b\n";
    for (size_t i = 0; i < sv.size(); ++i)
      for (size_t jj = i + 1; jj < sv.size(); ++jj) {
        for (int ang = 0; ang < 720; ++ang) {
          double th = ang * M_PI / 360.0;
          double ca = std::cos(th), sb = std::sin(th);
          double r_lo = 0.0, r_hi = 1e-3;
          std::vector<double> pt(sv.size(), 0.0);
          auto val = [&](double r) {
            pt[i] = r * ca;
            pt[jj] = r * sb;
            double v = evaluate(V, {pt.data(), pt.size()});
            pt[i] = pt[jj] = 0.0;
            return v;
          };
          int guard = 0;
          while (val(r_hi) <= cert.c_level && guard++ < 300) r_hi *= 1.5;
          for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (r_lo + r_hi);
            (val(mid) <= cert.c_level ? r_lo : r_hi) = mid;
          }
          csv += sv[i] + "-" + sv[jj] + "," + csv_double(r_lo * ca) + "," +
                 csv_double(r_lo * sb) + "\n";
        }
      }
    mw.write_output("level_set.csv", csv);
  }

  // a few trajectories started inside the certified set
  {
    std::string csv = "trajectory,step";
    for (const auto& v : spec.model.state_vars) csv += "," + v;
    csv += "\n";
    Rng rng(spec.config.seed + 17);
    int traj_count = 0;
    Polynomial V = cert.V.with_vars(spec.model.state_vars);
    int n = spec.model.n();
    int guard = 0;
    while (traj_count < 5 && guard++ < 20000) {
      std::vector<double> x(static_cast<size_t>(n));
      for (int k = 0; k < n; ++k) x[static_cast<size_t>(k)] = rng.uniform(-3.0, 3.0);
      if (evaluate(V, {x.data(), x.size()}) > cert.c_level) continue;
      auto traj = simulate(spec.model, x, 20.0, 0.01);
      for (size_t s = 0; s < traj.size(); s += 25) {
        csv += std::to_string(traj_count) + "," + std::to_string(s);
        for (double xi : traj[s]) csv += "," + csv_double(xi);
        csv += "\n";
      }
      ++traj_count;
    }
    mw.write_output("trajectories.csv", csv);
  }
  mw.finish();

  std::string label = "constraints";
  if (!spec.config.constraints.empty()) {
    label = spec.config.constraints.front().name;
    for (size_t i = 1; i < spec.config.constraints.size(); ++i)
      label += "+" + spec.config.constraints[i].name;
  }
  double ratio = baseline_volume > 0 ? cert.volume.value / baseline_volume : 1.0;
  std::printf("%-24s %12.4f %8.2fx %10.1fs\n", label.c_str(), cert.volume.value, ratio, wall);
  std::printf("certified level %.6g, volume method %s, residual %.3g, falsification %d/%d\n",
              cert.c_level, cert.volume.method.c_str(), cert.max_residual, fal.converged,
              fal.samples);
  if (!cert.sound || !fal.ok()) {
    std::fprintf(stderr, "certificate rejected (sound=%d falsified=%zu)\n", (int)cert.sound,
                 fal.failures.size());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polynomial-constraint toolbox: abstraction of scalar nonlinearities and "
               "region-of-attraction certification"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string config_path, constraint_path, delta_tag, interval_arg, box_arg;
  std::string h1_text, h2_text, psi_text, warm_start;
  int grid_n = 10000, render_n = 200;
  double baseline_volume = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "override the config seed");
    sub->add_flag("--dry-run", common.dry_run, "validate and report, solve nothing");
  };

  auto* synth = app.add_subcommand("synth-constraint", "synthesize a constraint numerically");
  synth->add_option("--config", config_path, "synthesis config JSON")->required();
  add_common(synth);

  auto* verify = app.add_subcommand("verify-constraint", "scan a constraint on a graph");
  verify->add_option("--constraint", constraint_path, "constraint JSON")->required();
  verify->add_option("--delta", delta_tag, "delta tag")->required();
  verify->add_option("--interval", interval_arg, "a,b")->required();
  verify->add_option("--grid", grid_n, "grid points (>= 1000)");
  add_common(verify);

  auto* render_cmd = app.add_subcommand("render-constraint", "emit a CSV sign grid");
  render_cmd->add_option("--constraint", constraint_path, "constraint JSON")->required();
  render_cmd->add_option("--box", box_arg, "vlo,vhi,wlo,whi")->required();
  render_cmd->add_option("--n", render_n, "grid resolution");
  add_common(render_cmd);

  auto* trans = app.add_subcommand("transform", "compose a constraint with a graph map");
  trans->add_option("--h1", h1_text, "h1(v,w)")->required();
  trans->add_option("--h2", h2_text, "h2(v,w)")->required();
  trans->add_option("--delta", delta_tag, "delta tag")->required();
  trans->add_option("--interval", interval_arg, "a,b")->required();
  trans->add_option("--psi", psi_text, "psi(v,w) to compose (default sector form)");
  add_common(trans);

  auto* roa = app.add_subcommand("roa", "certify a region of attraction");
  roa->add_option("--config", config_path, "roa config JSON")->required();
  roa->add_option("--baseline-volume", baseline_volume, "reference volume for the ratio");
  roa->add_option("--warm-start", warm_start, "certificate JSON supplying V0");
  add_common(roa);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, common);
    if (verify->parsed())
      return cmd_verify(constraint_path, delta_tag, interval_arg, grid_n, common);
    if (render_cmd->parsed()) return cmd_render(constraint_path, box_arg, render_n, common);
    if (trans->parsed())
      return cmd_transform(h1_text, h2_text, delta_tag, interval_arg, psi_text, common);
    if (roa->parsed()) return cmd_roa(config_path, common, baseline_volume, warm_start);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}

// Command-line front end: run the trajectory comparisons, the spin echo,
// frame exports, period scans, and the full acceptance table.  Exit codes:
// 0 all declared tolerances pass, 1 a tolerance failed, 2 usage or config
// error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "rotax/acceptance.hpp"
#include "rotax/config.hpp"
#include "rotax/experiments.hpp"
#include "rotax/io.hpp"

namespace {

using namespace rotax;

struct Flags {
  std::string config_path;
  std::string out_path;
  std::string format;
  long long steps = -1;
  long long seed = -1;
  bool force = false;
};

void add_common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path,
                  "config file with 'key = value' lines");
  sub->add_option("--out", f.out_path, "output path (omit to print to stdout)");
  sub->add_option("--format", f.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--steps", f.steps, "integration step override")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "seed for randomized probes")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--force", f.force, "allow overwriting existing output files");
}

// File config first, then command-line overrides on top.
Config load_config(const Flags& f) {
  Config cfg =
      f.config_path.empty() ? Config() : Config::parse_file(f.config_path);
  if (f.steps >= 0) cfg.set("steps", std::to_string(f.steps));
  if (f.seed >= 0) cfg.set("seed", std::to_string(f.seed));
  if (!f.format.empty()) cfg.set("format", f.format);
  return cfg;
}

void print_summary(const ComparisonReport& r) {
  std::printf("%s: %s%s\n", r.title.c_str(), r.passed() ? "PASS" : "FAIL",
              r.inconclusive ? " INCONCLUSIVE" : "");
  for (const CheckResult& c : r.checks)
    std::printf("  %-36s %14.6e in [%.6e, %.6e] %s\n", c.name.c_str(), c.value,
                c.lo, c.hi, c.within ? "ok" : "FAIL");
  if (r.has_fit)
    std::printf("  fit: slope %.4f residual %.4e%s\n", r.fit.slope,
                r.fit.residual, r.fit.conclusive ? "" : " (inconclusive)");
}

// Serialize the report per the requested format and route it to --out or
// stdout; the exit code reflects the declared checks.
int emit_report(const ComparisonReport& r, const Config& cfg,
                const Flags& f) {
  const std::string format = cfg.get_string("format", "csv");
  const std::string payload = format == "json"
                                  ? r.to_json(cfg).dump(2) + "\n"
                                  : r.to_table().to_csv(cfg);
  if (f.out_path.empty()) {
    std::cout << payload;
    if (r.inconclusive) std::cerr << "INCONCLUSIVE\n";
  } else {
    write_file(f.out_path, payload, f.force);
    print_summary(r);
    std::printf("wrote %s\n", f.out_path.c_str());
  }
  if (r.inconclusive) return 0;
  return r.passed() ? 0 : 1;
}

int cmd_emission(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"delta", "omega", "lambda", "period", "p", "steps",
                     "samples", "tol", "format", "seed"});
  const double delta = cfg.get_number("delta", 0.5);
  const double omega = cfg.get_number("omega", 1.0);
  const double lambda = cfg.get_number("lambda", 0.005);
  const double period = cfg.get_number("period", 2000.0);
  const double p = cfg.get_number("p", 0.5);
  const int steps = cfg.get_int("steps", 800000);
  const int samples = cfg.get_int("samples", 9);
  const double tol = cfg.get_number("tol", 5e-3);
  cfg.set("delta", delta);
  cfg.set("omega", omega);
  cfg.set("lambda", lambda);
  cfg.set("period", period);
  cfg.set("p", p);
  cfg.set("steps", std::to_string(steps));
  cfg.set("samples", std::to_string(samples));
  cfg.set("tol", tol);

  const LaserModel model(delta, omega, lambda, period);
  EvolveDiagnostics diag;
  const ComparisonReport r =
      compare_pipelines(model, p, steps, samples, tol, &diag);
  return emit_report(r, cfg, f);
}

int cmd_dephasing(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"delta", "omega", "density", "lambda0", "alpha0", "width",
                     "period", "p", "steps", "samples", "tol", "format",
                     "seed"});
  const double delta = cfg.get_number("delta", 0.5);
  const double omega = cfg.get_number("omega", 1.0);
  const std::string density = cfg.get_string("density", "shifted-sine");
  const double lambda0 = cfg.get_number("lambda0", 0.005);
  const double alpha0 = cfg.get_number("alpha0", 0.0);
  const double width = cfg.get_number("width", 0.0);
  const double period = cfg.get_number("period", 2000.0);
  const double p = cfg.get_number("p", 0.5);
  const int steps = cfg.get_int("steps", 800000);
  const int samples = cfg.get_int("samples", 9);
  const double tol = cfg.get_number("tol", 5e-3);
  cfg.set("delta", delta);
  cfg.set("omega", omega);
  cfg.set("density", density);
  cfg.set("lambda0", lambda0);
  cfg.set("period", period);
  cfg.set("p", p);
  cfg.set("steps", std::to_string(steps));
  cfg.set("samples", std::to_string(samples));
  cfg.set("tol", tol);

  const LaserModel model(delta, omega, 0.0, period);
  const CollisionDensity kicks =
      CollisionDensity::from_name(density, lambda0, alpha0, width);
  EvolveDiagnostics diag;
  const ComparisonReport r =
      compare_pipelines(model, kicks, p, steps, samples, tol, &diag);
  return emit_report(r, cfg, f);
}

int cmd_spinecho(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"e", "e2", "theta_b", "period", "f", "coh0", "steps",
                     "tol", "mod_tol", "format", "seed"});
  const double e1 = cfg.get_number("e", 1.0);
  const double e2 = cfg.get_number("e2", 2.0);
  const double theta_b = cfg.get_number("theta_b", 1.0);
  const double period = cfg.get_number("period", 2000.0);
  const double rate = cfg.get_number("f", 5e-4);
  const double coh0 = cfg.get_number("coh0", 0.3);
  const int steps = cfg.get_int("steps", 200000);
  const double tol = cfg.get_number("tol", 1e-4);
  const double mod_tol = cfg.get_number("mod_tol", 1e-3);
  cfg.set("e", e1);
  cfg.set("e2", e2);
  cfg.set("theta_b", theta_b);
  cfg.set("period", period);
  cfg.set("f", rate);
  cfg.set("coh0", coh0);
  cfg.set("steps", std::to_string(steps));
  cfg.set("tol", tol);
  cfg.set("mod_tol", mod_tol);

  EvolveDiagnostics diag;
  const EchoResult a = run_echo(SpinModel(e1, theta_b, period), rate, coh0,
                                steps, &diag);
  const EchoResult b = run_echo(SpinModel(e2, theta_b, period), rate, coh0,
                                steps, &diag);
  const double target =
      wrap_angle(4.0 * -M_PI * (1.0 - std::cos(theta_b)));
  const double envelope = std::exp(-2.0 * period * rate);

  ComparisonReport r;
  r.title = "spin echo";
  r.parameter = "e";
  r.grid = {e1, e2};
  r.add_metric("arg_change", {a.arg_change, b.arg_change});
  r.add_metric("modulus_ratio", {a.modulus_ratio, b.modulus_ratio});
  r.scalars.emplace_back("target_arg", target);
  r.scalars.emplace_back("target_modulus_ratio", envelope);
  r.checks.push_back(check_abs(
      "arg_agreement", wrap_angle(a.arg_change - b.arg_change), tol));
  r.checks.push_back(
      check_abs("arg_vs_doubled_cone_phase_e",
                wrap_angle(a.arg_change - target), tol));
  r.checks.push_back(
      check_abs("arg_vs_doubled_cone_phase_e2",
                wrap_angle(b.arg_change - target), tol));
  r.checks.push_back(check_abs("modulus_vs_envelope_e",
                               a.modulus_ratio / envelope - 1.0, mod_tol));
  r.checks.push_back(check_abs("modulus_vs_envelope_e2",
                               b.modulus_ratio / envelope - 1.0, mod_tol));
  return emit_report(r, cfg, f);
}

int cmd_frame(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"model", "delta", "omega", "e", "theta_b", "period",
                     "steps", "format", "seed"});
  const std::string model = cfg.get_string("model", "laser");
  const double period = cfg.get_number("period", 500.0);
  const int steps = cfg.get_int("steps", 4000);
  cfg.set("model", model);
  cfg.set("period", period);
  cfg.set("steps", std::to_string(steps));

  HamiltonianPath path;
  if (model == "laser") {
    const double delta = cfg.get_number("delta", 0.5);
    const double omega = cfg.get_number("omega", 1.0);
    cfg.set("delta", delta);
    cfg.set("omega", omega);
    path = LaserModel(delta, omega, 0.0, period).path();
  } else if (model == "spin") {
    const double e = cfg.get_number("e", 1.0);
    const double theta_b = cfg.get_number("theta_b", 1.0);
    cfg.set("e", e);
    cfg.set("theta_b", theta_b);
    path = SpinModel(e, theta_b, period).path();
  } else {
    throw ConfigError("key 'model': expected 'laser' or 'spin', got '" +
                      model + "'");
  }

  const TransportFrame frame = build_frame(path, steps);
  const PhaseDecomposition ph = holonomy(frame);

  ComparisonReport r;
  r.title = "transport frame";
  r.parameter = "t";
  r.grid = frame.times;
  for (size_t b = 0; b < ph.geometric.size(); ++b) {
    std::vector<double> band(frame.times.size());
    for (size_t i = 0; i < frame.times.size(); ++i)
      band[i] = frame.energies[i][b];
    r.add_metric("energy_" + std::to_string(b), std::move(band));
    r.scalars.emplace_back("geometric_" + std::to_string(b), ph.geometric[b]);
    r.scalars.emplace_back("dynamic_" + std::to_string(b), ph.dynamic[b]);
  }
  return emit_report(r, cfg, f);
}

int cmd_scan(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"kind", "delta", "omega", "lambda_t", "grid_first",
                     "grid_factor", "grid_count", "steps_per_unit", "steps",
                     "p", "format", "seed"});
  const std::string kind = cfg.get_string("kind", "adiabatic");
  const double delta = cfg.get_number("delta", 0.5);
  const double omega = cfg.get_number("omega", 1.0);
  const double lambda_t = cfg.get_number("lambda_t", 0.5);
  const double grid_first = cfg.get_number("grid_first", 100.0);
  const double grid_factor = cfg.get_number("grid_factor", 2.0);
  const int grid_count = cfg.get_int("grid_count", 4);
  const int steps_per_unit =
      cfg.get_int("steps", cfg.get_int("steps_per_unit", 200));
  const double p = cfg.get_number("p", 0.5);
  cfg.set("kind", kind);
  cfg.set("delta", delta);
  cfg.set("omega", omega);
  cfg.set("lambda_t", lambda_t);
  cfg.set("grid_first", grid_first);
  cfg.set("grid_factor", grid_factor);
  cfg.set("grid_count", std::to_string(grid_count));
  cfg.set("steps_per_unit", std::to_string(steps_per_unit));
  cfg.set("p", p);

  const ScanSpec grid =
      ScanSpec::geometric("T", grid_first, grid_factor, grid_count);
  EvolveDiagnostics diag;
  ComparisonReport r;
  if (kind == "adiabatic")
    r = adiabatic_scan(delta, omega, lambda_t, grid, steps_per_unit, p, &diag);
  else if (kind == "beta")
    r = beta_average_check(delta, omega, lambda_t, grid, steps_per_unit, p,
                           &diag);
  else
    throw ConfigError("key 'kind': expected 'adiabatic' or 'beta', got '" +
                      kind + "'");
  return emit_report(r, cfg, f);
}

int cmd_verify(Flags& f) {
  Config cfg = load_config(f);
  cfg.require_known({"format", "seed"});
  AcceptanceOptions opts;
  opts.seed = (unsigned long long)cfg.get_int("seed", 42);
  const std::vector<CriterionResult> results = run_acceptance(opts);

  std::string text;
  int failures = 0;
  for (const CriterionResult& r : results) {
    if (!r.passed) ++failures;
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %2d %-48s (%6.2fs)\n",
                  r.passed ? "PASS" : "FAIL", r.index, r.name.c_str(),
                  r.seconds);
    text += line;
    text += "       " + r.detail + "\n";
  }
  text += std::to_string(int(results.size()) - failures) + " of " +
          std::to_string(results.size()) + " criteria passed\n";

  std::cout << text;
  if (!f.out_path.empty()) {
    if (cfg.get_string("format", "csv") == "json") {
      nlohmann::json j;
      j["criteria"] = nlohmann::json::array();
      for (const CriterionResult& r : results)
        j["criteria"].push_back({{"index", r.index},
                                 {"name", r.name},
                                 {"passed", r.passed},
                                 {"detail", r.detail},
                                 {"seconds", r.seconds}});
      j["passed"] = failures == 0;
      j["config"] = config_json(cfg);
      write_file(f.out_path, j.dump(2) + "\n", f.force);
    } else {
      write_file(f.out_path, text, f.force);
    }
    std::printf("wrote %s\n", f.out_path.c_str());
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driven two-level and precessing spin loop simulator"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* emission = app.add_subcommand(
      "emission", "trajectory comparison under spontaneous emission");
  CLI::App* dephasing = app.add_subcommand(
      "dephasing", "trajectory comparison under collisional dephasing");
  CLI::App* spinecho = app.add_subcommand(
      "spinecho", "conjugate-and-reverse echo doubling the cone phase");
  CLI::App* frame = app.add_subcommand(
      "frame", "export the transported frame: times, energies, phases");
  CLI::App* scan = app.add_subcommand(
      "scan", "period scans: adiabatic gap closure or phase averaging");
  CLI::App* verify =
      app.add_subcommand("verify", "run the full acceptance table");
  for (CLI::App* sub : {emission, dephasing, spinecho, frame, scan, verify})
    add_common_flags(sub, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (emission->parsed()) return cmd_emission(f);
    if (dephasing->parsed()) return cmd_dephasing(f);
    if (spinecho->parsed()) return cmd_spinecho(f);
    if (frame->parsed()) return cmd_frame(f);
    if (scan->parsed()) return cmd_scan(f);
    if (verify->parsed()) return cmd_verify(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "usage error: no subcommand\n";
  return 2;
}

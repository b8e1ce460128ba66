#pragma once
// The acceptance suite: ten numbered end-to-end criteria with pinned
// tolerances, each returning its measured numbers alongside pass/fail so a
// failure is always accompanied by the evidence.

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rotax/experiments.hpp"

namespace rotax {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  unsigned long long seed = 42;
};

namespace acceptance_detail {

inline std::string num(double x) {
  std::ostringstream s;
  s.precision(4);
  s << std::scientific << x;
  return s.str();
}

struct Criterion {
  std::ostringstream detail;
  bool ok = true;

  // Record one named measurement against an absolute bound.
  void bound(const std::string& label, double value, double tol) {
    if (!detail.str().empty()) detail << "; ";
    const bool pass = std::abs(value) <= tol;
    detail << label << "=" << num(value) << " (tol " << num(tol) << ")";
    if (!pass) detail << " EXCEEDED";
    ok = ok && pass;
  }

  void note(const std::string& text) {
    if (!detail.str().empty()) detail << "; ";
    detail << text;
  }

  CriterionResult result(int index, const std::string& name) const {
    return {index, name, ok, detail.str(), 0.0};
  }
};

// Shared model parameters for the driven-atom criteria.
constexpr double kDelta = 0.5;
constexpr double kOmega = 1.0;
constexpr double kLambda = 0.005;
constexpr double kPol = 0.5;

inline CriterionResult criterion_emission(EvolveDiagnostics* diag) {
  Criterion c;
  const LaserModel model(kDelta, kOmega, kLambda, 500.0);
  const ComparisonReport r = compare_pipelines(model, kPol, 200000, 5, 5e-3, diag);
  double dw = 0.0, w_rot = 0.0, w_ana = 0.0, w_dir = 0.0;
  for (const auto& s : r.scalars) {
    if (s.first == "final_w_direct") w_dir = s.second;
    if (s.first == "final_w_rotated") w_rot = s.second;
    if (s.first == "final_w_analytic") w_ana = s.second;
  }
  dw = w_dir - w_ana;
  c.bound("|dw(T)| lab vs closed form", dw, 5e-3);
  c.note("band-frame numeric vs closed form dw=" + num(w_rot - w_ana) +
         " (averaging error); lab vs band-frame dw=" + num(w_dir - w_rot) +
         " (frame-rotation error, scales as 1/(E*T); here E*T=" +
         num(model.geometry().e * 500.0) +
         " while the calibrated adiabatic regime starts near E*T=1571)");
  return c.result(1, "emission inversion vs closed form");
}

inline CriterionResult criterion_dephasing_shift(EvolveDiagnostics* diag) {
  Criterion c;
  const double lambda0 = 0.005;
  const LaserModel model(kDelta, kOmega, 0.0, 500.0);
  const CollisionDensity sine = CollisionDensity::from_name("shifted-sine", lambda0);
  const CollisionDensity flat = CollisionDensity::from_name("constant", lambda0);
  const ComparisonReport r =
      compare_pipelines(model, sine, kPol, 200000, 5, 5e-3, diag);
  for (const CheckResult& ch : r.checks)
    if (ch.name == "final_inversion_error")
      c.bound("|dw(T)| lab vs closed form", ch.value, 5e-3);

  // Oscillation frequency of w against the loop period, fitted for a
  // symmetric and an asymmetric kick density with identical f.
  const TwoLevelGeometry& g = model.geometry();
  const ReducedConstants rc = ReducedConstants::from(kDelta, kOmega);
  std::vector<double> grid, w_flat, w_sine;
  for (double big_t = 350.0; big_t <= 650.0 + 1e-9; big_t += 2.5) {
    const int steps = int(std::lround(30.0 * big_t));
    grid.push_back(big_t);
    w_flat.push_back(dephasing_final_inversion(kDelta, kOmega, flat.f(),
                                               flat.g(), kPol, big_t, steps,
                                               diag));
    w_sine.push_back(dephasing_final_inversion(kDelta, kOmega, sine.f(),
                                               sine.g(), kPol, big_t, steps,
                                               diag));
  }
  const double dc_rate = lambda0 * g.sin_theta * g.sin_theta;
  const double osc_rate = lambda0 * rc.kk;
  const double lo = 2.0 * g.e - 0.0015, hi = 2.0 * g.e + 0.0025;
  const FrequencyFit f_flat =
      fit_shifted_cosine(grid, w_flat, dc_rate, osc_rate, lo, hi);
  const FrequencyFit f_sine =
      fit_shifted_cosine(grid, w_sine, dc_rate, osc_rate, lo, hi);
  const double shift = f_sine.omega - f_flat.omega;
  const double expected = sine.g() * g.cos_theta;
  c.bound("frequency shift error (relative)", shift / expected - 1.0, 0.1);
  c.note("measured shift=" + num(shift) + " expected=" + num(expected) +
         " fit rms=" + num(f_flat.rms) + "/" + num(f_sine.rms));
  return c.result(2, "dephasing inversion and frequency shift");
}

inline CriterionResult criterion_cone_holonomy() {
  Criterion c;
  for (double theta_b : {M_PI / 6.0, M_PI / 3.0, M_PI / 2.0}) {
    const SpinModel model(1.0, theta_b, 1.0);
    const TransportFrame frame = build_frame(model.path(), 10000);
    const PhaseDecomposition ph = holonomy(frame);
    const double target = M_PI * (1.0 - std::cos(theta_b));
    c.bound("| |phase| - pi(1-cos) | at theta_B=" + num(theta_b),
            std::abs(ph.geometric[1]) - target, 1e-5);
    c.bound("band phase sum at theta_B=" + num(theta_b),
            wrap_angle(ph.geometric[0] + ph.geometric[1]), 1e-8);
  }
  return c.result(3, "cone holonomy equals half solid angle");
}

inline CriterionResult criterion_echo(EvolveDiagnostics* diag) {
  Criterion c;
  const double theta_b = 1.0;
  const double big_t = 30000.0;
  const double f = 1.0 / big_t;
  const double phi_g = -M_PI * (1.0 - std::cos(theta_b));  // upper band
  const double target = 4.0 * phi_g;

  const EchoResult base =
      run_echo(SpinModel(1.0, theta_b, big_t), f, 0.3, 1500000, diag);
  const EchoResult doubled =
      run_echo(SpinModel(2.0, theta_b, big_t), f, 0.3, 3000000, diag);
  const EchoResult undamped =
      run_echo(SpinModel(1.0, theta_b, big_t), 0.0, 0.3, 1500000, diag);

  c.bound("arg - 4*phi_g (damped)", wrap_angle(base.arg_change - target), 1e-4);
  c.bound("arg - 4*phi_g (energy doubled)",
          wrap_angle(doubled.arg_change - target), 1e-4);
  c.bound("arg - 4*phi_g (undamped)",
          wrap_angle(undamped.arg_change - target), 1e-4);
  c.bound("arg shift under energy doubling",
          wrap_angle(doubled.arg_change - base.arg_change), 1e-4);
  c.bound("arg shift under dephasing",
          wrap_angle(base.arg_change - undamped.arg_change), 1e-4);
  const double expect_mod = std::exp(-2.0 * big_t * f);
  c.bound("modulus ratio error (damped, relative)",
          base.modulus_ratio / expect_mod - 1.0, 1e-3);
  c.bound("modulus ratio error (energy doubled, relative)",
          doubled.modulus_ratio / expect_mod - 1.0, 1e-3);
  c.bound("modulus ratio error (undamped, relative)",
          undamped.modulus_ratio - 1.0, 1e-3);
  return c.result(4, "echo doubles the geometric phase");
}

inline CriterionResult criterion_adiabatic_scan(EvolveDiagnostics* diag) {
  Criterion c;
  ScanSpec grid;
  grid.parameter = "T";
  grid.values = {100.0, 200.0, 400.0, 800.0};
  const ComparisonReport r =
      adiabatic_scan(kDelta, kOmega, 0.5, grid, 200, kPol, diag);
  if (r.inconclusive) {
    c.note("power-law fit inconclusive, residual=" + num(r.fit.residual));
    c.ok = false;
  } else {
    c.bound("slope + 1", r.fit.slope + 1.0, 0.15);
    c.note("residual=" + num(r.fit.residual));
  }
  for (const CheckResult& ch : r.checks)
    if (ch.name == "step_doubling_change")
      c.bound("step-doubling relative change", ch.value, 0.05);
  return c.result(5, "adiabatic gap closes as 1/T");
}

inline CriterionResult criterion_secular_structure(unsigned long long seed) {
  Criterion c;
  const LaserModel model(kDelta, kOmega, kLambda, 500.0);
  const CollisionDensity sine = CollisionDensity::from_name("shifted-sine", 0.005);
  const ComparisonReport r = secular_structure_check(model, sine, seed);
  for (const CheckResult& ch : r.checks) {
    if (ch.name == "population_coherence_coupling")
      c.bound("population-coherence coupling (exact zero)", ch.value, 0.0);
    if (ch.name == "phase_replacement_change")
      c.bound("generator change under |entry| replacement", ch.value, 1e-14);
  }
  c.note("probes: emission at three drive phases, kicks at two phases x two "
         "angles, one random operator (seed " + std::to_string(seed) + ")");
  return c.result(6, "averaged generator structure");
}

inline CriterionResult criterion_beta_average(EvolveDiagnostics* diag) {
  Criterion c;
  ScanSpec grid;
  grid.parameter = "T";
  grid.values = {100.0, 200.0, 400.0, 800.0};
  const ComparisonReport r =
      beta_average_check(kDelta, kOmega, 0.5, grid, 200, kPol, diag);
  for (const CheckResult& ch : r.checks) {
    if (ch.name == "quadrature_generator_difference")
      c.bound("4-node vs 64-node generator difference", ch.value, 1e-13);
    if (ch.name == "undamped_distance")
      c.bound("undamped trajectory distance", ch.value, 1e-12);
  }
  if (r.inconclusive) {
    c.note("power-law fit inconclusive, residual=" + num(r.fit.residual));
    c.ok = false;
  } else {
    c.bound("slope + 1", r.fit.slope + 1.0, 0.15);
  }
  return c.result(7, "drive-phase averaged generator");
}

inline CriterionResult criterion_solver_invariants(const EvolveDiagnostics& d) {
  Criterion c;
  c.bound("per-step trace drift x 1e4", d.max_trace_drift * 1e4, 1e-8);
  c.bound("hermiticity residual", d.max_herm_residual, 1e-10);
  c.bound("eigenvalue floor breach", std::min(0.0, d.min_eigenvalue), 1e-8);
  c.note("accumulated over " + std::to_string(d.steps) + " solver steps");
  return c.result(8, "solver invariants across all runs");
}

inline CriterionResult criterion_open_path_consistency() {
  Criterion c;
  {
    const LaserModel model(kDelta, kOmega, 0.0, 500.0);
    const TransportFrame frame = build_frame(model.path(), 4000);
    const PhaseDecomposition cyc = holonomy(frame);
    const PhaseDecomposition open = pati_reference(
        frame, eig_hermitian(model.path().h(500.0)).vectors);
    for (size_t b = 0; b < cyc.geometric.size(); ++b)
      c.bound("drive loop band " + std::to_string(b) + " phase difference",
              wrap_angle(cyc.geometric[b] - open.geometric[b]), 1e-8);
  }
  {
    const SpinModel model(1.0, 1.0, 500.0);
    const TransportFrame frame = build_frame(model.path(), 4000);
    const PhaseDecomposition cyc = holonomy(frame);
    const PhaseDecomposition open = pati_reference(
        frame, eig_hermitian(model.path().h(500.0)).vectors);
    for (size_t b = 0; b < cyc.geometric.size(); ++b)
      c.bound("cone loop band " + std::to_string(b) + " phase difference",
              wrap_angle(cyc.geometric[b] - open.geometric[b]), 1e-8);
  }
  return c.result(9, "open-path holonomy matches cyclic holonomy");
}

inline CriterionResult criterion_degenerate_blocks() {
  Criterion c;
  // Spin-1 quadrupole loop: H = E (n.S)^2 has spectrum {0, E, E}, so the
  // upper pair transports as a genuine 2x2 block.
  const CMatrix sx{{0.0, M_SQRT1_2, 0.0},
                   {M_SQRT1_2, 0.0, M_SQRT1_2},
                   {0.0, M_SQRT1_2, 0.0}};
  const CMatrix sy{{0.0, cplx(0.0, -M_SQRT1_2), 0.0},
                   {cplx(0.0, M_SQRT1_2), 0.0, cplx(0.0, -M_SQRT1_2)},
                   {0.0, cplx(0.0, M_SQRT1_2), 0.0}};
  const CMatrix sz = CMatrix::diagonal(std::vector<double>{1.0, 0.0, -1.0});

  HamiltonianPath quad;
  quad.dim = 3;
  quad.period = 1.0;
  quad.cyclic = true;
  quad.h = [sx, sy, sz](double t) {
    const double theta_b = 1.0;
    const double phi = 2.0 * M_PI * t;
    const CMatrix ns = sx * (std::sin(theta_b) * std::cos(phi)) +
                       sy * (std::sin(theta_b) * std::sin(phi)) +
                       sz * std::cos(theta_b);
    return ns * ns;
  };

  const std::vector<HolonomyBlock> blocks = nonabelian_holonomy(quad, 2000);
  bool saw_pair = false;
  for (const HolonomyBlock& b : blocks) {
    const CMatrix gram = b.block.adjoint() * b.block;
    const double dev = (gram - CMatrix::identity(gram.dim())).max_abs();
    c.bound("unitarity defect, block of " + std::to_string(b.bands.size()) +
                " at energy " + num(b.energy),
            dev, 1e-8);
    if (b.bands.size() == 2) saw_pair = true;
  }
  if (!saw_pair) {
    c.note("no two-fold degenerate block found");
    c.ok = false;
  }

  // Non-degenerate loop: every block must collapse to a single phase that
  // matches the transported-frame phase.
  const LaserModel model(kDelta, kOmega, 0.0, 500.0);
  const std::vector<HolonomyBlock> ab = nonabelian_holonomy(model.path(), 4000);
  const PhaseDecomposition ph = holonomy(build_frame(model.path(), 4000));
  bool all_single = true;
  for (const HolonomyBlock& b : ab) all_single = all_single && b.bands.size() == 1;
  if (!all_single) {
    c.note("non-degenerate loop produced a block larger than 1x1");
    c.ok = false;
  } else {
    for (const HolonomyBlock& b : ab)
      c.bound("single-band block phase vs frame phase, band " +
                  std::to_string(b.bands[0]),
              wrap_angle(std::arg(b.block(0, 0)) -
                         ph.geometric[size_t(b.bands[0])]),
              1e-6);
  }
  return c.result(10, "degenerate blocks unitary, single bands Abelian");
}

}  // namespace acceptance_detail

// Run all ten criteria, timing each; diagnostics from every integration are
// pooled for the solver-invariant criterion.
inline std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts = {}) {
  namespace ad = acceptance_detail;
  using clock = std::chrono::steady_clock;
  EvolveDiagnostics pool;
  std::vector<CriterionResult> out;

  const auto timed = [&out](CriterionResult r, clock::time_point t0) {
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back(std::move(r));
  };

  auto t0 = clock::now();
  timed(ad::criterion_emission(&pool), t0);
  t0 = clock::now();
  timed(ad::criterion_dephasing_shift(&pool), t0);
  t0 = clock::now();
  timed(ad::criterion_cone_holonomy(), t0);
  t0 = clock::now();
  timed(ad::criterion_echo(&pool), t0);
  t0 = clock::now();
  timed(ad::criterion_adiabatic_scan(&pool), t0);
  t0 = clock::now();
  timed(ad::criterion_secular_structure(opts.seed), t0);
  t0 = clock::now();
  timed(ad::criterion_beta_average(&pool), t0);
  t0 = clock::now();
  timed(ad::criterion_solver_invariants(pool), t0);
  t0 = clock::now();
  timed(ad::criterion_open_path_consistency(), t0);
  t0 = clock::now();
  timed(ad::criterion_degenerate_blocks(), t0);

  // The first criterion also carries a single-threaded runtime bound.
  if (!out.empty() && out[0].seconds >= 30.0) {
    out[0].passed = false;
    out[0].detail += "; runtime " + ad::num(out[0].seconds) + "s EXCEEDED 30s";
  }
  return out;
}

}  // namespace rotax

#pragma once
// Verification pipelines: the same evolution computed by independent routes
// (direct lab-frame integration, rotated-frame integration transformed back,
// closed-form band relaxation), convergence scans against the loop period,
// generator structure probes, frequency fits, and the spin echo protocol.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rotax/analytic.hpp"
#include "rotax/config.hpp"
#include "rotax/io.hpp"
#include "rotax/lindblad.hpp"
#include "rotax/models.hpp"
#include "rotax/transport.hpp"

namespace rotax {

inline void merge_diagnostics(EvolveDiagnostics& into,
                              const EvolveDiagnostics& d) {
  into.max_trace_drift = std::max(into.max_trace_drift, d.max_trace_drift);
  into.max_herm_residual = std::max(into.max_herm_residual, d.max_herm_residual);
  into.min_eigenvalue = std::min(into.min_eigenvalue, d.min_eigenvalue);
  into.steps += d.steps;
}

// Swept-parameter grid; slope fits need at least three strictly monotone
// values.
struct ScanSpec {
  std::string parameter;
  std::vector<double> values;

  void validate() const {
    if (values.size() < 3)
      throw Error("scan grid needs at least three points");
    const bool up = values[1] > values[0];
    for (size_t i = 0; i + 1 < values.size(); ++i) {
      const bool step_up = values[i + 1] > values[i];
      if (step_up != up || values[i + 1] == values[i])
        throw Error("scan grid must be strictly monotone");
    }
  }

  static ScanSpec geometric(const std::string& parameter, double first,
                            double factor, int count) {
    if (count < 3) throw Error("scan grid needs at least three points");
    if (!(first > 0.0) || !(factor > 0.0) || factor == 1.0)
      throw Error("geometric grid needs positive first value and factor != 1");
    ScanSpec s;
    s.parameter = parameter;
    double v = first;
    for (int i = 0; i < count; ++i) {
      s.values.push_back(v);
      v *= factor;
    }
    s.validate();
    return s;
  }
};

// Least-squares power law y = c x^slope on log-log coordinates.  The rms
// log residual is reported alongside; residuals above 0.2 mark the fit
// inconclusive instead of failing any downstream check.
struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;  // log of the prefactor
  double residual = 0.0;   // rms of log-space residuals
  bool conclusive = false;
};

inline PowerLawFit fit_power_law(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimMismatch("fit_power_law: length mismatch");
  const size_t n = x.size();
  if (n < 3) throw Error("fit_power_law: need at least three points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw Error("fit_power_law: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  // d is n^2 times the log-abscissa variance; compare against the roundoff
  // floor of the cancellation instead of exact zero.
  const double d = double(n) * sxx - sx * sx;
  if (!(d > double(n) * sxx * 1e-12))
    throw Error("fit_power_law: degenerate abscissae");
  PowerLawFit f;
  f.slope = (double(n) * sxy - sx * sy) / d;
  f.intercept = (sy - f.slope * sx) / double(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / double(n));
  f.conclusive = f.residual <= 0.2;
  return f;
}

// One named check: measured value against an inclusive interval.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool within = false;
};

inline CheckResult check_range(const std::string& name, double value,
                               double lo, double hi) {
  return {name, value, lo, hi, value >= lo && value <= hi};
}
inline CheckResult check_abs(const std::string& name, double value,
                             double bound) {
  return {name, value, -bound, bound, std::abs(value) <= bound};
}

struct MetricSeries {
  std::string name;
  std::vector<double> values;
};

// Scan or comparison outcome: grid-aligned metric series, named scalars,
// explicit checks with their numbers, and an optional power-law fit.
struct ComparisonReport {
  std::string title;
  std::string parameter;
  std::vector<double> grid;
  std::vector<MetricSeries> metrics;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<CheckResult> checks;
  PowerLawFit fit;
  bool has_fit = false;
  bool inconclusive = false;
  unsigned long long seed = 0;

  void add_metric(const std::string& name, std::vector<double> values) {
    if (values.size() != grid.size())
      throw DimMismatch("metric series does not match the grid");
    metrics.push_back({name, std::move(values)});
  }

  bool passed() const {
    for (const CheckResult& c : checks)
      if (!c.within) return false;
    return true;
  }

  nlohmann::json to_json(const Config& cfg) const {
    nlohmann::json j;
    j["title"] = title;
    j["seed"] = seed;
    j["passed"] = passed();
    j["inconclusive"] = inconclusive;
    if (!parameter.empty()) j["parameter"] = parameter;
    if (!grid.empty()) j["grid"] = grid;
    nlohmann::json jm = nlohmann::json::object();
    for (const MetricSeries& m : metrics) jm[m.name] = m.values;
    j["metrics"] = jm;
    nlohmann::json js = nlohmann::json::object();
    for (const auto& s : scalars) js[s.first] = s.second;
    j["scalars"] = js;
    nlohmann::json jc = nlohmann::json::array();
    for (const CheckResult& c : checks)
      jc.push_back({{"name", c.name},
                    {"value", c.value},
                    {"lo", c.lo},
                    {"hi", c.hi},
                    {"pass", c.within}});
    j["checks"] = jc;
    if (has_fit)
      j["fit"] = {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"residual", fit.residual},
                  {"conclusive", fit.conclusive}};
    j["config"] = config_json(cfg);
    return j;
  }

  Table to_table() const {
    Table t;
    t.add(parameter.empty() ? "grid" : parameter, grid);
    for (const MetricSeries& m : metrics) t.add(m.name, m.values);
    return t;
  }
};

inline double inversion(const CMatrix& rho) {
  return (rho(0, 0) - rho(1, 1)).real();
}

// The same trajectory computed three ways, sampled on a shared time grid of
// lab-frame states.
struct PipelineCurves {
  std::vector<double> times;
  std::vector<CMatrix> direct;    // lab-frame master equation
  std::vector<CMatrix> rotated;   // band-frame integration mapped back
  std::vector<CMatrix> analytic;  // closed-form band relaxation mapped back
};

namespace detail {

inline void check_sampling(int steps, int samples) {
  if (samples < 2) throw Error("pipelines: need at least two sample times");
  if (steps < samples - 1 || steps % (samples - 1) != 0)
    throw Error("pipelines: steps must be a positive multiple of the "
                "sample interval count");
}

// The rotating-axis unitary of the drive in closed form, A(t) = V(t) V(0)^d.
inline CMatrix drive_axis_unitary(const TwoLevelGeometry& g, double phi,
                                  const CMatrix& v0) {
  return dressed_basis(g, phi) * v0.adjoint();
}

inline CMatrix band_hamiltonian(const TwoLevelGeometry& g, const CMatrix& v0) {
  return v0 * CMatrix::diagonal({cplx(g.e, 0.0), cplx(-g.e, 0.0)}) *
         v0.adjoint();
}

inline double mixing_angle(const TwoLevelGeometry& g) {
  return std::atan2(g.sin_theta, g.cos_theta);
}

// Lab-frame state of the closed-form band solution at drive phase phi.
inline CMatrix band_state_to_lab(const TwoLevelGeometry& g, double phi,
                                 const BandState& s) {
  CMatrix rho(2);
  rho(0, 0) = s.a;
  rho(0, 1) = s.b;
  rho(1, 0) = std::conj(s.b);
  rho(1, 1) = 1.0 - s.a;
  const CMatrix v = dressed_basis(g, phi);
  return v * rho * v.adjoint();
}

// Run the direct and rotated pipelines over the sample grid and fill in the
// analytic states from the supplied band solution.
inline PipelineCurves run_pipelines(
    const LaserModel& model, double p, int steps, int samples,
    const Rhs& direct_rhs, const Rhs& rotated_rhs,
    const std::function<BandState(double)>& band_solution,
    EvolveDiagnostics* diag) {
  check_sampling(steps, samples);
  const TwoLevelGeometry& g = model.geometry();
  const CMatrix v0 = dressed_basis(g, 0.0);
  const int seg_steps = steps / (samples - 1);

  PipelineCurves out;
  DensityMatrix rho_direct(model.initial_state(p));
  DensityMatrix rho_rot(model.initial_state(p));  // A(0) = 1
  for (int k = 0; k < samples; ++k) {
    const double t = model.period() * double(k) / double(samples - 1);
    if (k > 0) {
      const double t0 = model.period() * double(k - 1) / double(samples - 1);
      EvolveDiagnostics d1, d2;
      rho_direct = evolve(direct_rhs, rho_direct, t0, t, seg_steps, &d1);
      rho_rot = evolve(rotated_rhs, rho_rot, t0, t, seg_steps, &d2);
      if (diag) {
        merge_diagnostics(*diag, d1);
        merge_diagnostics(*diag, d2);
      }
    }
    out.times.push_back(t);
    out.direct.push_back(rho_direct.mat());
    const CMatrix a = drive_axis_unitary(g, model.phase(t), v0);
    out.rotated.push_back(from_frame(a, rho_rot.mat()));
    out.analytic.push_back(
        band_state_to_lab(g, model.phase(t), band_solution(t)));
  }
  return out;
}

}  // namespace detail

// Spontaneous-emission run: lab master equation vs rotated-frame adiabatic
// equation (band energies plus the rotated jump operator) vs closed form.
inline PipelineCurves emission_pipelines(const LaserModel& model, double p,
                                         int steps, int samples,
                                         EvolveDiagnostics* diag = nullptr) {
  const TwoLevelGeometry& g = model.geometry();
  const CMatrix v0 = dressed_basis(g, 0.0);
  const CMatrix h_band = detail::band_hamiltonian(g, v0);
  const DissipatorSet ambient = model.emission();
  const bool damped = ambient.total_weight() > 0.0;
  const double theta = detail::mixing_angle(g);
  const BandState s0 = band_initials(theta, p);

  const Rhs direct = [model, ambient](double t, const CMatrix& rho) {
    return lindblad_rhs(model.hamiltonian(t), ambient, rho);
  };
  const Rhs rotated = [model, ambient, h_band, v0, damped,
                       g](double t, const CMatrix& rho) {
    CMatrix out = commutator(h_band, rho) * cplx(0.0, -1.0);
    if (damped) {
      const CMatrix a = detail::drive_axis_unitary(g, model.phase(t), v0);
      out += dissipator_action(ambient.transformed(a), rho);
    }
    return out;
  };
  const double lambda = model.lambda();
  const double e = g.e;
  const auto band = [theta, lambda, e, s0](double t) {
    return emission_ab(t, theta, lambda, e, s0.a, s0.b);
  };
  return detail::run_pipelines(model, p, steps, samples, direct, rotated, band,
                               diag);
}

// Collisional-dephasing run: the kicks act between the bare-level
// projectors, so the rotated pipeline sees them through the axis unitary.
inline PipelineCurves dephasing_pipelines(const LaserModel& model,
                                          const CollisionDensity& density,
                                          double p, int steps, int samples,
                                          EvolveDiagnostics* diag = nullptr) {
  if (model.lambda() != 0.0)
    throw Error("dephasing_pipelines: emission must be switched off");
  const TwoLevelGeometry& g = model.geometry();
  const CMatrix v0 = dressed_basis(g, 0.0);
  const CMatrix h_band = detail::band_hamiltonian(g, v0);
  const double f = density.f(), gm = density.g();
  const double theta = detail::mixing_angle(g);
  const BandState s0 = band_initials(theta, p);

  const Rhs direct = [model, f, gm](double t, const CMatrix& rho) {
    return commutator(model.hamiltonian(t), rho) * cplx(0.0, -1.0) +
           projector_dephasing_action(f, gm, kProjE, kProjG, rho);
  };
  const Rhs rotated = [model, f, gm, h_band, v0, g](double t,
                                                    const CMatrix& rho) {
    const CMatrix a = detail::drive_axis_unitary(g, model.phase(t), v0);
    return commutator(h_band, rho) * cplx(0.0, -1.0) +
           projector_dephasing_action(f, gm, conjugate_by(a, kProjE),
                                      conjugate_by(a, kProjG), rho);
  };
  const double e = g.e;
  const auto band = [theta, f, gm, e, s0](double t) {
    return dephasing_ab(t, theta, f, gm, e, s0.a, s0.b);
  };
  return detail::run_pipelines(model, p, steps, samples, direct, rotated, band,
                               diag);
}

// Pairwise summary of a three-way pipeline run: maximal Frobenius distances
// over the grid and the final inversion difference against the closed form.
inline ComparisonReport summarize_pipelines(const PipelineCurves& c,
                                            const std::string& title,
                                            double w_tolerance) {
  ComparisonReport r;
  r.title = title;
  r.parameter = "t";
  r.grid = c.times;
  const size_t n = c.times.size();
  std::vector<double> wd(n), wr(n), wa(n), d_dr(n), d_da(n), d_ra(n);
  for (size_t i = 0; i < n; ++i) {
    wd[i] = inversion(c.direct[i]);
    wr[i] = inversion(c.rotated[i]);
    wa[i] = inversion(c.analytic[i]);
    d_dr[i] = frobenius_distance(c.direct[i], c.rotated[i]);
    d_da[i] = frobenius_distance(c.direct[i], c.analytic[i]);
    d_ra[i] = frobenius_distance(c.rotated[i], c.analytic[i]);
  }
  r.add_metric("w_direct", wd);
  r.add_metric("w_rotated", wr);
  r.add_metric("w_analytic", wa);
  r.add_metric("dist_direct_rotated", d_dr);
  r.add_metric("dist_direct_analytic", d_da);
  r.add_metric("dist_rotated_analytic", d_ra);
  double m_dr = 0.0, m_da = 0.0, m_ra = 0.0;
  for (size_t i = 0; i < n; ++i) {
    m_dr = std::max(m_dr, d_dr[i]);
    m_da = std::max(m_da, d_da[i]);
    m_ra = std::max(m_ra, d_ra[i]);
  }
  r.scalars.emplace_back("max_dist_direct_rotated", m_dr);
  r.scalars.emplace_back("max_dist_direct_analytic", m_da);
  r.scalars.emplace_back("max_dist_rotated_analytic", m_ra);
  r.scalars.emplace_back("final_w_direct", wd.back());
  r.scalars.emplace_back("final_w_rotated", wr.back());
  r.scalars.emplace_back("final_w_analytic", wa.back());
  r.checks.push_back(
      check_abs("final_inversion_error", wd.back() - wa.back(), w_tolerance));
  return r;
}

// Three-way comparison for the damped driven atom.
inline ComparisonReport compare_pipelines(const LaserModel& model, double p,
                                          int steps, int samples,
                                          double w_tolerance,
                                          EvolveDiagnostics* diag = nullptr) {
  return summarize_pipelines(emission_pipelines(model, p, steps, samples, diag),
                             "emission pipelines", w_tolerance);
}

// Three-way comparison for the collisionally dephased driven atom.
inline ComparisonReport compare_pipelines(const LaserModel& model,
                                          const CollisionDensity& density,
                                          double p, int steps, int samples,
                                          double w_tolerance,
                                          EvolveDiagnostics* diag = nullptr) {
  return summarize_pipelines(
      dephasing_pipelines(model, density, p, steps, samples, diag),
      "dephasing pipelines", w_tolerance);
}

// Damped-cosine frequency estimate: least squares of
// w(T) = c u(T) + (a cos wT + b sin wT) v(T) with known envelopes u and v,
// minimized over the frequency by coarse scan plus golden-section descent.
struct FrequencyFit {
  double omega = 0.0;
  double rms = 0.0;
  double dc = 0.0;
  double amp_cos = 0.0;
  double amp_sin = 0.0;
};

namespace detail {

// Solve the 3x3 normal equations at fixed frequency; returns the rms.
inline double sinusoid_rms(const std::vector<double>& t,
                           const std::vector<double>& w,
                           const std::vector<double>& u,
                           const std::vector<double>& v, double omega,
                           double coef[3]) {
  const size_t n = t.size();
  double m[3][4] = {{0.0}};
  for (size_t i = 0; i < n; ++i) {
    const double basis[3] = {u[i], v[i] * std::cos(omega * t[i]),
                             v[i] * std::sin(omega * t[i])};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
      m[r][3] += basis[r] * w[i];
    }
  }
  // Gaussian elimination with partial pivoting on the augmented system.
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    for (int c = 0; c < 4; ++c) std::swap(m[piv][c], m[col][c]);
    if (m[col][col] == 0.0) throw Error("sinusoid fit: singular normal matrix");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double fct = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= fct * m[col][c];
    }
  }
  for (int r = 0; r < 3; ++r) coef[r] = m[r][3] / m[r][r];
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double fitv = coef[0] * u[i] +
                        coef[1] * v[i] * std::cos(omega * t[i]) +
                        coef[2] * v[i] * std::sin(omega * t[i]);
    ss += (w[i] - fitv) * (w[i] - fitv);
  }
  return std::sqrt(ss / double(n));
}

}  // namespace detail

inline FrequencyFit fit_shifted_cosine(const std::vector<double>& t,
                                       const std::vector<double>& w,
                                       double dc_rate, double osc_rate,
                                       double omega_lo, double omega_hi) {
  if (t.size() != w.size()) throw DimMismatch("frequency fit: length mismatch");
  if (t.size() < 8) throw Error("frequency fit: need at least eight samples");
  if (!(omega_hi > omega_lo)) throw Error("frequency fit: empty bracket");
  const size_t n = t.size();
  std::vector<double> u(n), v(n);
  for (size_t i = 0; i < n; ++i) {
    u[i] = std::exp(-dc_rate * t[i]);
    v[i] = std::exp(-osc_rate * t[i]);
  }

  double coef[3];
  const int scan = 240;
  double best_omega = omega_lo, best_rms = 1e300;
  for (int k = 0; k <= scan; ++k) {
    const double om = omega_lo + (omega_hi - omega_lo) * double(k) / scan;
    const double rms = detail::sinusoid_rms(t, w, u, v, om, coef);
    if (rms < best_rms) {
      best_rms = rms;
      best_omega = om;
    }
  }
  const double step = (omega_hi - omega_lo) / scan;
  double a = best_omega - step, b = best_omega + step;
  const double gold = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gold * (b - a), x2 = a + gold * (b - a);
  double f1 = detail::sinusoid_rms(t, w, u, v, x1, coef);
  double f2 = detail::sinusoid_rms(t, w, u, v, x2, coef);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gold * (b - a);
      f1 = detail::sinusoid_rms(t, w, u, v, x1, coef);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gold * (b - a);
      f2 = detail::sinusoid_rms(t, w, u, v, x2, coef);
    }
  }
  FrequencyFit fit;
  fit.omega = 0.5 * (a + b);
  fit.rms = detail::sinusoid_rms(t, w, u, v, fit.omega, coef);
  fit.dc = coef[0];
  fit.amp_cos = coef[1];
  fit.amp_sin = coef[2];
  return fit;
}

// Final inversion of one direct dephasing run of duration big_t, used to
// trace the oscillation of w against the loop period.
inline double dephasing_final_inversion(double delta, double omega, double f,
                                        double g, double p, double big_t,
                                        int steps,
                                        EvolveDiagnostics* diag = nullptr) {
  const LaserModel model(delta, omega, 0.0, big_t);
  const Rhs direct = [model, f, g](double t, const CMatrix& rho) {
    return commutator(model.hamiltonian(t), rho) * cplx(0.0, -1.0) +
           projector_dephasing_action(f, g, kProjE, kProjG, rho);
  };
  EvolveDiagnostics d;
  const DensityMatrix rho =
      evolve(direct, DensityMatrix(model.initial_state(p)), 0.0, big_t, steps,
             &d);
  if (diag) merge_diagnostics(*diag, d);
  return inversion(rho.mat());
}

// Distance at t = T between the rotated-frame equation with the exact
// frame-rotation term and its adiabatic truncation, sharing one transported
// frame.  The frame carries twice the solver resolution so RK4 half-steps
// land on grid nodes.
inline double adiabatic_gap_distance(const HamiltonianPath& path,
                                     const DissipatorSet& ambient,
                                     const DensityMatrix& rho0, int steps,
                                     EvolveDiagnostics* diag = nullptr) {
  TransportFrame frame = build_frame(path, 2 * steps);
  EvolveDiagnostics d1, d2;
  CMatrix full(path.dim), adiab(path.dim);
  {
    const Rhs rhs = rotated_full_rhs(frame, path, ambient);
    full = evolve(rhs, rho0, 0.0, path.period, steps, &d1).mat();
  }
  {
    const Rhs rhs = rotated_adiabatic_rhs(std::move(frame), ambient);
    adiab = evolve(rhs, rho0, 0.0, path.period, steps, &d2).mat();
  }
  if (diag) {
    merge_diagnostics(*diag, d1);
    merge_diagnostics(*diag, d2);
  }
  return frobenius_distance(full, adiab);
}

inline double adiabatic_gap_distance(const LaserModel& model, double p,
                                     int steps,
                                     EvolveDiagnostics* diag = nullptr) {
  return adiabatic_gap_distance(model.path(), model.emission(),
                                DensityMatrix(model.initial_state(p)), steps,
                                diag);
}

// Scan of the full-vs-adiabatic distance against the loop period with the
// damping-per-loop product held fixed, plus a step-doubling control at the
// middle grid point.
inline ComparisonReport adiabatic_scan(double delta, double omega,
                                       double lambda_t, const ScanSpec& grid,
                                       int steps_per_unit_time, double p,
                                       EvolveDiagnostics* diag = nullptr) {
  grid.validate();
  ComparisonReport r;
  r.title = "adiabatic gap scan";
  r.parameter = grid.parameter.empty() ? "T" : grid.parameter;
  r.grid = grid.values;

  std::vector<double> dist;
  for (double big_t : grid.values) {
    const LaserModel model(delta, omega, lambda_t / big_t, big_t);
    const int steps = int(std::lround(steps_per_unit_time * big_t));
    dist.push_back(adiabatic_gap_distance(model, p, steps, diag));
  }
  r.add_metric("distance", dist);
  r.fit = fit_power_law(grid.values, dist);
  r.has_fit = true;
  if (r.fit.conclusive)
    r.checks.push_back(check_range("slope", r.fit.slope, -1.15, -0.85));
  else
    r.inconclusive = true;

  const double mid_t = grid.values[grid.values.size() / 2];
  const LaserModel mid_model(delta, omega, lambda_t / mid_t, mid_t);
  const int mid_steps = int(std::lround(steps_per_unit_time * mid_t));
  const double d1 = adiabatic_gap_distance(mid_model, p, mid_steps, diag);
  const double d2 = adiabatic_gap_distance(mid_model, p, 2 * mid_steps, diag);
  r.scalars.emplace_back("control_distance", d1);
  r.scalars.emplace_back("control_distance_refined", d2);
  const double rel = std::abs(d2 - d1) / std::max(1e-300, std::abs(d1));
  r.checks.push_back(check_range("step_doubling_change", rel, 0.0, 0.05));
  return r;
}

// 4x4 real generator of a two-level superoperator on the coordinates
// (rho_00, rho_11, Re rho_01, Im rho_01), probed column by column.
using RealGenerator = std::array<std::array<double, 4>, 4>;

inline RealGenerator real_generator(
    const std::function<CMatrix(const CMatrix&)>& action) {
  const CMatrix basis[4] = {
      CMatrix{{1.0, 0.0}, {0.0, 0.0}},
      CMatrix{{0.0, 0.0}, {0.0, 1.0}},
      CMatrix{{0.0, 1.0}, {1.0, 0.0}},
      CMatrix{{0.0, cplx(0.0, 1.0)}, {cplx(0.0, -1.0), 0.0}}};
  RealGenerator gen{};
  for (int j = 0; j < 4; ++j) {
    const CMatrix out = action(basis[j]);
    gen[0][size_t(j)] = out(0, 0).real();
    gen[1][size_t(j)] = out(1, 1).real();
    gen[2][size_t(j)] = out(0, 1).real();
    gen[3][size_t(j)] = out(0, 1).imag();
  }
  return gen;
}

inline double generator_max_difference(const RealGenerator& a,
                                       const RealGenerator& b) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      m = std::max(m, std::abs(a[size_t(i)][size_t(j)] -
                               b[size_t(i)][size_t(j)]));
  return m;
}

// Largest coupling between the population pair and the coherence pair.
inline double generator_offblock(const RealGenerator& g) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool pop_row = i < 2, pop_col = j < 2;
      if (pop_row != pop_col)
        m = std::max(m, std::abs(g[size_t(i)][size_t(j)]));
    }
  return m;
}

// Same operators with each off-diagonal entry replaced by its modulus.
inline DissipatorSet absolute_offdiagonals(const DissipatorSet& set) {
  DissipatorSet out;
  for (const Dissipator& d : set.items()) {
    CMatrix op = d.op;
    for (int i = 0; i < op.dim(); ++i)
      for (int j = 0; j < op.dim(); ++j)
        if (i != j) op(i, j) = std::abs(op(i, j));
    out.add(op, d.weight);
  }
  return out;
}

// Structure probe of the oscillation-averaged generator: the population and
// coherence sectors must decouple exactly and the generator must not change
// when off-diagonal jump-operator entries lose their phases.
struct SecularStructure {
  double offblock = 0.0;      // population-coherence coupling
  double phase_change = 0.0;  // generator shift under the modulus map
};

inline SecularStructure secular_probe(const std::vector<double>& energies,
                                      const DissipatorSet& set) {
  const RealGenerator g = real_generator([&](const CMatrix& rho) {
    return secular_rhs(energies, set, rho);
  });
  const DissipatorSet flat = absolute_offdiagonals(set);
  const RealGenerator g2 = real_generator([&](const CMatrix& rho) {
    return secular_rhs(energies, flat, rho);
  });
  SecularStructure s;
  s.offblock = std::max(generator_offblock(g), generator_offblock(g2));
  s.phase_change = generator_max_difference(g, g2);
  return s;
}

// Structure report over three operator families in the energy eigenbasis:
// the band-frame emission operator at several drive phases, the bare-level
// kick operators seen from several drive phases, and a seeded random
// operator.  Both structure properties must hold for every probe.
inline ComparisonReport secular_structure_check(const LaserModel& model,
                                                const CollisionDensity& density,
                                                unsigned long long seed = 42) {
  const TwoLevelGeometry& g = model.geometry();
  const std::vector<double> energies = {g.e, -g.e};
  const double lam = model.lambda() > 0.0 ? model.lambda() : 1.0;

  std::vector<DissipatorSet> probes;
  for (double beta : {0.0, 1.0, 2.5}) {
    DissipatorSet s;
    s.add(conjugate_by(dressed_basis(g, beta), kLowerOp), lam);
    probes.push_back(std::move(s));
  }
  for (double beta : {0.0, 1.7}) {
    DissipatorSet s;
    for (double alpha : {0.6, -2.1})
      s.add(conjugate_by(dressed_basis(g, beta),
                         phase_kick_op(alpha, kProjE, kProjG)),
            density.density(alpha));
    probes.push_back(std::move(s));
  }
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix op(2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) op(i, j) = cplx(gauss(rng), gauss(rng));
    DissipatorSet s;
    s.add(op, 1.0);
    probes.push_back(std::move(s));
  }

  ComparisonReport r;
  r.title = "averaged-generator structure";
  r.parameter = "probe";
  r.seed = seed;
  std::vector<double> off, ph;
  for (size_t k = 0; k < probes.size(); ++k) {
    r.grid.push_back(double(k));
    const SecularStructure s = secular_probe(energies, probes[k]);
    off.push_back(s.offblock);
    ph.push_back(s.phase_change);
  }
  r.add_metric("population_coherence_coupling", off);
  r.add_metric("phase_replacement_change", ph);
  const double max_off = *std::max_element(off.begin(), off.end());
  const double max_ph = *std::max_element(ph.begin(), ph.end());
  r.scalars.emplace_back("max_population_coherence_coupling", max_off);
  r.scalars.emplace_back("max_phase_replacement_change", max_ph);
  r.checks.push_back(
      check_range("population_coherence_coupling", max_off, 0.0, 0.0));
  r.checks.push_back(
      check_range("phase_replacement_change", max_ph, 0.0, 1e-14));
  return r;
}

// Phase-replacement family for the rotated emission operator.  Seen from
// the drive-axis frame the jump operator has fixed band-diagonal entries
// +-cs and off-band entries of fixed modulus s^2, c^2 whose slowly drifting
// phase only enters observables through that modulus; each family member
// pins one constant phase beta in its place, so averaging over beta is an
// average over a degree-2 trigonometric polynomial and a uniform grid of
// four or more nodes integrates it exactly.
inline std::vector<DissipatorSet> drive_phase_sets(const LaserModel& model,
                                                   int nodes) {
  const TwoLevelGeometry& g = model.geometry();
  const CMatrix v0 = dressed_basis(g, 0.0);
  const double cs = 0.5 * g.sin_theta;
  std::vector<DissipatorSet> sets;
  for (double beta : phase_nodes(nodes)) {
    const CMatrix band{{cs, std::polar(g.s2, -beta)},
                       {std::polar(g.c2, beta), -cs}};
    DissipatorSet s;
    s.add(v0 * band * v0.adjoint(), model.lambda());
    sets.push_back(std::move(s));
  }
  return sets;
}

// 4x4 real generator of the drive-phase averaged dissipative action.
inline RealGenerator phase_average_generator(const LaserModel& model,
                                             int nodes) {
  const std::vector<DissipatorSet> sets = drive_phase_sets(model, nodes);
  return real_generator([&](const CMatrix& rho) {
    CMatrix acc(rho.dim());
    for (const DissipatorSet& s : sets) acc += dissipator_action(s, rho);
    return acc * (1.0 / double(sets.size()));
  });
}

// Largest distance along the loop between the rotated-frame evolution with
// the instantaneous jump operator and the phase-averaged generator.  The
// pointwise difference oscillates at the band splitting, so the maximum
// over checkpoints tracks the envelope rather than the endpoint phase.
inline double phase_average_distance(const LaserModel& model, double p,
                                     int steps, int nodes,
                                     EvolveDiagnostics* diag = nullptr,
                                     int checkpoints = 64) {
  if (steps < checkpoints || checkpoints < 1)
    throw Error("phase_average_distance: need at least one step per checkpoint");
  const TwoLevelGeometry& g = model.geometry();
  const CMatrix v0 = dressed_basis(g, 0.0);
  const CMatrix h_band = detail::band_hamiltonian(g, v0);
  const DissipatorSet ambient = model.emission();

  const Rhs instantaneous = [model, ambient, h_band, v0,
                             g](double t, const CMatrix& rho) {
    const CMatrix a = detail::drive_axis_unitary(g, model.phase(t), v0);
    return commutator(h_band, rho) * cplx(0.0, -1.0) +
           dissipator_action(ambient.transformed(a), rho);
  };
  const std::vector<DissipatorSet> sets = drive_phase_sets(model, nodes);
  const Rhs averaged = [sets, h_band](double /*t*/, const CMatrix& rho) {
    return phase_averaged_rhs(h_band, sets, rho);
  };

  const double h = model.period() / double(steps);
  CMatrix r1 = model.initial_state(p);
  CMatrix r2 = r1;
  double max_dist = 0.0;
  long done = 0;
  for (int k = 1; k <= checkpoints; ++k) {
    const long target = std::lround(double(steps) * double(k) / checkpoints);
    const int seg = int(target - done);
    if (seg <= 0) continue;
    EvolveDiagnostics d1, d2;
    r1 = evolve(instantaneous, DensityMatrix(r1), double(done) * h,
                double(target) * h, seg, &d1).mat();
    r2 = evolve(averaged, DensityMatrix(r2), double(done) * h,
                double(target) * h, seg, &d2).mat();
    if (diag) {
      merge_diagnostics(*diag, d1);
      merge_diagnostics(*diag, d2);
    }
    max_dist = std::max(max_dist, frobenius_distance(r1, r2));
    done = target;
  }
  return max_dist;
}

// Period scan for the phase-averaging error with damping-per-loop fixed,
// plus the quadrature-exactness and undamped-limit spot checks.
inline ComparisonReport beta_average_check(double delta, double omega,
                                           double lambda_t,
                                           const ScanSpec& grid,
                                           int steps_per_unit_time, double p,
                                           EvolveDiagnostics* diag = nullptr) {
  grid.validate();
  ComparisonReport r;
  r.title = "drive-phase averaging scan";
  r.parameter = grid.parameter.empty() ? "T" : grid.parameter;
  r.grid = grid.values;

  std::vector<double> dist;
  for (double big_t : grid.values) {
    const LaserModel model(delta, omega, lambda_t / big_t, big_t);
    const int steps = int(std::lround(steps_per_unit_time * big_t));
    dist.push_back(phase_average_distance(model, p, steps, 4, diag));
  }
  r.add_metric("distance", dist);
  r.fit = fit_power_law(grid.values, dist);
  r.has_fit = true;
  if (r.fit.conclusive)
    r.checks.push_back(check_range("slope", r.fit.slope, -1.15, -0.85));
  else
    r.inconclusive = true;

  const double t0 = grid.values.front();
  const LaserModel probe(delta, omega, lambda_t / t0, t0);
  const double gen_diff = generator_max_difference(
      phase_average_generator(probe, 4), phase_average_generator(probe, 64));
  r.scalars.emplace_back("quadrature_generator_difference", gen_diff);
  r.checks.push_back(check_range("quadrature_generator_difference", gen_diff,
                                 0.0, 1e-13));

  const LaserModel undamped(delta, omega, 0.0, t0);
  const double d0 = phase_average_distance(
      undamped, p, int(std::lround(steps_per_unit_time * t0)), 4, diag);
  r.scalars.emplace_back("undamped_distance", d0);
  r.checks.push_back(check_range("undamped_distance", d0, 0.0, 1e-12));
  return r;
}

// Conjugate-and-reverse echo: forward loop, band swap, reversed loop, band
// swap, with symmetric dephasing between the instantaneous projectors.
struct EchoResult {
  cplx initial = 0.0;        // band coherence <upper| rho |lower> at t = 0
  cplx final_value = 0.0;    // the same matrix element after both legs
  double arg_change = 0.0;   // principal value of arg(final/initial)
  double modulus_ratio = 0.0;
};

inline EchoResult run_echo(const SpinModel& model, double f, double coh0,
                           int steps_per_leg,
                           EvolveDiagnostics* diag = nullptr) {
  if (!(std::abs(coh0) <= 0.5) || coh0 == 0.0)
    throw Error("run_echo: initial coherence must be nonzero with |c| <= 1/2");
  const CMatrix v0 = eig_hermitian(model.hamiltonian(0.0)).vectors;
  const CMatrix band0{{0.5, coh0}, {coh0, 0.5}};
  const DensityMatrix rho0(v0 * band0 * v0.adjoint());
  const CMatrix swap = v0 * CMatrix{{0.0, 1.0}, {1.0, 0.0}} * v0.adjoint();

  const auto leg_rhs = [f](const SpinModel& m, bool reversed) -> Rhs {
    return [m, f, reversed](double t, const CMatrix& rho) {
      const double tt = reversed ? m.period() - t : t;
      const Axis n = m.axis(tt);
      const CMatrix pe =
          (CMatrix::identity(2) + kPauliX * n[0] + kPauliY * n[1] +
           kPauliZ * n[2]) * 0.5;
      const CMatrix pg = CMatrix::identity(2) - pe;
      return commutator(m.hamiltonian(tt), rho) * cplx(0.0, -1.0) +
             projector_dephasing_action(f, 0.0, pe, pg, rho);
    };
  };

  EvolveDiagnostics d1, d2;
  DensityMatrix rho = evolve(leg_rhs(model, false), rho0, 0.0, model.period(),
                             steps_per_leg, &d1);
  rho = DensityMatrix(swap * rho.mat() * swap);
  rho = evolve(leg_rhs(model, true), rho, 0.0, model.period(), steps_per_leg,
               &d2);
  rho = DensityMatrix(swap * rho.mat() * swap);
  if (diag) {
    merge_diagnostics(*diag, d1);
    merge_diagnostics(*diag, d2);
  }

  const CMatrix band = conjugate_by(v0, rho.mat());
  EchoResult out;
  out.initial = coh0;
  out.final_value = band(1, 0);
  out.arg_change = std::arg(out.final_value / out.initial);
  out.modulus_ratio = std::abs(out.final_value) / std::abs(out.initial);
  return out;
}

}  // namespace rotax

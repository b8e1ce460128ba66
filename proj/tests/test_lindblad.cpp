#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rotax/lindblad.hpp"
#include "testutil.hpp"

using namespace rotax;
using namespace testutil;

namespace {

const CMatrix kLower{{0.0, 0.0}, {1.0, 0.0}};  // |g><e|, basis order (e, g)
const CMatrix kSx{{0.0, 1.0}, {1.0, 0.0}};
const CMatrix kSz{{1.0, 0.0}, {0.0, -1.0}};

HamiltonianPath drive_path(double delta, double omega, double period) {
  HamiltonianPath p;
  p.dim = 2;
  p.period = period;
  p.cyclic = true;
  p.h = [=](double t) {
    const double f = 2.0 * M_PI * t / period;
    return CMatrix{{0.5 * delta, omega * std::exp(cplx(0.0, -f))},
                   {omega * std::exp(cplx(0.0, f)), -0.5 * delta}};
  };
  return p;
}

}  // namespace

TEST_CASE("density matrix validation") {
  CHECK_NOTHROW(DensityMatrix(CMatrix{{0.8, 0.3}, {0.3, 0.2}}));
  CHECK_THROWS_AS(DensityMatrix(CMatrix{{0.8, 0.3}, {0.1, 0.2}}),
                  NotHermitian);
  CHECK_THROWS_AS(DensityMatrix(CMatrix{{0.9, 0.0}, {0.0, 0.2}}), Error);
  CHECK_THROWS_AS(DensityMatrix(CMatrix{{1.2, 0.0}, {0.0, -0.2}}),
                  PositivityBreach);
  CMatrix bad(2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)DensityMatrix(bad), NonFinite);
}

TEST_CASE("spontaneous decay rates") {
  const double w = 0.37, t1 = 2.0;
  DissipatorSet set;
  set.add(kLower, w);
  const Rhs rhs = [&](double, const CMatrix& r) {
    return dissipator_action(set, r);
  };
  EvolveDiagnostics diag;
  const DensityMatrix out = evolve(
      rhs, DensityMatrix(CMatrix{{0.8, 0.3}, {0.3, 0.2}}), 0.0, t1, 2000,
      &diag);
  // populations relax at rate w, coherences at w/2
  CHECK(std::abs(out.mat()(0, 0).real() - 0.8 * std::exp(-w * t1)) < 1e-10);
  CHECK(std::abs(std::abs(out.mat()(0, 1)) - 0.3 * std::exp(-0.5 * w * t1)) <
        1e-10);
  CHECK(std::abs(out.mat().trace() - cplx(1.0, 0.0)) < 1e-12);
  CHECK(diag.max_trace_drift < 1e-12);
  CHECK(diag.max_herm_residual < 1e-13);
  CHECK(diag.min_eigenvalue > -1e-10);
  CHECK(diag.steps == 2000);
}

TEST_CASE("closed precession is unitary and periodic") {
  const double omega = 0.8;
  const Rhs rhs = [&](double, const CMatrix& r) {
    return commutator(kSx * omega, r) * cplx(0.0, -1.0);
  };
  const CMatrix rho0{{1.0, 0.0}, {0.0, 0.0}};
  const DensityMatrix out =
      evolve(rhs, DensityMatrix(rho0), 0.0, M_PI / omega, 2000);
  CHECK(frobenius_distance(out.mat(), rho0) < 1e-9);
}

TEST_CASE("integrator error falls fourth order in the step size") {
  DissipatorSet set;
  set.add(kLower, 0.4);
  const Rhs rhs = [&](double, const CMatrix& r) {
    return lindblad_rhs(kSx * 0.9, set, r);
  };
  const DensityMatrix rho0(CMatrix{{0.6, 0.1}, {0.1, 0.4}});
  const CMatrix ref = evolve(rhs, rho0, 0.0, 2.0, 1280).mat();
  const double e10 = frobenius_distance(evolve(rhs, rho0, 0.0, 2.0, 10).mat(), ref);
  const double e20 = frobenius_distance(evolve(rhs, rho0, 0.0, 2.0, 20).mat(), ref);
  CHECK(e10 / e20 > 12.0);
  CHECK(e10 / e20 < 20.0);
}

TEST_CASE("secular generator reproduces the driven-loop relaxation") {
  // band populations relax toward sin^4 / (sin^4 + cos^4) at rate K lambda,
  // the coherence precesses at the level splitting and decays at G lambda
  const double delta = 0.8, omega = 0.5, lam = 0.2, t1 = 3.0;
  const double e = std::sqrt(omega * omega + 0.25 * delta * delta);
  const double kk = (2.0 * omega * omega + delta * delta) /
                    (4.0 * omega * omega + delta * delta);
  const double gg = (6.0 * omega * omega + delta * delta) /
                    (8.0 * omega * omega + 2.0 * delta * delta);
  const double s2 = (e - 0.5 * delta) / (2.0 * e);
  const double ainf = s2 * s2 / kk;

  const CMatrix h0{{0.5 * delta, omega}, {omega, -0.5 * delta}};
  const EigResult eg = eig_hermitian(h0);
  DissipatorSet band;
  band.add(conjugate_by(eg.vectors, kLower), lam);

  const double a0 = 0.9;
  const cplx b0(0.1, 0.05);
  CMatrix rho0(2);
  rho0(0, 0) = 1.0 - a0;
  rho0(1, 1) = a0;
  rho0(1, 0) = b0;
  rho0(0, 1) = std::conj(b0);

  const Rhs rhs = [&](double, const CMatrix& r) {
    return secular_rhs(eg.values, band, r);
  };
  const CMatrix out = evolve(rhs, DensityMatrix(rho0), 0.0, t1, 3000).mat();

  const double a_expect = (a0 - ainf) * std::exp(-kk * lam * t1) + ainf;
  const cplx b_expect = b0 * std::exp(cplx(-gg * lam * t1, -2.0 * e * t1));
  CHECK(std::abs(out(1, 1).real() - a_expect) < 1e-8);
  CHECK(std::abs(out(1, 0) - b_expect) < 1e-8);
}

TEST_CASE("drive-phase average collapses to the secular generator") {
  const double delta = 0.8, omega = 0.5, lam = 0.13;
  const double e = std::sqrt(omega * omega + 0.25 * delta * delta);
  std::vector<DissipatorSet> sets;
  for (double b : phase_nodes(8)) {
    const CMatrix h{{0.5 * delta, omega * std::exp(cplx(0.0, -b))},
                    {omega * std::exp(cplx(0.0, b)), -0.5 * delta}};
    DissipatorSet s;
    s.add(conjugate_by(eig_hermitian(h).vectors, kLower), lam);
    sets.push_back(s);
  }
  const std::vector<cplx> hd = {cplx(-e, 0.0), cplx(e, 0.0)};
  const CMatrix h_band = CMatrix::diagonal(hd);

  auto gen = rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix rho = random_density(gen, 2);
    const CMatrix avg = phase_averaged_rhs(h_band, sets, rho);
    const CMatrix sec = secular_rhs({-e, e}, sets.front(), rho);
    CHECK(frobenius_distance(avg, sec) < 1e-13);
  }
}

TEST_CASE("projector dephasing equals the discretized jump continuum") {
  const double lam0 = 0.15;
  const auto density = [&](double a) {
    return lam0 * (1.0 + std::sin(a)) / (2.0 * M_PI);
  };
  const auto op = [](double a) {
    return CMatrix{{1.0, 0.0}, {0.0, std::exp(cplx(0.0, a))}};
  };
  const DissipatorSet set = midpoint_continuum(-M_PI, M_PI, 37, op, density);

  // moments accumulated over the same midpoint nodes
  double f = 0.0, g = 0.0;
  const double step = 2.0 * M_PI / 37.0;
  for (int j = 0; j < 37; ++j) {
    const double a = -M_PI + (double(j) + 0.5) * step;
    f += density(a) * step * (1.0 - std::cos(a));
    g += density(a) * step * std::sin(a);
  }

  const CMatrix pe{{1.0, 0.0}, {0.0, 0.0}};
  const CMatrix pg{{0.0, 0.0}, {0.0, 1.0}};
  auto gen = rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix rho = random_density(gen, 2);
    const CMatrix quad = dissipator_action(set, rho);
    const CMatrix proj = projector_dephasing_action(f, g, pe, pg, rho);
    CHECK(frobenius_distance(quad, proj) < 1e-14);
  }
}

TEST_CASE("dissipator action transforms covariantly") {
  auto gen = rng(3);
  DissipatorSet set;
  set.add(random_matrix(gen, 3), 0.7);
  set.add(random_matrix(gen, 3), 0.2);
  const CMatrix u = random_unitary(gen, 3);
  const CMatrix rho = random_density(gen, 3);
  const CMatrix lhs = dissipator_action(set.transformed(u), conjugate_by(u, rho));
  const CMatrix rhs = conjugate_by(u, dissipator_action(set, rho));
  CHECK(frobenius_distance(lhs, rhs) < 1e-12);
}

TEST_CASE("rotating-frame evolution matches the lab frame") {
  const double delta = 0.8, omega = 0.5, period = 20.0, lam = 0.1;
  const HamiltonianPath path = drive_path(delta, omega, period);
  DissipatorSet set;
  set.add(kLower, lam);

  const CMatrix rho0{{0.7, cplx(0.2, -0.1)}, {cplx(0.2, 0.1), 0.3}};
  const Rhs lab = [&](double t, const CMatrix& r) {
    return lindblad_rhs(path.h(t), set, r);
  };
  const CMatrix lab_out = evolve(lab, DensityMatrix(rho0), 0.0, period, 2000).mat();

  const TransportFrame frame = build_frame(path, 4000);
  const CMatrix rho_f0 = to_frame(frame.unitaries.front(), rho0);
  const Rhs rot = rotated_full_rhs(frame, path, set);
  const CMatrix rot_out =
      evolve(rot, DensityMatrix(rho_f0), 0.0, period, 2000).mat();
  const CMatrix back = from_frame(frame.unitaries.back(), rot_out);
  CHECK(frobenius_distance(back, lab_out) < 5e-5);

  // the adiabatic variant stays physical and lands in the same vicinity
  const Rhs adia = rotated_adiabatic_rhs(frame, set);
  const CMatrix adia_out =
      evolve(adia, DensityMatrix(rho_f0), 0.0, period, 2000).mat();
  const CMatrix adia_back = from_frame(frame.unitaries.back(), adia_out);
  CHECK(frobenius_distance(adia_back, lab_out) < 0.5);
}

TEST_CASE("off-grid times are rejected in rotated evolution") {
  const HamiltonianPath path = drive_path(0.8, 0.5, 20.0);
  DissipatorSet set;
  set.add(kLower, 0.1);
  const TransportFrame frame = build_frame(path, 4000);
  const Rhs rot = rotated_full_rhs(frame, path, set);
  const CMatrix rho0{{1.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(rot(0.3 * frame.dt(), rho0), OutOfFrameRange);
  // 300 integrator steps put stage midpoints between frame nodes
  CHECK_THROWS_AS(evolve(rot, DensityMatrix(rho0), 0.0, 20.0, 300),
                  OutOfFrameRange);
}

TEST_CASE("positivity, finiteness, and trace guards") {
  DissipatorSet set;
  set.add(kLower, 1.0);
  const Rhs antidecay = [&](double, const CMatrix& r) {
    return dissipator_action(set, r) * (-1.0);
  };
  const DensityMatrix mixed(CMatrix{{0.3, 0.0}, {0.0, 0.7}});
  CHECK_THROWS_AS(evolve(antidecay, mixed, 0.0, 2.0, 200), PositivityBreach);

  const Rhs blowup = [](double t, const CMatrix& r) {
    CMatrix out(r.dim());
    if (t > 1.0) out(0, 0) = std::numeric_limits<double>::infinity();
    return out;
  };
  CHECK_THROWS_AS(evolve(blowup, mixed, 0.0, 2.0, 10), NonFinite);

  const Rhs drain = [](double, const CMatrix& r) {
    return CMatrix::identity(r.dim()) * (-4.75);
  };
  CHECK_THROWS_AS(evolve(drain, mixed, 0.0, 0.1, 1), Error);
}

TEST_CASE("secular resonance guard") {
  CMatrix j(3);
  j(0, 1) = 1.0;
  j(0, 2) = 1.0;
  DissipatorSet set;
  set.add(j, 0.01);
  auto gen = rng(5);
  const CMatrix rho = random_density(gen, 3);
  // gaps 1.0 and 1.0005 differ by less than ten damping rates
  CHECK_THROWS_AS(secular_rhs({0.0, 1.0, 1.0005}, set, rho),
                  SecularResonance);
  // well-separated gaps pass
  CHECK_NOTHROW(secular_rhs({0.0, 1.0, 3.0}, set, rho));
}

TEST_CASE("continuum and phase-node validation") {
  const auto op = [](double) { return CMatrix::identity(2); };
  CHECK_THROWS_AS(
      midpoint_continuum(-M_PI, M_PI, 8, op, [](double) { return -1.0; }),
      Error);
  CHECK_THROWS_AS(
      midpoint_continuum(-M_PI, M_PI, 0, op, [](double) { return 1.0; }),
      Error);
  CHECK_THROWS_AS(
      midpoint_continuum(1.0, 1.0, 8, op, [](double) { return 1.0; }), Error);

  CHECK_THROWS_AS(phase_nodes(3), Error);
  const std::vector<double> nodes = phase_nodes(4);
  REQUIRE(nodes.size() == 4);
  CHECK(nodes[0] == 0.0);
  CHECK(std::abs(nodes[1] - M_PI / 2.0) < 1e-15);

  // constant density integrates exactly under the midpoint rule
  const DissipatorSet set = midpoint_continuum(
      -M_PI, M_PI, 16, op, [](double) { return 0.25 / (2.0 * M_PI); });
  CHECK(std::abs(set.total_weight() - 0.25) < 1e-14);
}

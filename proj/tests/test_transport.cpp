#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rotax/transport.hpp"
#include "testutil.hpp"

using namespace rotax;

namespace {

const CMatrix kSx{{0.0, 1.0}, {1.0, 0.0}};
const CMatrix kSy{{0.0, cplx(0.0, -1.0)}, {cplx(0.0, 1.0), 0.0}};
const CMatrix kSz{{1.0, 0.0}, {0.0, -1.0}};

// H(t) = E (sin b cos f, sin b sin f, cos b) . sigma, f = 2 pi t / T
HamiltonianPath cone_path(double e, double beta, double period,
                          double turns = 1.0) {
  HamiltonianPath p;
  p.dim = 2;
  p.period = period;
  p.cyclic = true;
  p.h = [=](double t) {
    const double f = turns * 2.0 * M_PI * t / period;
    return (kSx * (std::sin(beta) * std::cos(f)) +
            kSy * (std::sin(beta) * std::sin(f)) + kSz * std::cos(beta)) * e;
  };
  return p;
}

// Two-level driven Hamiltonian with rotating drive phase f = 2 pi t / T.
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

std::vector<Axis> cone_loop(double beta, int m) {
  std::vector<Axis> v;
  for (int k = 0; k < m; ++k) {
    const double f = 2.0 * M_PI * double(k) / double(m);
    v.push_back({std::sin(beta) * std::cos(f), std::sin(beta) * std::sin(f),
                 std::cos(beta)});
  }
  return v;
}

double wrap4pi(double a) {
  a = std::fmod(a, 4.0 * M_PI);
  if (a > 2.0 * M_PI) a -= 4.0 * M_PI;
  if (a < -2.0 * M_PI) a += 4.0 * M_PI;
  return a;
}

}  // namespace

TEST_CASE("solid angle of circular caps") {
  // area of the polar cap bounded by the loop: 2 pi (1 - cos beta)
  CHECK(std::abs(solid_angle(cone_loop(M_PI / 3.0, 4000)) - M_PI) < 1e-6);
  CHECK(std::abs(solid_angle(cone_loop(0.2, 4000)) - 0.1252453852297186) <
        1e-6);
  // large cap: compare modulo 4 pi, the fan apex sits on the far side
  const double big = solid_angle(cone_loop(2.5, 4000));
  CHECK(std::abs(wrap4pi(big - 11.31691910132481)) < 1e-6);
}

TEST_CASE("solid angle of the equator is exactly a hemisphere") {
  // centroid degenerates, the fan apex falls back to the arc normal and
  // the inscribed polygon boundary lies on the equator itself
  CHECK(std::abs(solid_angle(cone_loop(M_PI / 2.0, 360)) - 2.0 * M_PI) < 1e-9);
}

TEST_CASE("solid angle orientation and edge cases") {
  std::vector<Axis> fw = cone_loop(0.7, 500);
  std::vector<Axis> bw(fw.rbegin(), fw.rend());
  CHECK(std::abs(solid_angle(fw) + solid_angle(bw)) < 1e-12);

  CHECK_THROWS_AS(solid_angle({{0, 0, 1}, {0, 0, -1}, {1, 0, 0}}),
                  AntipodalStep);
  CHECK_THROWS_AS(solid_angle({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}}), Error);
  // fewer than three distinct points encloses nothing
  CHECK(solid_angle({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}}) == 0.0);
}

TEST_CASE("transported band phases on a precessing-axis loop") {
  const double e = 0.7, beta = M_PI / 3.0, period = 3.0;
  const TransportFrame f = build_frame(cone_path(e, beta, period), 4000);
  const PhaseDecomposition p = holonomy(f);

  // upper band acquires minus half the enclosed solid angle: -pi/2 here
  CHECK(std::abs(p.geometric[1] - (-M_PI / 2.0)) < 1e-6);
  CHECK(std::abs(p.geometric[0] - (M_PI / 2.0)) < 1e-6);

  // cross-check against the independent area routine
  const double area = solid_angle(cone_loop(beta, 4000));
  CHECK(std::abs(p.geometric[1] + 0.5 * area) < 1e-6);

  // constant +-e bands: dynamic phase is -energy * duration, exactly
  CHECK(std::abs(p.dynamic[1] - (-e * period)) < 1e-12);
  CHECK(std::abs(p.dynamic[0] - (e * period)) < 1e-12);

  CHECK(p.holonomy.is_unitary(1e-8));
  CHECK(std::abs(std::abs(p.holonomy(0, 0)) - 1.0) < 1e-8);
}

TEST_CASE("transported band phases on the driven two-level loop") {
  const double delta = 0.8, omega = 0.5, period = 5.0;
  const TransportFrame f = build_frame(drive_path(delta, omega, period), 4000);
  const PhaseDecomposition p = holonomy(f);

  // band phase difference 2 pi (detuning / level splitting), wrapped
  CHECK(std::abs(wrap_angle(p.geometric[1] - p.geometric[0]) -
                 (-2.358110562917775)) < 1e-5);
  // upper band alone: 2 pi cos^2(theta/2), wrapped
  CHECK(std::abs(p.geometric[1] - (5.1041300257207 - 2.0 * M_PI)) < 1e-5);

  const double e = std::sqrt(omega * omega + 0.25 * delta * delta);
  CHECK(std::abs(p.dynamic[1] - (-e * period)) < 1e-10);
}

TEST_CASE("frame grid lookup and gauge velocity") {
  const double delta = 0.8, omega = 0.5, period = 5.0;
  const TransportFrame f = build_frame(drive_path(delta, omega, period), 4000);

  CHECK(f.node_index(0.0) == 0);
  CHECK(f.node_index(period) == 4000);
  CHECK(f.node_index(2.5 + 1e-9) == 2000);
  CHECK_THROWS_AS(f.node_index(period + 1.0), OutOfFrameRange);
  CHECK_THROWS_AS(f.node_index(2.5 + 0.4 * f.dt()), OutOfFrameRange);
  CHECK_THROWS_AS(f.node_index(-0.5), OutOfFrameRange);

  // generator of the frame rotation: off-diagonal magnitude in the band
  // basis is (d phi/dt) sin(theta)/2 for this path, and it is
  // anti-Hermitian up to finite-difference error
  const double e = std::sqrt(omega * omega + 0.25 * delta * delta);
  const double expect = (2.0 * M_PI / period) * omega / (2.0 * e);
  const CMatrix g = f.gauge_velocity(2000);
  const CMatrix gb =
      f.initial_basis.adjoint() * g * f.initial_basis;
  CHECK(std::abs(std::abs(gb(0, 1)) - expect) < 1e-5);
  CHECK((g + g.adjoint()).max_abs() < 1e-6);
}

TEST_CASE("constant path gives the identity frame") {
  HamiltonianPath p;
  p.dim = 2;
  p.period = 2.0;
  p.cyclic = true;
  p.h = [](double) { return CMatrix{{0.3, 0.1}, {0.1, -0.2}}; };
  const TransportFrame f = build_frame(p, 50);
  for (const CMatrix& u : f.unitaries)
    CHECK(frobenius_distance(u, CMatrix::identity(2)) < 1e-10);
  const PhaseDecomposition ph = holonomy(f);
  CHECK(std::abs(ph.geometric[0]) < 1e-10);
  CHECK(std::abs(ph.geometric[1]) < 1e-10);
  for (int b = 0; b < 2; ++b)
    CHECK(std::abs(ph.dynamic[size_t(b)] + f.energies[0][size_t(b)] * 2.0) <
          1e-12);
}

TEST_CASE("band phases are invariant under initial gauge rephasing") {
  const HamiltonianPath path = drive_path(0.8, 0.5, 5.0);
  const TransportFrame f1 = build_frame(path, 800);
  FrameOptions opts;
  CMatrix d(2);
  d(0, 0) = std::exp(cplx(0.0, 0.7));
  d(1, 1) = std::exp(cplx(0.0, -1.3));
  opts.initial_basis = f1.initial_basis * d;
  const TransportFrame f2 = build_frame(path, 800, opts);
  const PhaseDecomposition p1 = holonomy(f1), p2 = holonomy(f2);
  CHECK(std::abs(p1.geometric[0] - p2.geometric[0]) < 1e-10);
  CHECK(std::abs(p1.geometric[1] - p2.geometric[1]) < 1e-10);
  CHECK(std::abs(p1.dynamic[1] - p2.dynamic[1]) < 1e-10);
}

TEST_CASE("reference-section phases agree with the cyclic ones on loops") {
  const TransportFrame f = build_frame(cone_path(1.0, 0.9, 2.0), 2000);
  const PhaseDecomposition a = holonomy(f);
  const PhaseDecomposition b = pati_reference(f, f.initial_basis);
  CHECK(std::abs(a.geometric[0] - b.geometric[0]) < 1e-12);
  CHECK(std::abs(a.geometric[1] - b.geometric[1]) < 1e-12);
}

TEST_CASE("reference-section phase of an open half loop") {
  // half of the beta = pi/3 precession loop, closed by the in-phase
  // reference: the enclosed region (half cap plus the lune over the pole)
  // has area pi/2, so the upper band phase is -pi/4
  const double beta = M_PI / 3.0;
  HamiltonianPath p;
  p.dim = 2;
  p.period = 1.0;
  p.cyclic = false;
  p.h = [=](double t) {
    const double f = M_PI * t;
    return kSx * (std::sin(beta) * std::cos(f)) +
           kSy * (std::sin(beta) * std::sin(f)) + kSz * std::cos(beta);
  };
  const TransportFrame f = build_frame(p, 4000);
  const EigResult end = eig_hermitian(p.h(1.0));
  const PhaseDecomposition ph = pati_reference(f, end.vectors);
  CHECK(std::abs(ph.geometric[1] - (-M_PI / 4.0)) < 1e-5);
  CHECK(std::abs(ph.geometric[0] - (M_PI / 4.0)) < 1e-5);
}

TEST_CASE("orthogonal endpoint is rejected") {
  // pole-to-pole sweep: the endpoint eigenvectors are orthogonal to the
  // initial ones, so no in-phase reference exists
  HamiltonianPath p;
  p.dim = 2;
  p.period = 1.0;
  p.cyclic = false;
  p.h = [](double t) {
    const double th = M_PI * t;
    return kSx * std::sin(th) + kSz * std::cos(th);
  };
  const TransportFrame f = build_frame(p, 2000);
  const EigResult end = eig_hermitian(p.h(1.0));
  CHECK_THROWS_AS(pati_reference(f, end.vectors), OrthogonalEndpoint);
}

TEST_CASE("frame construction guards") {
  HamiltonianPath crossing;
  crossing.dim = 2;
  crossing.period = 1.0;
  crossing.cyclic = false;
  crossing.h = [](double t) { return kSz * (0.5 - t); };
  CHECK_THROWS_AS(build_frame(crossing, 10), BandCrossing);

  HamiltonianPath open_marked_cyclic = drive_path(0.8, 0.5, 5.0);
  open_marked_cyclic.h = [](double t) {
    const double f = M_PI * t / 5.0;
    return CMatrix{{0.4, 0.5 * std::exp(cplx(0.0, -f))},
                   {0.5 * std::exp(cplx(0.0, f)), -0.4}};
  };
  CHECK_THROWS_AS(build_frame(open_marked_cyclic, 100), NotCyclic);

  HamiltonianPath open_path = drive_path(0.8, 0.5, 5.0);
  open_path.cyclic = false;
  const TransportFrame f = build_frame(open_path, 100);
  CHECK_THROWS_AS(holonomy(f), NotCyclic);

  CHECK_THROWS_AS(build_frame(open_path, 0), Error);
  HamiltonianPath empty;
  empty.dim = 2;
  empty.period = 1.0;
  CHECK_THROWS_AS(build_frame(empty, 10), Error);
}

TEST_CASE("degenerate doublet transport on a quadrupole loop") {
  // spin-1 quadrupole h = e (n . s)^2: spectrum {0, e, e}; on a precession
  // loop the m = +-1 doublet picks up opposite phases 2 pi cos(beta), so
  // the block has unit determinant and trace 2 cos(2 pi cos beta)
  const double a = 1.0 / std::sqrt(2.0);
  const CMatrix sx{{0.0, a, 0.0}, {a, 0.0, a}, {0.0, a, 0.0}};
  const CMatrix sy{{0.0, cplx(0.0, -a), 0.0},
                   {cplx(0.0, a), 0.0, cplx(0.0, -a)},
                   {0.0, cplx(0.0, a), 0.0}};
  const CMatrix sz{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, -1.0}};
  const double beta = 1.0;
  HamiltonianPath p;
  p.dim = 3;
  p.period = 1.0;
  p.cyclic = true;
  p.h = [=](double t) {
    const double f = 2.0 * M_PI * t;
    const CMatrix ns = sx * (std::sin(beta) * std::cos(f)) +
                       sy * (std::sin(beta) * std::sin(f)) +
                       sz * std::cos(beta);
    return ns * ns;
  };

  const std::vector<HolonomyBlock> blocks = nonabelian_holonomy(p, 2000);
  REQUIRE(blocks.size() == 2);

  CHECK(blocks[0].bands == std::vector<int>{0});
  CHECK(std::abs(blocks[0].energy) < 1e-10);
  CHECK(std::abs(blocks[0].block(0, 0) - cplx(1.0, 0.0)) < 1e-5);

  CHECK(blocks[1].bands == std::vector<int>{1, 2});
  CHECK(std::abs(blocks[1].energy - 1.0) < 1e-10);
  const CMatrix& b = blocks[1].block;
  CHECK(b.is_unitary(1e-8));
  const cplx tr = b(0, 0) + b(1, 1);
  const cplx det = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
  CHECK(std::abs(tr - cplx(-1.93621808336498, 0.0)) < 1e-4);
  CHECK(std::abs(det - cplx(1.0, 0.0)) < 1e-6);
}

TEST_CASE("multiplicity change along the path is rejected") {
  HamiltonianPath p;
  p.dim = 3;
  p.period = 1.0;
  p.cyclic = true;
  p.h = [](double t) {
    const double s = std::sin(M_PI * t);
    std::vector<cplx> d = {0.0, 1.0, 1.0 + s * s};
    return CMatrix::diagonal(d);
  };
  CHECK_THROWS_AS(nonabelian_holonomy(p, 50), DegeneracyDrift);
}

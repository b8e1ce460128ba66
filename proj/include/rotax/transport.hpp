#pragma once
// Discrete parallel transport of instantaneous eigenbases along a
// time-dependent Hamiltonian path: rotating-axis frames, cyclic and
// reference-section holonomies, degenerate-subspace transport, and
// spherical solid angles for field-direction loops.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "rotax/cmatrix.hpp"

namespace rotax {

struct BandCrossing : Error {
  explicit BandCrossing(const std::string& msg) : Error(msg) {}
};
struct NotCyclic : Error {
  explicit NotCyclic(const std::string& msg) : Error(msg) {}
};
struct ExcessLeakage : Error {
  explicit ExcessLeakage(const std::string& msg) : Error(msg) {}
};
struct OrthogonalEndpoint : Error {
  explicit OrthogonalEndpoint(const std::string& msg) : Error(msg) {}
};
struct DegeneracyDrift : Error {
  explicit DegeneracyDrift(const std::string& msg) : Error(msg) {}
};
struct AntipodalStep : Error {
  explicit AntipodalStep(const std::string& msg) : Error(msg) {}
};
struct OutOfFrameRange : Error {
  explicit OutOfFrameRange(const std::string& msg) : Error(msg) {}
};

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Time-dependent Hermitian matrix H(t) on [0, period].
struct HamiltonianPath {
  int dim = 0;
  std::function<CMatrix(double)> h;
  double period = 0.0;
  bool cyclic = true;
};

struct FrameOptions {
  double gap_floor_rel = 1e-6;    // band gap floor, relative to ||H||_F
  double cyclic_tol_rel = 1e-10;  // closure check for cyclic paths
  CMatrix initial_basis;          // optional gauge override, unitary columns
};

// Grid of transport unitaries A(t_k) with A(t_k)|n(0)> = |n(t_k)> and the
// matched band energies along the path.
class TransportFrame {
 public:
  std::vector<double> times;
  std::vector<CMatrix> unitaries;
  std::vector<std::vector<double>> energies;  // [node][band]
  CMatrix initial_basis;                      // columns |n(0)>, ascending energy
  bool cyclic = false;

  int nodes() const { return int(times.size()); }
  int bands() const { return initial_basis.dim(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  double duration() const { return times.empty() ? 0.0 : times.back(); }

  int node_index(double t) const {
    const double step = dt();
    if (step <= 0.0) throw OutOfFrameRange("frame has no grid");
    const double x = t / step;
    const long k = std::lround(x);
    if (k < 0 || k >= long(times.size()) || std::abs(x - double(k)) > 0.26)
      throw OutOfFrameRange("time does not land on the frame grid");
    return int(k);
  }

  const CMatrix& unitary_at(double t) const {
    return unitaries[size_t(node_index(t))];
  }

  const std::vector<double>& energies_at(double t) const {
    return energies[size_t(node_index(t))];
  }

  // A^dagger dA/dt at node k by centered finite difference.
  CMatrix gauge_velocity(int k) const {
    const int last = nodes() - 1;
    const double step = dt();
    CMatrix d(unitaries.front().dim());
    if (k == 0)
      d = (unitaries[1] - unitaries[0]) * (1.0 / step);
    else if (k == last)
      d = (unitaries[size_t(last)] - unitaries[size_t(last - 1)]) * (1.0 / step);
    else
      d = (unitaries[size_t(k + 1)] - unitaries[size_t(k - 1)]) * (0.5 / step);
    return unitaries[size_t(k)].adjoint() * d;
  }
};

struct PhaseDecomposition {
  std::vector<double> geometric;  // per band, wrapped to (-pi, pi]
  std::vector<double> dynamic;    // per band, -integral of E_n dt
  CMatrix holonomy;
};

namespace detail {

// Match each reference column to the unused candidate column of largest
// overlap magnitude; returns candidate indices in reference band order.
inline std::vector<int> match_bands(const CMatrix& reference,
                                    const CMatrix& candidates) {
  const int n = reference.dim();
  std::vector<int> pick(size_t(n), -1);
  std::vector<bool> used(size_t(n), false);
  for (int b = 0; b < n; ++b) {
    const std::vector<cplx> ref = column(reference, b);
    int best = -1;
    double bestmag = -1.0;
    for (int m = 0; m < n; ++m) {
      if (used[size_t(m)]) continue;
      const double mag = std::abs(inner(ref, column(candidates, m)));
      if (mag > bestmag) {
        bestmag = mag;
        best = m;
      }
    }
    if (bestmag < 0.7)
      throw Error("transport step too coarse to identify bands");
    pick[size_t(b)] = best;
    used[size_t(best)] = true;
  }
  return pick;
}

inline void check_gap(const std::vector<double>& vals, double floor,
                      double t) {
  for (size_t i = 0; i + 1 < vals.size(); ++i)
    if (vals[i + 1] - vals[i] < floor)
      throw BandCrossing("band gap below floor at t=" + std::to_string(t));
}

}  // namespace detail

// Build the rotating-axis frame by discrete parallel transport: at each
// grid node the matched eigenvector is rephased so its overlap with the
// previous node is real and positive.
inline TransportFrame build_frame(const HamiltonianPath& path, int steps,
                                  const FrameOptions& opts = {}) {
  if (steps < 1) throw Error("build_frame: need at least one step");
  if (!path.h) throw Error("build_frame: path has no sampler");

  const CMatrix h0 = path.h(0.0);
  const double hscale = std::max(1.0, h0.frobenius_norm());
  if (path.cyclic) {
    const CMatrix hT = path.h(path.period);
    if (frobenius_distance(h0, hT) > opts.cyclic_tol_rel * hscale)
      throw NotCyclic("build_frame: path marked cyclic does not close");
  }

  TransportFrame f;
  f.cyclic = path.cyclic;
  f.times.reserve(size_t(steps) + 1);
  f.unitaries.reserve(size_t(steps) + 1);
  f.energies.reserve(size_t(steps) + 1);

  EigResult e0 = eig_hermitian(h0);
  CMatrix basis = e0.vectors;
  if (opts.initial_basis.dim() == h0.dim()) {
    if (!opts.initial_basis.is_unitary(1e-10))
      throw NotUnitary("build_frame: initial basis is not unitary");
    basis = opts.initial_basis;
    // keep the stored energies in the order of the supplied columns
    std::vector<double> vals(size_t(h0.dim()));
    for (int j = 0; j < h0.dim(); ++j) {
      const std::vector<cplx> c = column(basis, j);
      cplx acc = 0.0;
      for (int i = 0; i < h0.dim(); ++i)
        for (int k = 0; k < h0.dim(); ++k)
          acc += std::conj(c[size_t(i)]) * h0(i, k) * c[size_t(k)];
      vals[size_t(j)] = acc.real();
    }
    e0.values = vals;
  }
  f.initial_basis = basis;

  const double gap_floor = opts.gap_floor_rel * hscale;
  std::vector<double> sorted0 = e0.values;
  std::sort(sorted0.begin(), sorted0.end());
  detail::check_gap(sorted0, gap_floor, 0.0);

  f.times.push_back(0.0);
  f.unitaries.push_back(basis * basis.adjoint());
  f.energies.push_back(e0.values);

  CMatrix prev = basis;
  for (int k = 1; k <= steps; ++k) {
    const double t = path.period * double(k) / double(steps);
    const CMatrix h = path.h(t);
    const EigResult e = eig_hermitian(h);
    detail::check_gap(e.values, opts.gap_floor_rel * std::max(1.0, h.frobenius_norm()), t);

    const std::vector<int> pick = detail::match_bands(prev, e.vectors);
    CMatrix cur(h.dim());
    std::vector<double> vals(size_t(h.dim()));
    for (int b = 0; b < h.dim(); ++b) {
      std::vector<cplx> w = column(e.vectors, pick[size_t(b)]);
      const cplx o = inner(column(prev, b), w);
      const cplx ph = std::conj(o) / std::abs(o);
      for (cplx& z : w) z *= ph;
      set_column(cur, b, w);
      vals[size_t(b)] = e.values[size_t(pick[size_t(b)])];
    }
    f.times.push_back(t);
    f.unitaries.push_back(cur * basis.adjoint());
    f.energies.push_back(vals);
    prev = cur;
  }
  return f;
}

namespace detail {

inline std::vector<double> dynamic_phases(const TransportFrame& f) {
  const int nb = f.bands();
  std::vector<double> d(size_t(nb), 0.0);
  for (int k = 0; k + 1 < f.nodes(); ++k) {
    const double dt = f.times[size_t(k + 1)] - f.times[size_t(k)];
    for (int b = 0; b < nb; ++b)
      d[size_t(b)] -= 0.5 * (f.energies[size_t(k)][size_t(b)] +
                             f.energies[size_t(k + 1)][size_t(b)]) * dt;
  }
  return d;
}

}  // namespace detail

// Cyclic holonomy: phases of A(T) on the initial eigenbasis.
inline PhaseDecomposition holonomy(const TransportFrame& f) {
  if (!f.cyclic) throw NotCyclic("holonomy: frame is not cyclic");
  const CMatrix& aT = f.unitaries.back();
  const CMatrix m = f.initial_basis.adjoint() * aT * f.initial_basis;
  const int nb = f.bands();

  double leak = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      if (i != j) leak = std::max(leak, std::abs(m(i, j)));
  if (leak > 1e-4)
    throw ExcessLeakage("holonomy: off-diagonal leakage " + std::to_string(leak));

  PhaseDecomposition p;
  p.holonomy = m;  // band-basis matrix, diagonal carries the phase factors
  p.dynamic = detail::dynamic_phases(f);
  p.geometric.resize(size_t(nb));
  for (int b = 0; b < nb; ++b)
    p.geometric[size_t(b)] = std::arg(m(b, b));
  return p;
}

// Generalized (reference-section) holonomy for open paths: each endpoint
// eigenvector is rephased to be in phase with its initial state, i.e. the
// overlap <n(0)|ref_n> is made real and positive.
inline PhaseDecomposition pati_reference(const TransportFrame& f,
                                         const CMatrix& endpoint_basis) {
  const int nb = f.bands();
  if (endpoint_basis.dim() != nb)
    throw DimMismatch("pati_reference: basis dimension mismatch");
  if (!endpoint_basis.is_unitary(1e-8))
    throw NotUnitary("pati_reference: endpoint basis is not unitary");

  const CMatrix transported = f.unitaries.back() * f.initial_basis;
  const std::vector<int> pick = detail::match_bands(transported, endpoint_basis);

  CMatrix ref(nb);
  for (int b = 0; b < nb; ++b) {
    std::vector<cplx> w = column(endpoint_basis, pick[size_t(b)]);
    const cplx o = inner(column(f.initial_basis, b), w);
    if (std::abs(o) <= 1e-12)
      throw OrthogonalEndpoint("pati_reference: endpoint orthogonal to start");
    const cplx ph = std::conj(o) / std::abs(o);
    for (cplx& z : w) z *= ph;
    set_column(ref, b, w);
  }

  const CMatrix g = ref.adjoint() * transported;
  double leak = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      if (i != j) leak = std::max(leak, std::abs(g(i, j)));
  if (leak > 1e-4)
    throw ExcessLeakage("pati_reference: off-diagonal leakage " +
                        std::to_string(leak));

  PhaseDecomposition p;
  p.holonomy = g;  // band-basis matrix, diagonal carries the phase factors
  p.dynamic = detail::dynamic_phases(f);
  p.geometric.resize(size_t(nb));
  for (int b = 0; b < nb; ++b)
    p.geometric[size_t(b)] = std::arg(g(b, b));
  return p;
}

struct HolonomyBlock {
  std::vector<int> bands;  // band indices inside the cluster
  double energy = 0.0;     // cluster energy at t = 0
  CMatrix block;           // unitary in U(M) relating transported to initial
};

namespace detail {

// Unitary polar factor u of o = u p (p Hermitian positive).
inline CMatrix polar_unitary(const CMatrix& o) {
  const EigResult e = eig_hermitian((o.adjoint() * o + (o.adjoint() * o).adjoint()) * 0.5);
  std::vector<cplx> inv(size_t(o.dim()));
  for (int i = 0; i < o.dim(); ++i) {
    if (e.values[size_t(i)] <= 1e-24)
      throw Error("polar factor of a singular overlap");
    inv[size_t(i)] = 1.0 / std::sqrt(e.values[size_t(i)]);
  }
  return o * (e.vectors * CMatrix::diagonal(inv) * e.vectors.adjoint());
}

inline std::vector<std::vector<int>> cluster_bands(
    const std::vector<double>& vals, double tol) {
  std::vector<std::vector<int>> cl;
  for (int i = 0; i < int(vals.size()); ++i) {
    if (i > 0 && vals[size_t(i)] - vals[size_t(i - 1)] < tol)
      cl.back().push_back(i);
    else
      cl.push_back({i});
  }
  return cl;
}

}  // namespace detail

// Transport of degenerate eigenspaces: per grid step each cluster's basis
// is aligned with the unitary polar factor of the subspace overlap, the
// matrix generalization of the real-positive-overlap phase fix.  Returns
// one unitary block per cluster.
inline std::vector<HolonomyBlock> nonabelian_holonomy(
    const HamiltonianPath& path, int steps, double cluster_tol_rel = 1e-9) {
  if (steps < 1) throw Error("nonabelian_holonomy: need at least one step");
  if (!path.cyclic) throw NotCyclic("nonabelian_holonomy: path must be cyclic");
  const CMatrix h0 = path.h(0.0);
  const double hscale = std::max(1.0, h0.frobenius_norm());
  if (frobenius_distance(h0, path.h(path.period)) > 1e-10 * hscale)
    throw NotCyclic("nonabelian_holonomy: path does not close");

  const double ctol = cluster_tol_rel * hscale;
  const EigResult e0 = eig_hermitian(h0);
  const std::vector<std::vector<int>> clusters =
      detail::cluster_bands(e0.values, ctol);
  std::vector<size_t> signature;
  for (const auto& c : clusters) signature.push_back(c.size());

  CMatrix prev = e0.vectors;
  const int n = h0.dim();
  for (int k = 1; k <= steps; ++k) {
    const double t = path.period * double(k) / double(steps);
    const EigResult e = eig_hermitian(path.h(t));
    const std::vector<std::vector<int>> cl =
        detail::cluster_bands(e.values, cluster_tol_rel * std::max(1.0, path.h(t).frobenius_norm()));
    std::vector<size_t> sig;
    for (const auto& c : cl) sig.push_back(c.size());
    if (sig != signature)
      throw DegeneracyDrift("nonabelian_holonomy: multiplicity change at t=" +
                            std::to_string(t));

    CMatrix cur(n);
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
      const auto& bands = clusters[ci];
      const int m = int(bands.size());
      // overlap o_ij = <new_i|prev_j> on the cluster
      CMatrix o(m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          o(i, j) = inner(column(e.vectors, cl[ci][size_t(i)]),
                          column(prev, bands[size_t(j)]));
      const CMatrix u = detail::polar_unitary(o);
      // aligned basis: new columns mixed by u
      for (int j = 0; j < m; ++j) {
        std::vector<cplx> col(size_t(n), 0.0);
        for (int i = 0; i < m; ++i) {
          const std::vector<cplx> wi = column(e.vectors, cl[ci][size_t(i)]);
          for (int r = 0; r < n; ++r) col[size_t(r)] += wi[size_t(r)] * u(i, j);
        }
        set_column(cur, bands[size_t(j)], col);
      }
    }
    prev = cur;
  }

  std::vector<HolonomyBlock> out;
  for (const auto& bands : clusters) {
    HolonomyBlock hb;
    hb.bands = bands;
    hb.energy = e0.values[size_t(bands.front())];
    const int m = int(bands.size());
    hb.block = CMatrix(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        hb.block(i, j) = inner(column(e0.vectors, bands[size_t(i)]),
                               column(prev, bands[size_t(j)]));
    out.push_back(std::move(hb));
  }
  return out;
}

using Axis = std::array<double, 3>;

namespace detail {

inline double adot(const Axis& a, const Axis& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Axis across(const Axis& a, const Axis& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline double anorm(const Axis& a) { return std::sqrt(adot(a, a)); }
inline Axis ascale(const Axis& a, double s) {
  return {a[0] * s, a[1] * s, a[2] * s};
}

// Signed solid angle of the spherical triangle (a, b, c).
inline double triangle_angle(const Axis& a, const Axis& b, const Axis& c) {
  const double num = adot(a, across(b, c));
  const double den = 1.0 + adot(a, b) + adot(b, c) + adot(c, a);
  if (num == 0.0 && den <= 0.0)
    throw AntipodalStep("degenerate spherical triangle");
  return 2.0 * std::atan2(num, den);
}

}  // namespace detail

// Signed spherical area of a closed loop of unit axes, summed as a fan of
// spherical triangles from an apex vertex.  Counterclockwise loops seen
// from outside the enclosed cap count positive.
inline double solid_angle(const std::vector<Axis>& axes) {
  using namespace detail;
  std::vector<Axis> v;
  v.reserve(axes.size());
  for (const Axis& a : axes) {
    const double n = anorm(a);
    if (n < 1e-12) throw Error("solid_angle: zero axis");
    const Axis u = ascale(a, 1.0 / n);
    if (!v.empty()) {
      const double d = adot(v.back(), u);
      if (d > 1.0 - 1e-15) continue;  // duplicate point
      if (d < -1.0 + 1e-12)
        throw AntipodalStep("solid_angle: antipodal consecutive axes");
    }
    v.push_back(u);
  }
  if (v.size() > 1 && adot(v.front(), v.back()) > 1.0 - 1e-15) v.pop_back();
  if (v.size() < 3) return 0.0;

  // apex: normalized centroid, else the normal of the first arc
  Axis apex{0.0, 0.0, 0.0};
  for (const Axis& u : v) apex = {apex[0] + u[0], apex[1] + u[1], apex[2] + u[2]};
  if (anorm(apex) > 1e-6 * double(v.size())) {
    apex = ascale(apex, 1.0 / anorm(apex));
  } else {
    const Axis nrm = across(v[0], v[1]);
    if (anorm(nrm) < 1e-12) throw Error("solid_angle: degenerate loop");
    apex = ascale(nrm, 1.0 / anorm(nrm));
  }

  double total = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const Axis& b = v[i];
    const Axis& c = v[(i + 1) % v.size()];
    if (adot(apex, b) < -1.0 + 1e-12 || adot(apex, c) < -1.0 + 1e-12)
      throw AntipodalStep("solid_angle: loop passes the apex antipode");
    total += triangle_angle(apex, b, c);
  }
  return total;
}

}  // namespace rotax

#pragma once
// Open-system evolution: validated density matrices, weighted jump-operator
// sets, master-equation right-hand sides in the lab frame, the rotating
// frame (full and adiabatic), the secular approximation, and drive-phase
// averaging, plus a fixed-step RK4 integrator with physicality diagnostics.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rotax/cmatrix.hpp"
#include "rotax/transport.hpp"

namespace rotax {

struct PositivityBreach : Error {
  explicit PositivityBreach(const std::string& msg) : Error(msg) {}
};
struct SecularResonance : Error {
  explicit SecularResonance(const std::string& msg) : Error(msg) {}
};

// Density matrix validated on construction: Hermitian, unit trace, and no
// eigenvalue below the floor.
class DensityMatrix {
 public:
  explicit DensityMatrix(const CMatrix& m, double herm_tol = 1e-10,
                         double trace_tol = 1e-10, double eig_floor = -1e-8)
      : m_(m) {
    if (!m_.all_finite()) throw NonFinite("density matrix is not finite");
    const double scale = std::max(1.0, m_.max_abs());
    if (!m_.is_hermitian(herm_tol * scale))
      throw NotHermitian("density matrix is not Hermitian");
    const cplx tr = m_.trace();
    if (std::abs(tr - cplx(1.0, 0.0)) > trace_tol)
      throw Error("density matrix trace differs from one");
    m_ = (m_ + m_.adjoint()) * 0.5;
    const double lo = min_eigenvalue(m_);
    if (lo < eig_floor)
      throw PositivityBreach("density matrix eigenvalue " +
                             std::to_string(lo) + " below floor");
  }

  const CMatrix& mat() const { return m_; }
  int dim() const { return m_.dim(); }

 private:
  CMatrix m_;
};

// Jump operator with nonnegative weight; the Gram matrix op^dagger op is
// cached for the anticommutator part of the dissipator.
struct Dissipator {
  CMatrix op;
  double weight = 0.0;
  CMatrix gram;
};

class DissipatorSet {
 public:
  DissipatorSet() = default;

  void add(const CMatrix& op, double weight) {
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw Error("dissipator weight must be finite and nonnegative");
    if (!op.all_finite()) throw NonFinite("dissipator operator is not finite");
    if (!items_.empty() && op.dim() != items_.front().op.dim())
      throw DimMismatch("dissipator dimension mismatch");
    items_.push_back({op, weight, op.adjoint() * op});
  }

  const std::vector<Dissipator>& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  int dim() const { return items_.empty() ? 0 : items_.front().op.dim(); }

  double total_weight() const {
    double s = 0.0;
    for (const Dissipator& d : items_) s += d.weight;
    return s;
  }

  // Jump operators conjugated into the frame of u: op -> u^dagger op u.
  DissipatorSet transformed(const CMatrix& u) const {
    DissipatorSet out;
    for (const Dissipator& d : items_)
      out.add(u.adjoint() * d.op * u, d.weight);
    return out;
  }

 private:
  std::vector<Dissipator> items_;
};

// Midpoint discretization of a continuum of jump operators op(alpha) with
// weight density(alpha) d-alpha over [lo, hi].
inline DissipatorSet midpoint_continuum(
    double lo, double hi, int nodes,
    const std::function<CMatrix(double)>& op,
    const std::function<double(double)>& density) {
  if (nodes < 1) throw Error("midpoint_continuum: need at least one node");
  if (!(hi > lo)) throw Error("midpoint_continuum: empty interval");
  DissipatorSet set;
  const double step = (hi - lo) / double(nodes);
  for (int j = 0; j < nodes; ++j) {
    const double a = lo + (double(j) + 0.5) * step;
    set.add(op(a), density(a) * step);
  }
  return set;
}

// Sum over jump operators of w (op rho op^dagger - {op^dagger op, rho}/2).
inline CMatrix dissipator_action(const DissipatorSet& set, const CMatrix& rho) {
  CMatrix out(rho.dim());
  for (const Dissipator& d : set.items()) {
    if (d.weight == 0.0) continue;
    out += (d.op * rho * d.op.adjoint() -
            (d.gram * rho + rho * d.gram) * 0.5) * d.weight;
  }
  return out;
}

inline CMatrix lindblad_rhs(const CMatrix& h, const DissipatorSet& set,
                            const CMatrix& rho) {
  return commutator(h, rho) * cplx(0.0, -1.0) + dissipator_action(set, rho);
}

// rho in the rotating frame: rho_frame = A^dagger rho A.
inline CMatrix to_frame(const CMatrix& a, const CMatrix& rho) {
  return conjugate_by(a, rho);
}
inline CMatrix from_frame(const CMatrix& a, const CMatrix& rho_frame) {
  return conjugate_by(a.adjoint(), rho_frame);
}

using Rhs = std::function<CMatrix(double, const CMatrix&)>;

// Exact master equation transported into the rotating frame: rotated
// Hamiltonian and jump operators plus the frame-rotation (gauge) term
// rho A^dag dA - A^dag dA rho.  Times must land on the frame grid.
inline Rhs rotated_full_rhs(TransportFrame frame, HamiltonianPath path,
                            DissipatorSet ambient) {
  return [frame = std::move(frame), path = std::move(path),
          ambient = std::move(ambient)](double t, const CMatrix& rho) {
    const int k = frame.node_index(t);
    const CMatrix& a = frame.unitaries[size_t(k)];
    const CMatrix h_rot = conjugate_by(a, path.h(t));
    const CMatrix gauge = frame.gauge_velocity(k);
    return commutator(h_rot, rho) * cplx(0.0, -1.0) - commutator(gauge, rho) +
           dissipator_action(ambient.transformed(a), rho);
  };
}

// Adiabatic rotating-frame equation: the rotated Hamiltonian is replaced
// by the instantaneous band energies on the initial eigenbasis and the
// frame-rotation term is dropped; jump operators stay rotated.
inline Rhs rotated_adiabatic_rhs(TransportFrame frame, DissipatorSet ambient) {
  return [frame = std::move(frame),
          ambient = std::move(ambient)](double t, const CMatrix& rho) {
    const int k = frame.node_index(t);
    const CMatrix& a = frame.unitaries[size_t(k)];
    const std::vector<double>& e = frame.energies[size_t(k)];
    std::vector<cplx> diag(e.begin(), e.end());
    const CMatrix h_band = frame.initial_basis * CMatrix::diagonal(diag) *
                           frame.initial_basis.adjoint();
    return commutator(h_band, rho) * cplx(0.0, -1.0) +
           dissipator_action(ambient.transformed(a), rho);
  };
}

namespace detail {

// Guard against distinct transition frequencies closer than ten times the
// damping scale, where the secular average is not self-consistent.
inline void check_secular_spacing(const std::vector<double>& energies,
                                  const DissipatorSet& set) {
  double rate = 0.0;
  const int n = int(energies.size());
  for (const Dissipator& d : set.items())
    for (int i = 0; i < n; ++i) rate = std::max(rate, d.weight * std::abs(d.gram(i, i)));
  double escale = 1.0;
  for (double e : energies) escale = std::max(escale, std::abs(e));
  std::vector<double> gaps;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      gaps.push_back(energies[size_t(j)] - energies[size_t(i)]);
  for (size_t a = 0; a < gaps.size(); ++a)
    for (size_t b = a + 1; b < gaps.size(); ++b) {
      const double diff = std::abs(gaps[a] - gaps[b]);
      if (diff > 1e-12 * escale && diff < 10.0 * rate)
        throw SecularResonance("transition frequencies too close for the "
                               "secular approximation");
    }
}

}  // namespace detail

// Secular (rotating-wave) generator on the band basis: populations follow
// the jump rates |op_ik|^2, each coherence decays independently with its
// own complex rate.  Energies and operators are given on the same basis
// in which rho is expressed.
inline CMatrix secular_rhs(const std::vector<double>& energies,
                           const DissipatorSet& set, const CMatrix& rho) {
  const int n = rho.dim();
  if (int(energies.size()) != n)
    throw DimMismatch("secular_rhs: energy count does not match dimension");
  detail::check_secular_spacing(energies, set);

  CMatrix out(n);
  for (int i = 0; i < n; ++i) {
    cplx gain = 0.0, loss = 0.0;
    for (const Dissipator& d : set.items())
      for (int k = 0; k < n; ++k) {
        gain += d.weight * std::norm(d.op(i, k)) * rho(k, k);
        loss += d.weight * std::norm(d.op(k, i));
      }
    out(i, i) = gain - loss * rho(i, i);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      cplx rate = cplx(0.0, -(energies[size_t(i)] - energies[size_t(j)]));
      for (const Dissipator& d : set.items()) {
        cplx s = d.op(i, i) * std::conj(d.op(j, j));
        for (int k = 0; k < n; ++k)
          s -= 0.5 * (std::norm(d.op(k, i)) + std::norm(d.op(k, j)));
        rate += d.weight * s;
      }
      out(i, j) = rate * rho(i, j);
    }
  return out;
}

// Pure dephasing between the ranges of two projectors: the cross blocks
// decay with complex rates f +- i g and the diagonal blocks are untouched.
inline CMatrix projector_dephasing_action(double f, double g,
                                          const CMatrix& pe, const CMatrix& pg,
                                          const CMatrix& rho) {
  return pe * rho * pg * cplx(-f, -g) + pg * rho * pe * cplx(-f, g);
}

// Equally spaced drive-phase nodes on [0, 2 pi); at least four are required
// so every phase harmonic of the quadratic generator averages out exactly.
inline std::vector<double> phase_nodes(int n) {
  if (n < 4) throw Error("phase_nodes: need at least four phase samples");
  std::vector<double> b(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) b[size_t(j)] = 2.0 * M_PI * double(j) / double(n);
  return b;
}

// Generator averaged over drive-phase realizations of the jump operators.
inline CMatrix phase_averaged_rhs(const CMatrix& h,
                                  const std::vector<DissipatorSet>& sets,
                                  const CMatrix& rho) {
  if (sets.size() < 4)
    throw Error("phase_averaged_rhs: need at least four phase samples");
  CMatrix acc(rho.dim());
  for (const DissipatorSet& s : sets) acc += dissipator_action(s, rho);
  return commutator(h, rho) * cplx(0.0, -1.0) + acc * (1.0 / double(sets.size()));
}

struct EvolveDiagnostics {
  double max_trace_drift = 0.0;    // per-step |tr - 1| before renormalizing
  double max_herm_residual = 0.0;  // per-step max |rho - rho^dagger| entry
  double min_eigenvalue = 1.0;     // smallest eigenvalue seen after cleanup
  int steps = 0;
};

// Fixed-step RK4 with per-step rehermitization and trace renormalization.
// Eigenvalues below the floor abort with PositivityBreach.
inline DensityMatrix evolve(const Rhs& rhs, const DensityMatrix& rho0,
                            double t0, double t1, int steps,
                            EvolveDiagnostics* diag = nullptr,
                            double eig_floor = -1e-6) {
  if (steps < 1) throw Error("evolve: need at least one step");
  const double h = (t1 - t0) / double(steps);
  CMatrix rho = rho0.mat();
  EvolveDiagnostics local;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + h * double(k);
    const CMatrix k1 = rhs(t, rho);
    const CMatrix k2 = rhs(t + 0.5 * h, rho + k1 * (0.5 * h));
    const CMatrix k3 = rhs(t + 0.5 * h, rho + k2 * (0.5 * h));
    const CMatrix k4 = rhs(t + h, rho + k3 * h);
    rho += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if (!rho.all_finite()) throw NonFinite("evolve: state is not finite");

    local.max_herm_residual =
        std::max(local.max_herm_residual, (rho - rho.adjoint()).max_abs());
    rho = (rho + rho.adjoint()) * 0.5;

    const double tr = rho.trace().real();
    local.max_trace_drift = std::max(local.max_trace_drift, std::abs(tr - 1.0));
    if (std::abs(tr) < 0.1)
      throw Error("evolve: trace collapsed, integration diverged");
    rho *= cplx(1.0 / tr, 0.0);

    const double lo = min_eigenvalue(rho);
    local.min_eigenvalue = std::min(local.min_eigenvalue, lo);
    if (lo < eig_floor)
      throw PositivityBreach("evolve: eigenvalue " + std::to_string(lo) +
                             " below floor at t=" + std::to_string(t + h));
  }
  local.steps = steps;
  if (diag) *diag = local;
  return DensityMatrix(rho, 1e-10, 1e-10, eig_floor);
}

}  // namespace rotax

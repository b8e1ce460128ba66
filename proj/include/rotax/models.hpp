#pragma once
// Concrete systems: the driven two-level atom with rotating drive phase,
// angular densities of collisional phase kicks, and a two-level spin whose
// quantization axis precesses on a cone.

#include <cmath>
#include <string>
#include <vector>

#include "rotax/cmatrix.hpp"
#include "rotax/lindblad.hpp"
#include "rotax/transport.hpp"

namespace rotax {

inline const CMatrix kPauliX{{0.0, 1.0}, {1.0, 0.0}};
inline const CMatrix kPauliY{{0.0, cplx(0.0, -1.0)}, {cplx(0.0, 1.0), 0.0}};
inline const CMatrix kPauliZ{{1.0, 0.0}, {0.0, -1.0}};
inline const CMatrix kLowerOp{{0.0, 0.0}, {1.0, 0.0}};  // basis order (e, g)
inline const CMatrix kProjE{{1.0, 0.0}, {0.0, 0.0}};
inline const CMatrix kProjG{{0.0, 0.0}, {0.0, 1.0}};

// Mixing geometry of a two-level system driven at detuning delta and
// coupling omega: level splitting 2e and half-angle populations.
struct TwoLevelGeometry {
  double e = 0.0;          // half the dressed splitting
  double cos_theta = 0.0;  // delta / (2 e)
  double sin_theta = 0.0;  // omega / e
  double s2 = 0.0;         // sin^2(theta/2)
  double c2 = 0.0;         // cos^2(theta/2)

  static TwoLevelGeometry from(double delta, double omega) {
    TwoLevelGeometry g;
    g.e = std::sqrt(omega * omega + 0.25 * delta * delta);
    if (!(g.e > 0.0))
      throw Error("two-level geometry: zero splitting");
    g.cos_theta = 0.5 * delta / g.e;
    g.sin_theta = omega / g.e;
    g.s2 = 0.5 * (1.0 - g.cos_theta);
    g.c2 = 0.5 * (1.0 + g.cos_theta);
    return g;
  }
};

// Instantaneous upper and lower dressed states as columns (upper first),
// in the smooth gauge whose band phases vanish along the drive.
inline CMatrix dressed_basis(const TwoLevelGeometry& g, double phi) {
  const double s = std::sqrt(g.s2), c = std::sqrt(g.c2);
  CMatrix m(2);
  m(0, 0) = std::exp(cplx(0.0, -phi * g.s2)) * c;
  m(1, 0) = std::exp(cplx(0.0, phi * g.c2)) * s;
  m(0, 1) = -std::exp(cplx(0.0, -phi * g.c2)) * s;
  m(1, 1) = std::exp(cplx(0.0, phi * g.s2)) * c;
  return m;
}

// Two-level atom driven by a field whose phase winds linearly in time,
// with optional spontaneous emission at rate lambda.
class LaserModel {
 public:
  LaserModel(double delta, double omega, double lambda, double period,
             int turns = 1)
      : delta_(delta), omega_(omega), lambda_(lambda), period_(period),
        turns_(turns) {
    if (!(period > 0.0)) throw Error("laser model: period must be positive");
    if (!(lambda >= 0.0)) throw Error("laser model: negative emission rate");
    if (turns < 1) throw Error("laser model: need at least one drive turn");
    geom_ = TwoLevelGeometry::from(delta, omega);
  }

  double delta() const { return delta_; }
  double omega() const { return omega_; }
  double lambda() const { return lambda_; }
  double period() const { return period_; }
  const TwoLevelGeometry& geometry() const { return geom_; }

  double phase(double t) const {
    return 2.0 * M_PI * double(turns_) * t / period_;
  }

  CMatrix hamiltonian(double t) const {
    const double f = phase(t);
    return CMatrix{{0.5 * delta_, omega_ * std::exp(cplx(0.0, -f))},
                   {omega_ * std::exp(cplx(0.0, f)), -0.5 * delta_}};
  }

  HamiltonianPath path() const {
    HamiltonianPath p;
    p.dim = 2;
    p.period = period_;
    p.cyclic = true;
    p.h = [*this](double t) { return hamiltonian(t); };
    return p;
  }

  DissipatorSet emission() const {
    DissipatorSet s;
    s.add(kLowerOp, lambda_);
    return s;
  }

  // rho(0) = 1/2 + p sigma_z on the bare (e, g) basis
  CMatrix initial_state(double p) const {
    if (std::abs(p) > 0.5)
      throw Error("initial polarization must lie in [-1/2, 1/2]");
    CMatrix m(2);
    m(0, 0) = 0.5 + p;
    m(1, 1) = 0.5 - p;
    return m;
  }

 private:
  double delta_, omega_, lambda_, period_;
  int turns_;
  TwoLevelGeometry geom_;
};

// Phase-kick jump operator: identity on the no-kick projector, a phase on
// the other one.
inline CMatrix phase_kick_op(double alpha, const CMatrix& pe,
                             const CMatrix& pg) {
  return pe + pg * std::exp(cplx(0.0, alpha));
}

// Angular density of collisional phase kicks on (-pi, pi].  The first and
// second circular moments f = integral of density * (1 - cos), g =
// integral of density * sin control coherence decay and line shift.
class CollisionDensity {
 public:
  enum class Kind { constant, shifted_sine, wrapped_gaussian };

  static CollisionDensity constant(double lambda0) {
    return CollisionDensity(Kind::constant, lambda0, 0.0, 0.0);
  }
  static CollisionDensity shifted_sine(double lambda0) {
    return CollisionDensity(Kind::shifted_sine, lambda0, 0.0, 0.0);
  }
  static CollisionDensity wrapped_gaussian(double lambda0, double alpha0,
                                           double width) {
    if (!(width > 0.0))
      throw Error("collision density: gaussian width must be positive");
    return CollisionDensity(Kind::wrapped_gaussian, lambda0, alpha0, width);
  }

  static CollisionDensity from_name(const std::string& name, double lambda0,
                                    double alpha0 = 0.0, double width = 0.0) {
    if (name == "constant") return constant(lambda0);
    if (name == "shifted-sine") return shifted_sine(lambda0);
    if (name == "gaussian") return wrapped_gaussian(lambda0, alpha0, width);
    throw Error("unknown collision density: " + name);
  }

  std::string name() const {
    switch (kind_) {
      case Kind::constant: return "constant";
      case Kind::shifted_sine: return "shifted-sine";
      case Kind::wrapped_gaussian: return "gaussian";
    }
    return "";
  }

  Kind kind() const { return kind_; }
  double lambda0() const { return lambda0_; }
  double alpha0() const { return alpha0_; }
  double width() const { return width_; }

  double density(double a) const {
    switch (kind_) {
      case Kind::constant:
        return lambda0_ / (2.0 * M_PI);
      case Kind::shifted_sine:
        return lambda0_ * (1.0 + std::sin(a)) / (2.0 * M_PI);
      case Kind::wrapped_gaussian: {
        double s = 0.0;
        for (int k = -4; k <= 4; ++k) {
          const double x = a - alpha0_ + 2.0 * M_PI * double(k);
          s += std::exp(-0.5 * x * x / (width_ * width_));
        }
        return lambda0_ * s / (width_ * std::sqrt(2.0 * M_PI));
      }
    }
    return 0.0;
  }

  double total() const { return lambda0_; }

  double f() const {
    switch (kind_) {
      case Kind::constant: return lambda0_;
      case Kind::shifted_sine: return lambda0_;
      case Kind::wrapped_gaussian:
        return lambda0_ *
               (1.0 - std::cos(alpha0_) * std::exp(-0.5 * width_ * width_));
    }
    return 0.0;
  }

  double g() const {
    switch (kind_) {
      case Kind::constant: return 0.0;
      case Kind::shifted_sine: return 0.5 * lambda0_;
      case Kind::wrapped_gaussian:
        return lambda0_ * std::sin(alpha0_) * std::exp(-0.5 * width_ * width_);
    }
    return 0.0;
  }

  // Midpoint discretization of the kick continuum between the two
  // projectors; refuses node counts too coarse to carry the total rate.
  DissipatorSet dephasing_set(int nodes, const CMatrix& pe,
                              const CMatrix& pg) const {
    const DissipatorSet set = midpoint_continuum(
        -M_PI, M_PI, nodes,
        [&](double a) { return phase_kick_op(a, pe, pg); },
        [&](double a) { return density(a); });
    if (std::abs(set.total_weight() - total()) > 1e-6 * std::max(1e-300, total()))
      throw Error("dephasing_set: node count too coarse for this density");
    return set;
  }

 private:
  CollisionDensity(Kind kind, double lambda0, double alpha0, double width)
      : kind_(kind), lambda0_(lambda0), alpha0_(alpha0), width_(width) {
    if (!(lambda0 >= 0.0))
      throw Error("collision density: negative total rate");
  }

  Kind kind_;
  double lambda0_, alpha0_, width_;
};

// Two-level spin with splitting 2e about an axis precessing on a cone of
// opening angle theta_b.
class SpinModel {
 public:
  SpinModel(double e, double theta_b, double period, int turns = 1)
      : e_(e), theta_b_(theta_b), period_(period), turns_(turns) {
    if (!(e > 0.0)) throw Error("spin model: splitting must be positive");
    if (!(period > 0.0)) throw Error("spin model: period must be positive");
    if (!(theta_b >= 0.0 && theta_b <= M_PI))
      throw Error("spin model: cone angle outside [0, pi]");
    if (turns < 1) throw Error("spin model: need at least one turn");
  }

  double e() const { return e_; }
  double theta_b() const { return theta_b_; }
  double period() const { return period_; }

  Axis axis(double t) const {
    const double f = 2.0 * M_PI * double(turns_) * t / period_;
    return {std::sin(theta_b_) * std::cos(f), std::sin(theta_b_) * std::sin(f),
            std::cos(theta_b_)};
  }

  CMatrix hamiltonian(double t) const {
    const Axis n = axis(t);
    return (kPauliX * n[0] + kPauliY * n[1] + kPauliZ * n[2]) * e_;
  }

  HamiltonianPath path() const {
    HamiltonianPath p;
    p.dim = 2;
    p.period = period_;
    p.cyclic = true;
    p.h = [*this](double t) { return hamiltonian(t); };
    return p;
  }

  // Axis retraced backward over one period, for the echo return leg.
  HamiltonianPath reversed_path() const {
    HamiltonianPath p;
    p.dim = 2;
    p.period = period_;
    p.cyclic = true;
    p.h = [*this](double t) { return hamiltonian(period_ - t); };
    return p;
  }

  std::vector<Axis> axis_loop(int m) const {
    std::vector<Axis> v;
    v.reserve(size_t(m));
    for (int k = 0; k < m; ++k)
      v.push_back(axis(period_ * double(k) / double(m)));
    return v;
  }

 private:
  double e_, theta_b_, period_;
  int turns_;
};

}  // namespace rotax

#pragma once
// Closed-form reference solutions: dressed-band relaxation under emission
// and collisional dephasing, the cyclic inversion signals they compose
// into, spin coherence with its echo value, and the circular moments of a
// kick density.  Everything here is plain formula evaluation, independent
// of the matrix evolution code, so agreement with it is evidence.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "rotax/cmatrix.hpp"
#include "rotax/models.hpp"

namespace rotax {

struct ZeroP : Error {
  explicit ZeroP(const std::string& msg) : Error(msg) {}
};

// Dimensionless relaxation factors of the driven two-level system along
// with the kick-density moments that enter the dephasing solutions.
struct ReducedConstants {
  double kk = 0.0;     // population relaxation factor (2W^2+D^2)/(4W^2+D^2)
  double gg = 0.0;     // coherence relaxation factor (6W^2+D^2)/(8W^2+2D^2)
  double f = 0.0;      // kick moment of (1 - cos)
  double g = 0.0;      // kick moment of sin
  double theta = 0.0;  // mixing angle
  double e = 0.0;      // half the dressed splitting

  static ReducedConstants from(double delta, double omega, double f = 0.0,
                               double g = 0.0) {
    ReducedConstants r;
    const double num = omega * omega;
    r.e = std::sqrt(num + 0.25 * delta * delta);
    if (!(r.e > 0.0)) throw Error("reduced constants: zero splitting");
    r.kk = (2.0 * num + delta * delta) / (4.0 * num + delta * delta);
    r.gg = (6.0 * num + delta * delta) / (8.0 * num + 2.0 * delta * delta);
    r.theta = std::atan2(omega, 0.5 * delta);
    r.f = f;
    r.g = g;
    if (!(r.kk > 0.0 && r.kk <= 1.0) || !(r.gg > 0.0 && r.gg <= 1.0))
      throw Error("reduced constants: factor outside (0, 1]");
    if (!(f >= 0.0)) throw Error("reduced constants: negative decay moment");
    if (!std::isfinite(f) || !std::isfinite(g))
      throw NonFinite("reduced constants: moments not finite");
    return r;
  }
};

// Upper-band population a and band coherence b.
struct BandState {
  double a = 0.0;
  cplx b = 0.0;
};

namespace detail {

struct HalfAngle {
  double s2, c2, s4, c4, cos_t, sin_t;
};

inline HalfAngle half_angle(double theta) {
  HalfAngle h;
  h.cos_t = std::cos(theta);
  h.sin_t = std::sin(theta);
  h.s2 = 0.5 * (1.0 - h.cos_t);
  h.c2 = 0.5 * (1.0 + h.cos_t);
  h.s4 = h.s2 * h.s2;
  h.c4 = h.c2 * h.c2;
  return h;
}

}  // namespace detail

// Band-basis image of the bare initial state 1/2 + p sigma_z.
inline BandState band_initials(double theta, double p) {
  const detail::HalfAngle h = detail::half_angle(theta);
  BandState s;
  s.a = 0.5 + p * h.cos_t;
  s.b = -p * h.sin_t;
  return s;
}

// Band relaxation under spontaneous emission at rate lambda: a decays
// toward s^4/(s^4+c^4) at rate lambda (s^4+c^4); b precesses at the
// splitting 2e and decays at rate lambda (s^2 c^2 + 1/2).
inline BandState emission_ab(double t, double theta, double lambda, double e,
                             double a0, cplx b0) {
  if (!(lambda >= 0.0)) throw Error("emission_ab: negative emission rate");
  const detail::HalfAngle h = detail::half_angle(theta);
  const double kk = h.s4 + h.c4;
  const double ainf = h.s4 / kk;
  const double gg = h.s2 * h.c2 + 0.5;
  BandState s;
  s.a = (a0 - ainf) * std::exp(-kk * lambda * t) + ainf;
  s.b = b0 * std::exp(cplx(-gg * lambda * t, -2.0 * e * t));
  return s;
}

// Band relaxation under collisional dephasing with moments (f, g):
// a decays toward 1/2 at rate 4 f s^2 c^2; b precesses at
// 2e - g (s^4 - c^4) and decays at rate f (s^4 + c^4).
inline BandState dephasing_ab(double t, double theta, double f, double g,
                              double e, double a0, cplx b0) {
  if (!(f >= 0.0)) throw Error("dephasing_ab: negative decay moment");
  const detail::HalfAngle h = detail::half_angle(theta);
  BandState s;
  s.a = (a0 - 0.5) * std::exp(-4.0 * f * h.s2 * h.c2 * t) + 0.5;
  s.b = b0 * std::exp(cplx(-f * (h.s4 + h.c4) * t,
                           -(2.0 * e - g * (h.s4 - h.c4)) * t));
  return s;
}

// Bare-basis inversion reconstructed from the band state at drive phase phi.
inline double inversion_from_ab(double theta, double a, cplx b, double phi) {
  const detail::HalfAngle h = detail::half_angle(theta);
  return (2.0 * a - 1.0) * h.cos_t -
         2.0 * h.sin_t * (b * std::exp(cplx(0.0, phi * h.cos_t))).real();
}

// Inversion after one full drive turn under emission, for a bare initial
// state 1/2 + p sigma_z.  The published grouping carries a 1/(2Kp) factor
// that is undefined at p = 0, so that input is rejected; elsewhere the
// algebraically identical regrouped form below is evaluated.
inline double emission_inversion(double t, double theta, double lambda,
                                 double e, double p) {
  if (p == 0.0)
    throw ZeroP("emission_inversion: the published form is undefined at p=0");
  if (!(lambda >= 0.0))
    throw Error("emission_inversion: negative emission rate");
  const detail::HalfAngle h = detail::half_angle(theta);
  const double kk = h.s4 + h.c4;
  const double gg = h.s2 * h.c2 + 0.5;
  const double ct = h.cos_t, st = h.sin_t;
  return ct * ct * ((2.0 * kk * p + 1.0) * std::exp(-kk * lambda * t) - 1.0) /
             kk +
         2.0 * p * st * st * std::cos(2.0 * e * t - 2.0 * M_PI * ct) *
             std::exp(-gg * lambda * t);
}

// Inversion after one full drive turn under pure dephasing.  This is the
// composition of dephasing_ab with the inversion reconstruction; the
// corresponding printed result differs from its own component solutions
// (a spurious 1/2 on the oscillating term and an opposite shift sign), so
// the composition-consistent form is used.
inline double dephasing_inversion(double t, double theta, double f, double g,
                                  double e, double p) {
  if (!(f >= 0.0))
    throw Error("dephasing_inversion: negative decay moment");
  const detail::HalfAngle h = detail::half_angle(theta);
  const double ct = h.cos_t, st = h.sin_t;
  const double kk = h.s4 + h.c4;
  return 2.0 * p *
         (ct * ct * std::exp(-st * st * f * t) +
          st * st * std::exp(-kk * f * t) *
              std::cos((2.0 * e + g * ct) * t - 2.0 * M_PI * ct));
}

// Coherence of the precessing spin after one forward leg: dynamic phase
// 2eT, density shift gT, geometric phase -2 phi, envelope e^{-fT}.
inline cplx spin_coherence(double t, double e, double f, double g, double phi,
                           cplx rho12_0) {
  if (!(f >= 0.0)) throw Error("spin_coherence: negative decay moment");
  return rho12_0 * std::exp(cplx(-f * t, -(2.0 * e + g) * t + 2.0 * phi));
}

// Echo value after forward and reversed legs with band flips: dynamic and
// shift phases cancel, the geometric phase doubles, the envelope squares.
inline cplx echo_coherence(double t, double f, double phi, cplx rho12_0) {
  if (!(f >= 0.0)) throw Error("echo_coherence: negative decay moment");
  return rho12_0 * std::exp(cplx(-2.0 * f * t, 4.0 * phi));
}

namespace detail {

inline double simpson_rec(const std::function<double(double)>& fn, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = fn(lm), frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw Error("adaptive quadrature failed to converge");
  if (std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& fn,
                               double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = fn(a), fm = fn(m), fb = fn(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(fn, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

struct KickMoments {
  double f = 0.0;
  double g = 0.0;
};

// Circular moments of the kick density: f picks up (1 - cos), g picks up
// sin.  Closed forms for the flat and shifted-sine densities; the wrapped
// peak is integrated adaptively to 1e-10, with panel seeds at the peak so
// narrow widths cannot be stepped over.
inline KickMoments reduced_fg(const CollisionDensity& d) {
  switch (d.kind()) {
    case CollisionDensity::Kind::constant:
      return {d.lambda0(), 0.0};
    case CollisionDensity::Kind::shifted_sine:
      return {d.lambda0(), 0.5 * d.lambda0()};
    case CollisionDensity::Kind::wrapped_gaussian:
      break;
  }
  std::vector<double> cuts = {-M_PI, M_PI};
  for (int k = -1; k <= 1; ++k) {
    const double center = d.alpha0() + 2.0 * M_PI * double(k);
    for (double edge : {center - 10.0 * d.width(), center,
                        center + 10.0 * d.width()}) {
      if (edge > -M_PI && edge < M_PI) cuts.push_back(edge);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  KickMoments m;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-14) continue;
    m.f += detail::adaptive_simpson(
        [&](double a) { return d.density(a) * (1.0 - std::cos(a)); }, cuts[i],
        cuts[i + 1], 1e-11);
    m.g += detail::adaptive_simpson(
        [&](double a) { return d.density(a) * std::sin(a); }, cuts[i],
        cuts[i + 1], 1e-11);
  }
  return m;
}

}  // namespace rotax

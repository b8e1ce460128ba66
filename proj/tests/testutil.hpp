#pragma once
// Shared helpers for the unit tests: seeded random matrices and tolerant
// comparisons.

#include <random>

#include "rotax/cmatrix.hpp"

namespace testutil {

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline rotax::CMatrix random_matrix(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  rotax::CMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rotax::cplx(u(gen), u(gen));
  return m;
}

inline rotax::CMatrix random_hermitian(std::mt19937_64& gen, int n) {
  rotax::CMatrix m = random_matrix(gen, n);
  rotax::CMatrix h = m + m.adjoint();
  return h * 0.5;
}

// Random unitary: eigenvector matrix of a random Hermitian draw.
inline rotax::CMatrix random_unitary(std::mt19937_64& gen, int n) {
  return rotax::eig_hermitian(random_hermitian(gen, n)).vectors;
}

// Random density matrix: normalized m m^dagger + eps.
inline rotax::CMatrix random_density(std::mt19937_64& gen, int n) {
  rotax::CMatrix m = random_matrix(gen, n);
  rotax::CMatrix r = m * m.adjoint();
  for (int i = 0; i < n; ++i) r(i, i) += 0.01;
  const double tr = r.trace().real();
  return r * (1.0 / tr);
}

}  // namespace testutil

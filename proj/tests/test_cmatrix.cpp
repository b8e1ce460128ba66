#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rotax/cmatrix.hpp"
#include "testutil.hpp"

using namespace rotax;
using testutil::random_hermitian;
using testutil::random_unitary;

namespace {
const cplx I(0.0, 1.0);
}

TEST_CASE("construction and arithmetic") {
  CMatrix z(2);
  CHECK(z.frobenius_norm() == 0.0);
  CMatrix id = CMatrix::identity(3);
  CHECK(id.trace() == cplx(3.0, 0.0));

  CMatrix a{{1.0, 2.0}, {3.0, 4.0}};
  CMatrix b{{0.0, 1.0}, {1.0, 0.0}};
  CMatrix c = a * b;
  CHECK(c(0, 0) == cplx(2.0, 0.0));
  CHECK(c(0, 1) == cplx(1.0, 0.0));
  CHECK(c(1, 0) == cplx(4.0, 0.0));
  CHECK(c(1, 1) == cplx(3.0, 0.0));

  CMatrix s = a + b - a;
  CHECK(frobenius_distance(s, b) == 0.0);
  CHECK((a * 2.0)(1, 1) == cplx(8.0, 0.0));

  CHECK_THROWS_AS(a + CMatrix(3), DimMismatch);
  CHECK_THROWS_AS(a * CMatrix(3), DimMismatch);
  CHECK_THROWS_AS(CMatrix(9), DimMismatch);
}

TEST_CASE("adjoint, trace, norms") {
  CMatrix m{{cplx(1, 1), cplx(0, 2)}, {3.0, cplx(4, -1)}};
  CMatrix md = m.adjoint();
  CHECK(md(0, 1) == cplx(3.0, 0.0));
  CHECK(md(1, 0) == cplx(0.0, -2.0));
  CHECK(m.trace() == cplx(5.0, 0.0));

  CMatrix f{{3.0, 4.0 * I}, {0.0, 0.0}};
  CHECK(f.frobenius_norm() == doctest::Approx(5.0).epsilon(1e-15));

  CMatrix g{{1.0, 0.0}, {0.0, 1.0}};
  CHECK(frobenius_distance(f, g) == frobenius_distance(g, f));
}

TEST_CASE("commutator and conjugation") {
  CMatrix sx{{0.0, 1.0}, {1.0, 0.0}};
  CMatrix sz{{1.0, 0.0}, {0.0, -1.0}};
  CMatrix com = commutator(sz, sx);  // 2i sy
  CHECK(com(0, 1) == cplx(2.0, 0.0));
  CHECK(com(1, 0) == cplx(-2.0, 0.0));
  CHECK(anticommutator(sz, sx).frobenius_norm() == 0.0);

  CMatrix d{{cplx(2, 0), 0.0}, {0.0, cplx(7, 0)}};
  CHECK(frobenius_distance(conjugate_by(CMatrix::identity(2), d), d) == 0.0);
  CMatrix swapped = conjugate_by(sx, d);
  CHECK(swapped(0, 0) == cplx(7.0, 0.0));
  CHECK(swapped(1, 1) == cplx(2.0, 0.0));

  CMatrix notu{{1.0, 1.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(conjugate_by(notu, d), NotUnitary);
}

TEST_CASE("predicates") {
  CMatrix h{{1.0, I}, {-I, 2.0}};
  CHECK(h.is_hermitian(1e-14));
  CMatrix nh{{0.0, 1.0}, {0.0, 0.0}};
  CHECK(!nh.is_hermitian(1e-14));
  CMatrix u{{0.0, 1.0}, {1.0, 0.0}};
  CHECK(u.is_unitary(1e-14));
  CHECK(!nh.is_unitary(1e-14));
}

TEST_CASE("eigensolver on pauli z") {
  CMatrix sz{{1.0, 0.0}, {0.0, -1.0}};
  EigResult e = eig_hermitian(sz);
  CHECK(e.values[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(e.vectors(1, 0) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(e.vectors(0, 1) - cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("eigensolver on a driven two-level hamiltonian") {
  // H = [[D/2, O],[O, -D/2]] with O=1, D=0.5 has eigenvalues -E, +E,
  // E = sqrt(O^2 + D^2/4).
  const double eexp = 1.0307764064044151;
  CMatrix h{{0.25, 1.0}, {1.0, -0.25}};
  EigResult e = eig_hermitian(h);
  CHECK(e.values[0] == doctest::Approx(-eexp).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(eexp).epsilon(1e-14));
}

TEST_CASE("canonical gauge makes the dominant component real nonnegative") {
  CMatrix sy{{0.0, -I}, {I, 0.0}};
  EigResult e = eig_hermitian(sy);
  for (int j = 0; j < 2; ++j) {
    CHECK(e.vectors(0, j).imag() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e.vectors(0, j).real() > 0.0);
  }
}

TEST_CASE("eigensolver reconstruction on random hermitian draws") {
  auto gen = testutil::rng(20260814);
  for (int n : {2, 3, 4}) {
    for (int rep = 0; rep < 50; ++rep) {
      CMatrix m = random_hermitian(gen, n);
      EigResult e = eig_hermitian(m);
      CMatrix lam = CMatrix::diagonal(e.values);
      CMatrix rec = e.vectors * lam * e.vectors.adjoint();
      CHECK(frobenius_distance(rec, m) < 1e-12 * std::max(1.0, m.frobenius_norm()));
      // residual bound from the solver contract
      CMatrix resid = m * e.vectors - e.vectors * lam;
      CHECK(resid.frobenius_norm() <= 10 * 1e-13 * std::max(1.0, m.frobenius_norm()));
      CHECK(e.vectors.is_unitary(1e-12));
      for (size_t k = 1; k < e.values.size(); ++k)
        CHECK(e.values[k] >= e.values[k - 1]);
    }
  }
}

TEST_CASE("conjugation by a unitary preserves the spectrum") {
  auto gen = testutil::rng(77);
  for (int rep = 0; rep < 25; ++rep) {
    CMatrix m = random_hermitian(gen, 3);
    CMatrix u = random_unitary(gen, 3);
    EigResult e0 = eig_hermitian(m);
    EigResult e1 = eig_hermitian(conjugate_by(u, m));
    for (size_t k = 0; k < e0.values.size(); ++k)
      CHECK(std::abs(e0.values[k] - e1.values[k]) < 1e-10);
  }
}

TEST_CASE("eigensolver is deterministic") {
  auto gen = testutil::rng(5);
  CMatrix m = random_hermitian(gen, 4);
  EigResult a = eig_hermitian(m);
  EigResult b = eig_hermitian(m);
  for (size_t k = 0; k < a.values.size(); ++k) CHECK(a.values[k] == b.values[k]);
  CHECK(frobenius_distance(a.vectors, b.vectors) == 0.0);
}

TEST_CASE("eigensolver rejects non-hermitian input") {
  CMatrix nh{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(eig_hermitian(nh), NotHermitian);
}

TEST_CASE("degenerate eigenvalues still give an orthonormal basis") {
  auto gen = testutil::rng(11);
  CMatrix u = random_unitary(gen, 3);
  CMatrix d = CMatrix::diagonal(std::vector<double>{2.0, 2.0, 5.0});
  CMatrix m = u * d * u.adjoint();
  // enforce exact hermiticity after the forming product
  m = (m + m.adjoint()) * 0.5;
  EigResult e = eig_hermitian(m);
  CHECK(e.vectors.is_unitary(1e-12));
  CHECK(e.values[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e.values[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e.values[2] == doctest::Approx(5.0).epsilon(1e-12));
}

#pragma once
// Dense complex matrices for small (N <= 8) Hermitian problems:
// arithmetic, predicates, and a cyclic Jacobi eigensolver with a
// canonical eigenvector gauge.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotax {

using cplx = std::complex<double>;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct DimMismatch : Error {
  explicit DimMismatch(const std::string& msg) : Error(msg) {}
};
struct NotHermitian : Error {
  explicit NotHermitian(const std::string& msg) : Error(msg) {}
};
struct NotUnitary : Error {
  explicit NotUnitary(const std::string& msg) : Error(msg) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error(msg) {}
};
struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error(msg) {}
};

class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(int dim) : dim_(check_dim(dim)), a_(size_t(dim) * dim) {}

  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows)
      : CMatrix(int(rows.size())) {
    int i = 0;
    for (const auto& row : rows) {
      if (int(row.size()) != dim_)
        throw DimMismatch("ragged row in matrix literal");
      int j = 0;
      for (cplx z : row) (*this)(i, j++) = z;
      ++i;
    }
  }

  static CMatrix identity(int dim) {
    CMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(const std::vector<cplx>& d) {
    CMatrix m(int(d.size()));
    for (int i = 0; i < m.dim_; ++i) m(i, i) = d[size_t(i)];
    return m;
  }

  static CMatrix diagonal(const std::vector<double>& d) {
    CMatrix m(int(d.size()));
    for (int i = 0; i < m.dim_; ++i) m(i, i) = d[size_t(i)];
    return m;
  }

  int dim() const { return dim_; }

  cplx& operator()(int i, int j) { return a_[size_t(i) * dim_ + j]; }
  cplx operator()(int i, int j) const { return a_[size_t(i) * dim_ + j]; }

  CMatrix& operator+=(const CMatrix& o) {
    require_same_dim(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    require_same_dim(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  CMatrix& operator*=(cplx s) {
    for (cplx& z : a_) z *= s;
    return *this;
  }

  CMatrix adjoint() const {
    CMatrix m(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (cplx z : a_) s += std::norm(z);
    return std::sqrt(s);
  }

  double max_abs() const {
    double s = 0.0;
    for (cplx z : a_) s = std::max(s, std::abs(z));
    return s;
  }

  bool all_finite() const {
    for (cplx z : a_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  bool is_hermitian(double tol) const {
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j)
        if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol)
          return false;
    return true;
  }

  bool is_unitary(double tol) const;

 private:
  static int check_dim(int dim) {
    if (dim < 1 || dim > 8) throw DimMismatch("matrix dimension out of range");
    return dim;
  }
  void require_same_dim(const CMatrix& o) const {
    if (dim_ != o.dim_) throw DimMismatch("dimension mismatch");
  }

  int dim_ = 0;
  std::vector<cplx> a_;
};

inline CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
inline CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
inline CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
inline CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
inline CMatrix operator*(CMatrix a, double s) { return a *= cplx(s, 0.0); }
inline CMatrix operator*(double s, CMatrix a) { return a *= cplx(s, 0.0); }
inline CMatrix operator-(const CMatrix& a) { return a * cplx(-1.0, 0.0); }

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.dim() != b.dim()) throw DimMismatch("dimension mismatch in product");
  const int n = a.dim();
  CMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0, 0.0)) continue;
      for (int j = 0; j < n; ++j) m(i, j) += aik * b(k, j);
    }
  return m;
}

inline bool CMatrix::is_unitary(double tol) const {
  const CMatrix p = adjoint() * (*this);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      const cplx want = (i == j) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
      if (std::abs(p(i, j) - want) > tol) return false;
    }
  return true;
}

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  return a * b - b * a;
}

inline CMatrix anticommutator(const CMatrix& a, const CMatrix& b) {
  return a * b + b * a;
}

// u^dagger m u; throws unless u is unitary to the given tolerance.
inline CMatrix conjugate_by(const CMatrix& u, const CMatrix& m,
                            double unitary_tol = 1e-8) {
  if (!u.is_unitary(unitary_tol))
    throw NotUnitary("conjugate_by: transform is not unitary");
  return u.adjoint() * m * u;
}

inline double frobenius_distance(const CMatrix& a, const CMatrix& b) {
  return (a - b).frobenius_norm();
}

// Column/vector helpers used by the transport code.
inline std::vector<cplx> column(const CMatrix& m, int j) {
  std::vector<cplx> v(size_t(m.dim()));
  for (int i = 0; i < m.dim(); ++i) v[size_t(i)] = m(i, j);
  return v;
}

inline void set_column(CMatrix& m, int j, const std::vector<cplx>& v) {
  for (int i = 0; i < m.dim(); ++i) m(i, j) = v[size_t(i)];
}

// <a|b>, conjugate-linear in the first argument.
inline cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

struct EigResult {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column k is the eigenvector of values[k]
};

// Cyclic Jacobi diagonalization of a Hermitian matrix.  Converges when the
// off-diagonal Frobenius mass falls below tol * ||m||_F; capped at 100
// sweeps.  Eigenvectors carry a canonical gauge: the largest-magnitude
// component of each column is made real and nonnegative.
inline EigResult eig_hermitian(const CMatrix& m, double tol = 1e-13) {
  const int n = m.dim();
  const double scale = m.frobenius_norm();
  if (!m.is_hermitian(1e-10 * std::max(1.0, scale)))
    throw NotHermitian("eig_hermitian: matrix is not Hermitian");
  if (!m.all_finite()) throw NonFinite("eig_hermitian: non-finite entry");

  CMatrix a = m;
  CMatrix v = CMatrix::identity(n);
  const double thresh = tol * scale;
  const double skip = (n > 1) ? thresh / (2.0 * n) : 0.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  bool converged = (scale == 0.0) || (n == 1) || off_norm() <= thresh;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double h = std::abs(apq);
        if (h <= skip) continue;
        const cplx phase = apq / h;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * h);
        const double sgn = (tau >= 0.0) ? 1.0 : -1.0;
        const double t = sgn / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cth = 1.0 / std::sqrt(1.0 + t * t);
        const double sth = t * cth;
        for (int k = 0; k < n; ++k) {  // columns p,q of a and v
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = cth * akp - sth * std::conj(phase) * akq;
          a(k, q) = sth * phase * akp + cth * akq;
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cth * vkp - sth * std::conj(phase) * vkq;
          v(k, q) = sth * phase * vkp + cth * vkq;
        }
        for (int k = 0; k < n; ++k) {  // rows p,q of a
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = cth * apk - sth * phase * aqk;
          a(q, k) = sth * std::conj(phase) * apk + cth * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    converged = off_norm() <= thresh;
  }
  if (!converged)
    throw NoConvergence("eig_hermitian: no convergence in 100 sweeps");

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });

  EigResult r;
  r.values.resize(size_t(n));
  r.vectors = CMatrix(n);
  for (int j = 0; j < n; ++j) {
    r.values[size_t(j)] = a(order[size_t(j)], order[size_t(j)]).real();
    int imax = 0;
    double amax = -1.0;
    for (int i = 0; i < n; ++i) {
      const double w = std::abs(v(i, order[size_t(j)]));
      if (w > amax) {
        amax = w;
        imax = i;
      }
    }
    cplx ph(1.0, 0.0);
    if (amax > 0.0) ph = std::conj(v(imax, order[size_t(j)])) / amax;
    for (int i = 0; i < n; ++i) r.vectors(i, j) = ph * v(i, order[size_t(j)]);
  }
  return r;
}

// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const CMatrix& m, double tol = 1e-13) {
  return eig_hermitian(m, tol).values.front();
}

}  // namespace rotax

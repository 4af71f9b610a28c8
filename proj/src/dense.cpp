#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcflow/linalg.hpp"

namespace mcflow {

DenseMatrix DenseMatrix::from_csr(const CsrMatrix& a) {
  DenseMatrix d(a.rows(), a.cols());
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) d(i, col[k]) = val[k];
  }
  return d;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += s * b(k, j);
    }
  }
  return c;
}

DenseMatrix dense_lu_solve(const DenseMatrix& a, const DenseMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("dense_lu_solve: matrix not square");
  if (b.rows() != n) throw std::invalid_argument("dense_lu_solve: right-hand side has wrong row count");
  const std::size_t m = b.cols();

  DenseMatrix lu = a;
  DenseMatrix x = b;
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (!(best > tiny)) throw SingularMatrixError("dense_lu_solve: matrix is singular to working precision");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(piv, j));
    }
    const double d = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu(i, k) / d;
      if (l == 0.0) continue;
      lu(i, k) = l;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= l * x(k, j);
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    const double d = lu(k, k);
    for (std::size_t j = 0; j < m; ++j) {
      double s = x(k, j);
      for (std::size_t c = k + 1; c < n; ++c) s -= lu(k, c) * x(c, j);
      x(k, j) = s / d;
    }
  }
  return x;
}

Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b) {
  DenseMatrix rhs(b.size(), 1);
  std::copy(b.begin(), b.end(), rhs.data().begin());
  DenseMatrix x = dense_lu_solve(a, rhs);
  return Vector(x.data().begin(), x.data().end());
}

}  // namespace mcflow

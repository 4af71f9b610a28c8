#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mcflow/linalg.hpp"

namespace mcflow {

namespace {

double dense_min_eigenvalue(const CsrMatrix& s) {
  const auto n = static_cast<Eigen::Index>(s.rows());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto ptr = s.row_ptr();
  const auto col = s.col_idx();
  const auto val = s.values();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[k])) = val[k];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NotConvergedError("min_eigenvalue: dense eigensolve failed");
  return solver.eigenvalues()(0);
}

// Inverse iteration on S + shift*I, with the shift chosen from Gershgorin
// discs so the shifted matrix is SPD and CG applies.
double iterative_min_eigenvalue(const CsrMatrix& s, double tol) {
  const std::size_t n = s.rows();
  const auto ptr = s.row_ptr();
  const auto col = s.col_idx();
  const auto val = s.values();
  double lower = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0, off = 0.0;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      if (col[k] == i) diag = val[k];
      else off += std::abs(val[k]);
    }
    lower = std::min(lower, diag - off);
  }
  const double delta = std::max(tol, 1e-10 * s.max_abs());
  const double shift = std::max(0.0, -lower) + delta;
  const CsrMatrix shifted = s.with_diagonal_added(Vector(n, shift));
  const CgSolver solver(shifted, CgOptions{Preconditioner::ilu0, 1e-10, 50000});

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(n);
  for (double& v : x) v = dist(rng);
  double nx = norm2(x);
  for (double& v : x) v /= nx;

  double estimate = dot(x, spmv(s, x));
  Vector y(n);
  for (int it = 0; it < 2000; ++it) {
    std::copy(x.begin(), x.end(), y.begin());
    const SolveStats stats = solver.solve(x, y);
    if (!stats.converged) throw NotConvergedError("min_eigenvalue: inner CG solve did not converge");
    nx = norm2(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / nx;
    const double next = dot(x, spmv(s, x));
    const bool done = std::abs(next - estimate) <= 0.1 * tol;
    estimate = next;
    if (done) return estimate;
  }
  throw NotConvergedError("min_eigenvalue: inverse iteration did not converge");
}

}  // namespace

double min_eigenvalue(const CsrMatrix& s, double tol, std::size_t dense_limit) {
  if (s.rows() != s.cols()) throw std::invalid_argument("min_eigenvalue: matrix not square");
  if (s.rows() == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("min_eigenvalue: tolerance must be positive");
  if (s.rows() <= dense_limit) return dense_min_eigenvalue(s);
  return iterative_min_eigenvalue(s, tol);
}

}  // namespace mcflow

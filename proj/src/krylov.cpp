#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mcflow/linalg.hpp"

namespace mcflow {

Ilu0::Ilu0(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("ilu0: matrix not square");
  const std::size_t n = a.rows();
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  Vector val(a.values().begin(), a.values().end());
  diag_pos_.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const auto first = col.begin() + static_cast<std::ptrdiff_t>(ptr[i]);
    const auto last = col.begin() + static_cast<std::ptrdiff_t>(ptr[i + 1]);
    const auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i) {
      throw FactorizationError(i, "ilu0: missing diagonal entry in row " + std::to_string(i));
    }
    diag_pos_[i] = static_cast<std::size_t>(it - col.begin());
  }

  constexpr std::size_t absent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos(n, absent);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) pos[col[k]] = k;
    for (std::size_t k = ptr[i]; k < diag_pos_[i]; ++k) {
      const std::size_t r = col[k];
      const double pivot = val[diag_pos_[r]];
      val[k] /= pivot;
      const double lik = val[k];
      for (std::size_t kk = diag_pos_[r] + 1; kk < ptr[r + 1]; ++kk) {
        const std::size_t p = pos[col[kk]];
        if (p != absent) val[p] -= lik * val[kk];
      }
    }
    const double d = val[diag_pos_[i]];
    if (!(std::abs(d) > 0.0) || !std::isfinite(d)) {
      throw FactorizationError(i, "ilu0: zero pivot in row " + std::to_string(i));
    }
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) pos[col[k]] = absent;
  }
  factors_ = CsrMatrix(n, n, std::vector<std::size_t>(ptr.begin(), ptr.end()),
                       std::vector<std::size_t>(col.begin(), col.end()), std::move(val));
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const {
  const std::size_t n = factors_.rows();
  const auto ptr = factors_.row_ptr();
  const auto col = factors_.col_idx();
  const auto val = factors_.values();
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    for (std::size_t k = ptr[i]; k < diag_pos_[i]; ++k) s -= val[k] * z[col[k]];
    z[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = diag_pos_[i] + 1; k < ptr[i + 1]; ++k) s -= val[k] * z[col[k]];
    z[i] = s / val[diag_pos_[i]];
  }
}

Ilu0 ilu0_factor(const CsrMatrix& a) { return Ilu0(a); }

CgSolver::CgSolver(const CsrMatrix& a, CgOptions options)
    : a_(&a), options_(options), kind_(options.preconditioner) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cg: matrix not square");
  if (kind_ == Preconditioner::ilu0) {
    try {
      ilu_.emplace(a);
    } catch (const FactorizationError&) {
      kind_ = Preconditioner::jacobi;
    }
  }
  if (kind_ == Preconditioner::jacobi) {
    inv_diag_ = a.diagonal_values();
    for (double& d : inv_diag_) d = d != 0.0 ? 1.0 / d : 1.0;
  }
}

void CgSolver::precondition(std::span<const double> r, std::span<double> z) const {
  switch (kind_) {
    case Preconditioner::none:
      std::copy(r.begin(), r.end(), z.begin());
      break;
    case Preconditioner::jacobi:
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
      break;
    case Preconditioner::ilu0:
      ilu_->apply(r, z);
      break;
  }
}

SolveStats CgSolver::solve(std::span<const double> b, std::span<double> x) const {
  return solve(b, x, nullptr);
}

SolveStats CgSolver::solve(std::span<const double> b, std::span<double> x, Vector* history) const {
  const std::size_t n = a_->rows();
  if (b.size() != n || x.size() != n) throw std::invalid_argument("cg: dimension mismatch");
  SolveStats stats;
  if (!options_.warm_start) std::fill(x.begin(), x.end(), 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    stats.converged = true;
    if (history) history->push_back(0.0);
    return stats;
  }
  Vector r(b.begin(), b.end());
  spmv_into(*a_, x, r, -1.0, 1.0);
  double rnorm = norm2(r);
  stats.relative_residual = rnorm / bnorm;
  if (history) history->push_back(stats.relative_residual);
  if (stats.relative_residual <= options_.rtol) {
    stats.converged = true;
    return stats;
  }

  Vector z(n), p(n), q(n);
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= options_.max_iter; ++it) {
    spmv_into(*a_, p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness
    const double alpha = rz / pq;
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rr += r[i] * r[i];
    }
    stats.iterations = it;
    stats.relative_residual = std::sqrt(rr) / bnorm;
    if (history) history->push_back(stats.relative_residual);
    if (stats.relative_residual <= options_.rtol) {
      stats.converged = true;
      break;
    }
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return stats;
}

SolveStats cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                    const CgOptions& options) {
  return CgSolver(a, options).solve(b, x);
}

}  // namespace mcflow

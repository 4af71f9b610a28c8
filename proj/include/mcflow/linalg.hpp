#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcflow/errors.hpp"

namespace mcflow {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix with strictly increasing column indices per
/// row. Immutable after construction.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// All-zero matrix of the given shape.
  CsrMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of raw CSR arrays; validates ordering and bounds.
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<double> values);

  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> diag);
  /// Duplicate entries are summed. Explicit zeros are kept so that a pattern
  /// can be assembled ahead of values.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_values() const;
  CsrMatrix transpose() const;
  /// Same pattern, values multiplied by `factor`.
  CsrMatrix scaled(double factor) const;
  /// Copy with `shift[i]` added to each diagonal entry (pattern extended when
  /// a diagonal entry is missing).
  CsrMatrix with_diagonal_added(std::span<const double> shift) const;
  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// y = A x.
Vector spmv(const CsrMatrix& a, std::span<const double> x);
/// y = alpha * A x + beta * y.
void spmv_into(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
               double alpha = 1.0, double beta = 0.0);

/// alpha * A + beta * B on the union pattern.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha = 1.0, double beta = 1.0);
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);
/// (A + A^T) / 2.
CsrMatrix symmetrize(const CsrMatrix& a);
/// max |A - A^T|.
double max_asymmetry(const CsrMatrix& a);
/// R A R^T. When A is symmetric the product is symmetrized so that roundoff
/// skew does not survive.
CsrMatrix triple_product(const CsrMatrix& r, const CsrMatrix& a);
/// Rows `rows` and columns `cols` of A, renumbered in the order given.
CsrMatrix submatrix(const CsrMatrix& a, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols);
/// Assembles a block matrix; `blocks[i][j]` must be rows_i x cols_j.
CsrMatrix compose_blocks(const std::vector<std::vector<CsrMatrix>>& blocks);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// ---------------------------------------------------------------------------
// Iterative solvers

enum class Preconditioner { none, jacobi, ilu0 };

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  Preconditioner preconditioner = Preconditioner::ilu0;
  double rtol = 1e-8;
  int max_iter = 20000;
  /// Start from the incoming x; otherwise from zero.
  bool warm_start = true;
};

/// Incomplete LU factorization with zero fill. L has a unit diagonal; both
/// factors share the pattern of the input matrix.
class Ilu0 {
 public:
  explicit Ilu0(const CsrMatrix& a);
  /// z = (LU)^{-1} r.
  void apply(std::span<const double> r, std::span<double> z) const;
  std::size_t size() const noexcept { return factors_.rows(); }
  /// Combined factors: strictly lower part holds L, upper part holds U.
  const CsrMatrix& factors() const noexcept { return factors_; }

 private:
  CsrMatrix factors_;
  std::vector<std::size_t> diag_pos_;
};

Ilu0 ilu0_factor(const CsrMatrix& a);

/// Preconditioned conjugate gradients bound to one matrix, which must outlive
/// the solver. The preconditioner is built once; `solve` may be called
/// repeatedly and concurrently.
class CgSolver {
 public:
  CgSolver(const CsrMatrix& a, CgOptions options = {});

  /// Solves A x = b starting from the contents of `x`.
  SolveStats solve(std::span<const double> b, std::span<double> x) const;
  /// As above; appends ||r_k|| / ||b|| for k = 0, 1, ... to `history`.
  SolveStats solve(std::span<const double> b, std::span<double> x, Vector* history) const;

  const CsrMatrix& matrix() const noexcept { return *a_; }
  /// Preconditioner actually in use; ILU(0) falls back to Jacobi on a zero pivot.
  Preconditioner preconditioner() const noexcept { return kind_; }

 private:
  void precondition(std::span<const double> r, std::span<double> z) const;

  const CsrMatrix* a_;
  CgOptions options_;
  Preconditioner kind_;
  Vector inv_diag_;
  std::optional<Ilu0> ilu_;
};

/// One-shot convenience wrapper around CgSolver; `x` holds the initial guess.
SolveStats cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                    const CgOptions& options = {});

// ---------------------------------------------------------------------------
// Dense kernels

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix from_csr(const CsrMatrix& a);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

/// LU with partial pivoting; solves A X = B for every column of B.
DenseMatrix dense_lu_solve(const DenseMatrix& a, const DenseMatrix& b);
Vector dense_lu_solve(const DenseMatrix& a, std::span<const double> b);

/// Smallest eigenvalue of a symmetric matrix. Dense eigensolve up to
/// `dense_limit` rows, shifted inverse iteration with CG inner solves above.
double min_eigenvalue(const CsrMatrix& s, double tol, std::size_t dense_limit = 2000);

// ---------------------------------------------------------------------------
// MatrixMarket I/O

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a);
void write_matrix_market_array(const std::filesystem::path& path, std::span<const double> v);
CsrMatrix read_matrix_market(const std::filesystem::path& path);
Vector read_matrix_market_array(const std::filesystem::path& path);

}  // namespace mcflow

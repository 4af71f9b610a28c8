#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcflow/linalg.hpp"

namespace mcflow {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw std::invalid_argument("CsrMatrix: inconsistent array sizes");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw std::invalid_argument("CsrMatrix: row offsets not monotone");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw std::invalid_argument("CsrMatrix: column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
        throw std::invalid_argument("CsrMatrix: column indices not strictly increasing in row " +
                                    std::to_string(i));
      }
    }
  }
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  Vector ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<std::size_t> ptr(n + 1);
  std::vector<std::size_t> cols(n);
  std::iota(ptr.begin(), ptr.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return CsrMatrix(n, n, std::move(ptr), std::move(cols), Vector(diag.begin(), diag.end()));
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) throw std::invalid_argument("from_triplets: index out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  Vector values;
  col_idx.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++ptr[t.row + 1];
  }
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  return CsrMatrix(rows, cols, std::move(ptr), std::move(col_idx), std::move(values));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) throw std::invalid_argument("CsrMatrix::at: index out of range");
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Vector CsrMatrix::diagonal_values() const {
  Vector d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++ptr[c + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
  std::vector<std::size_t> cols(nnz());
  Vector vals(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t dst = next[col_idx_[k]]++;
      cols[dst] = i;
      vals[dst] = values_[k];
    }
  }
  return CsrMatrix(cols_, rows_, std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::scaled(double factor) const {
  Vector vals(values_);
  for (double& v : vals) v *= factor;
  return CsrMatrix(rows_, cols_, row_ptr_, col_idx_, std::move(vals));
}

CsrMatrix CsrMatrix::with_diagonal_added(std::span<const double> shift) const {
  if (shift.size() != rows_ || rows_ != cols_) {
    throw std::invalid_argument("with_diagonal_added: dimension mismatch");
  }
  return add(*this, CsrMatrix::diagonal(shift));
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.rows(), 0.0);
  spmv_into(a, x, y);
  return y;
}

void spmv_into(const CsrMatrix& a, std::span<const double> x, std::span<double> y, double alpha,
               double beta) {
  if (x.size() != a.cols() || y.size() != a.rows()) {
    throw std::invalid_argument("spmv: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " times " + std::to_string(x.size()) +
                                ")");
  }
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = beta == 0.0 ? alpha * s : alpha * s + beta * y[i];
  }
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: dimension mismatch");
  const auto ap = a.row_ptr(), ac = a.col_idx();
  const auto bp = b.row_ptr(), bc = b.col_idx();
  const auto av = a.values(), bv = b.values();
  std::vector<std::size_t> ptr(a.rows() + 1, 0);
  std::vector<std::size_t> cols;
  Vector vals;
  cols.reserve(a.nnz() + b.nnz());
  vals.reserve(a.nnz() + b.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t ka = ap[i], kb = bp[i];
    while (ka < ap[i + 1] || kb < bp[i + 1]) {
      if (kb == bp[i + 1] || (ka < ap[i + 1] && ac[ka] < bc[kb])) {
        cols.push_back(ac[ka]);
        vals.push_back(alpha * av[ka++]);
      } else if (ka == ap[i + 1] || bc[kb] < ac[ka]) {
        cols.push_back(bc[kb]);
        vals.push_back(beta * bv[kb++]);
      } else {
        cols.push_back(ac[ka]);
        vals.push_back(alpha * av[ka++] + beta * bv[kb++]);
      }
    }
    ptr[i + 1] = cols.size();
  }
  return CsrMatrix(a.rows(), a.cols(), std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  const auto ap = a.row_ptr(), ac = a.col_idx();
  const auto bp = b.row_ptr(), bc = b.col_idx();
  const auto av = a.values(), bv = b.values();
  std::vector<std::size_t> ptr(a.rows() + 1, 0);
  std::vector<std::size_t> cols;
  Vector vals;
  Vector acc(b.cols(), 0.0);
  std::vector<char> used(b.cols(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    touched.clear();
    for (std::size_t ka = ap[i]; ka < ap[i + 1]; ++ka) {
      const double s = av[ka];
      const std::size_t r = ac[ka];
      for (std::size_t kb = bp[r]; kb < bp[r + 1]; ++kb) {
        const std::size_t c = bc[kb];
        if (!used[c]) {
          used[c] = 1;
          touched.push_back(c);
        }
        acc[c] += s * bv[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t c : touched) {
      cols.push_back(c);
      vals.push_back(acc[c]);
      acc[c] = 0.0;
      used[c] = 0;
    }
    ptr[i + 1] = cols.size();
  }
  return CsrMatrix(a.rows(), b.cols(), std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix symmetrize(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("symmetrize: matrix not square");
  return add(a, a.transpose(), 0.5, 0.5);
}

double max_asymmetry(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("max_asymmetry: matrix not square");
  return add(a, a.transpose(), 1.0, -1.0).max_abs();
}

CsrMatrix triple_product(const CsrMatrix& r, const CsrMatrix& a) {
  if (r.cols() != a.rows() || a.rows() != a.cols()) {
    throw std::invalid_argument("triple_product: dimension mismatch");
  }
  CsrMatrix c = multiply(multiply(r, a), r.transpose());
  if (max_asymmetry(a) > 1e-13 * a.max_abs()) return c;
  return symmetrize(c);
}

CsrMatrix submatrix(const CsrMatrix& a, std::span<const std::size_t> rows,
                    std::span<const std::size_t> cols) {
  constexpr std::size_t absent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> col_map(a.cols(), absent);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= a.cols()) throw std::invalid_argument("submatrix: column index out of range");
    col_map[cols[j]] = j;
  }
  const auto ap = a.row_ptr(), ac = a.col_idx();
  const auto av = a.values();
  std::vector<std::size_t> ptr(rows.size() + 1, 0);
  std::vector<std::size_t> out_cols;
  Vector out_vals;
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw std::invalid_argument("submatrix: row index out of range");
    row.clear();
    for (std::size_t k = ap[rows[i]]; k < ap[rows[i] + 1]; ++k) {
      const std::size_t j = col_map[ac[k]];
      if (j != absent) row.emplace_back(j, av[k]);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      out_cols.push_back(j);
      out_vals.push_back(v);
    }
    ptr[i + 1] = out_cols.size();
  }
  return CsrMatrix(rows.size(), cols.size(), std::move(ptr), std::move(out_cols), std::move(out_vals));
}

CsrMatrix compose_blocks(const std::vector<std::vector<CsrMatrix>>& blocks) {
  const std::size_t nb = blocks.size();
  if (nb == 0) return CsrMatrix();
  const std::size_t mb = blocks.front().size();
  std::vector<std::size_t> row_off(nb + 1, 0), col_off(mb + 1, 0);
  for (std::size_t i = 0; i < nb; ++i) {
    if (blocks[i].size() != mb) throw std::invalid_argument("compose_blocks: ragged block grid");
    row_off[i + 1] = row_off[i] + blocks[i][0].rows();
  }
  for (std::size_t j = 0; j < mb; ++j) col_off[j + 1] = col_off[j] + blocks[0][j].cols();
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < mb; ++j) {
      if (blocks[i][j].rows() != row_off[i + 1] - row_off[i] ||
          blocks[i][j].cols() != col_off[j + 1] - col_off[j]) {
        throw std::invalid_argument("compose_blocks: block (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") has inconsistent shape");
      }
    }
  }
  std::vector<std::size_t> ptr(row_off[nb] + 1, 0);
  std::vector<std::size_t> cols;
  Vector vals;
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t i = 0; i < blocks[bi][0].rows(); ++i) {
      for (std::size_t bj = 0; bj < mb; ++bj) {
        const auto& blk = blocks[bi][bj];
        const auto p = blk.row_ptr();
        const auto c = blk.col_idx();
        const auto v = blk.values();
        for (std::size_t k = p[i]; k < p[i + 1]; ++k) {
          cols.push_back(col_off[bj] + c[k]);
          vals.push_back(v[k]);
        }
      }
      ptr[row_off[bi] + i + 1] = cols.size();
    }
  }
  return CsrMatrix(row_off[nb], col_off[mb], std::move(ptr), std::move(cols), std::move(vals));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace mcflow

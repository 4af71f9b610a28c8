#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mcflow/linalg.hpp"

namespace mcflow {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

// Returns the first non-comment line after the banner.
std::string skip_comments(std::istream& in, const std::string& expected_banner) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(expected_banner, 0) != 0) {
    throw IoError("MatrixMarket: expected banner '" + expected_banner + "'");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw IoError("MatrixMarket: missing size line");
}

}  // namespace

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a) {
  auto out = open_for_write(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      out << i + 1 << ' ' << col[k] + 1 << ' ' << val[k] << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_matrix_market_array(const std::filesystem::path& path, std::span<const double> v) {
  auto out = open_for_write(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  for (double x : v) out << x << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::istringstream size_line(skip_comments(in, "%%MatrixMarket matrix coordinate real general"));
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols >> nnz)) throw IoError("MatrixMarket: malformed size line");
  std::vector<Triplet> entries;
  entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v) || i == 0 || j == 0) throw IoError("MatrixMarket: malformed entry");
    entries.push_back({i - 1, j - 1, v});
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(entries));
}

Vector read_matrix_market_array(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::istringstream size_line(skip_comments(in, "%%MatrixMarket matrix array real general"));
  std::size_t rows = 0, cols = 0;
  if (!(size_line >> rows >> cols)) throw IoError("MatrixMarket: malformed size line");
  Vector v(rows * cols);
  for (double& x : v) {
    if (!(in >> x)) throw IoError("MatrixMarket: truncated array");
  }
  return v;
}

}  // namespace mcflow

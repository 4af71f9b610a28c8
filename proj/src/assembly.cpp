#include "mcflow/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mcflow {

void validate(const ContinuumSpec& spec) {
  if (!(spec.storage > 0.0) || !std::isfinite(spec.storage)) {
    throw std::invalid_argument("continuum '" + spec.name + "': storage c must be positive");
  }
  if (!(spec.permeability > 0.0) || !std::isfinite(spec.permeability)) {
    throw std::invalid_argument("continuum '" + spec.name + "': permeability k must be positive");
  }
}

BlockOperator::BlockOperator(std::vector<ContinuumSpec> continua, std::vector<std::vector<CsrMatrix>> a,
                             std::vector<Vector> mass, std::vector<Vector> rhs, std::vector<Vector> measures)
    : continua_(std::move(continua)),
      a_(std::move(a)),
      mass_(std::move(mass)),
      rhs_(std::move(rhs)),
      measures_(std::move(measures)) {
  const std::size_t l = continua_.size();
  if (a_.size() != l || mass_.size() != l || rhs_.size() != l) {
    throw std::invalid_argument("block operator: block counts do not match the continuum count");
  }
  if (measures_.empty()) measures_ = mass_;
  if (measures_.size() != l) throw std::invalid_argument("block operator: measure count mismatch");
  for (std::size_t i = 0; i < l; ++i) {
    if (a_[i].size() != l) throw std::invalid_argument("block operator: block row has wrong length");
    const std::size_t n = mass_[i].size();
    if (rhs_[i].size() != n || measures_[i].size() != n) {
      throw std::invalid_argument("block operator: vector sizes differ within a continuum");
    }
    for (std::size_t j = 0; j < l; ++j) {
      if (a_[i][j].rows() != n || a_[i][j].cols() != mass_[j].size()) {
        throw std::invalid_argument("block operator: block (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") has the wrong shape");
      }
    }
  }
}

std::size_t BlockOperator::total_size() const { return offsets().back(); }

std::vector<std::size_t> BlockOperator::offsets() const {
  std::vector<std::size_t> off(continua_.size() + 1, 0);
  for (std::size_t i = 0; i < continua_.size(); ++i) off[i + 1] = off[i] + mass_[i].size();
  return off;
}

CsrMatrix BlockOperator::global_matrix() const { return compose_blocks(a_); }

Vector BlockOperator::global_mass() const { return join(mass_); }

Vector BlockOperator::global_rhs() const { return join(rhs_); }

std::vector<Vector> BlockOperator::split(std::span<const double> global) const {
  const auto off = offsets();
  if (global.size() != off.back()) throw std::invalid_argument("block operator: vector size mismatch");
  std::vector<Vector> parts(continua_.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    parts[i].assign(global.begin() + static_cast<std::ptrdiff_t>(off[i]),
                    global.begin() + static_cast<std::ptrdiff_t>(off[i + 1]));
  }
  return parts;
}

Vector BlockOperator::join(const std::vector<Vector>& parts) const {
  if (parts.size() != continua_.size()) throw std::invalid_argument("block operator: part count mismatch");
  Vector out;
  out.reserve(total_size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].size() != mass_[i].size()) throw std::invalid_argument("block operator: part size mismatch");
    out.insert(out.end(), parts[i].begin(), parts[i].end());
  }
  return out;
}

BlockOperator BlockOperator::with_rhs(std::vector<Vector> rhs) const {
  return BlockOperator(continua_, a_, mass_, std::move(rhs), measures_);
}

BlockOperator BlockOperator::with_blocks(std::vector<std::vector<CsrMatrix>> a) const {
  return BlockOperator(continua_, std::move(a), mass_, rhs_, measures_);
}

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Symmetric TPFA operator from a list of (i, j, T) connections.
CsrMatrix from_connections(std::size_t n, const std::vector<ExchangeLink>& conns) {
  std::vector<Triplet> t;
  t.reserve(n + 4 * conns.size());
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 0.0});
  for (const auto& c : conns) {
    t.push_back({c.i, c.i, c.transmissibility});
    t.push_back({c.j, c.j, c.transmissibility});
    t.push_back({c.i, c.j, -c.transmissibility});
    t.push_back({c.j, c.i, -c.transmissibility});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

}  // namespace

CsrMatrix assemble_diffusion_2d(const StructuredGrid& grid, std::span<const double> k) {
  const std::size_t n = grid.cell_count();
  if (k.size() != n) throw std::invalid_argument("diffusion: permeability array size mismatch");
  for (double v : k) {
    if (!(v > 0.0)) throw std::invalid_argument("diffusion: permeability must be positive");
  }
  const double tx = grid.hy() / grid.hx();
  const double ty = grid.hx() / grid.hy();
  std::vector<ExchangeLink> conns;
  conns.reserve(2 * n);
  for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const std::size_t c = grid.index(ix, iy);
      if (ix + 1 < grid.nx()) {
        const std::size_t e = grid.index(ix + 1, iy);
        conns.push_back({c, e, harmonic(k[c], k[e]) * tx});
      }
      if (iy + 1 < grid.ny()) {
        const std::size_t nb = grid.index(ix, iy + 1);
        conns.push_back({c, nb, harmonic(k[c], k[nb]) * ty});
      }
    }
  }
  return from_connections(n, conns);
}

CsrMatrix assemble_diffusion_2d(const StructuredGrid& grid, double k) {
  const Vector ks(grid.cell_count(), k);
  return assemble_diffusion_2d(grid, ks);
}

CsrMatrix assemble_diffusion_fracture(const FractureMesh& fmesh, double k_f) {
  if (!(k_f > 0.0)) throw std::invalid_argument("fracture diffusion: permeability must be positive");
  std::vector<ExchangeLink> conns;
  conns.reserve(fmesh.links.size());
  for (const auto& l : fmesh.links) {
    if (!(l.distance > 0.0)) throw std::invalid_argument("fracture diffusion: non-positive link distance");
    conns.push_back({l.a, l.b, k_f / l.distance});
  }
  return from_connections(fmesh.size(), conns);
}

CsrMatrix assemble_mass(std::span<const double> measures, std::span<const double> c) {
  if (c.size() != 1 && c.size() != measures.size()) {
    throw std::invalid_argument("mass: storage array must hold one value or one per cell");
  }
  Vector d(measures.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double ci = c.size() == 1 ? c[0] : c[i];
    if (!(ci > 0.0) || !(measures[i] > 0.0)) throw std::invalid_argument("mass: non-positive entry");
    d[i] = ci * measures[i];
  }
  return CsrMatrix::diagonal(d);
}

std::vector<ExchangeLink> embedded_fracture_links(const FractureMesh& fmesh, double coefficient,
                                                  double distance) {
  if (!(coefficient > 0.0) || !(distance > 0.0)) {
    throw std::invalid_argument("exchange: coefficient and distance must be positive");
  }
  std::vector<ExchangeLink> links;
  links.reserve(fmesh.size());
  for (std::size_t f = 0; f < fmesh.size(); ++f) {
    links.push_back({fmesh.cells[f].host, f, coefficient * fmesh.cells[f].length / distance});
  }
  return links;
}

std::vector<ExchangeLink> overlap_links(const StructuredGrid& grid, double coefficient, double distance) {
  if (!(coefficient > 0.0) || !(distance > 0.0)) {
    throw std::invalid_argument("exchange: coefficient and distance must be positive");
  }
  const double t = coefficient * grid.cell_area() / distance;
  std::vector<ExchangeLink> links(grid.cell_count());
  for (std::size_t c = 0; c < links.size(); ++c) links[c] = {c, c, t};
  return links;
}

ExchangeBlocks assemble_exchange(std::size_t size_a, std::size_t size_b,
                                 std::span<const ExchangeLink> links) {
  ExchangeBlocks out;
  out.diag_a.assign(size_a, 0.0);
  out.diag_b.assign(size_b, 0.0);
  std::vector<Triplet> t;
  t.reserve(links.size());
  for (const auto& l : links) {
    if (l.i >= size_a || l.j >= size_b) throw std::invalid_argument("exchange: link index out of range");
    if (!(l.transmissibility >= 0.0)) throw std::invalid_argument("exchange: negative transmissibility");
    out.diag_a[l.i] += l.transmissibility;
    out.diag_b[l.j] += l.transmissibility;
    t.push_back({l.i, l.j, -l.transmissibility});
  }
  out.off = CsrMatrix::from_triplets(size_a, size_b, std::move(t));
  return out;
}

BlockOperator assemble_block_operator(const std::vector<ContinuumSpec>& continua,
                                      const StructuredGrid& grid, const FractureMesh& fmesh,
                                      const ExchangeSpec& exchange) {
  const std::size_t l = continua.size();
  if (l == 0) throw std::invalid_argument("block operator: no continua");
  std::vector<Vector> measures(l), mass(l), rhs(l);
  std::vector<std::vector<CsrMatrix>> a(l, std::vector<CsrMatrix>(l));
  std::vector<CsrMatrix> diffusion(l);
  for (std::size_t i = 0; i < l; ++i) {
    validate(continua[i]);
    if (continua[i].kind == ContinuumKind::background) {
      measures[i].assign(grid.cell_count(), grid.cell_area());
      diffusion[i] = assemble_diffusion_2d(grid, continua[i].permeability);
    } else {
      measures[i].resize(fmesh.size());
      for (std::size_t f = 0; f < fmesh.size(); ++f) measures[i][f] = fmesh.cells[f].length;
      diffusion[i] = assemble_diffusion_fracture(fmesh, continua[i].permeability);
    }
    mass[i].resize(measures[i].size());
    for (std::size_t k = 0; k < mass[i].size(); ++k) mass[i][k] = continua[i].storage * measures[i][k];
    rhs[i].assign(measures[i].size(), 0.0);
  }
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      if (i != j) a[i][j] = CsrMatrix(measures[i].size(), measures[j].size());
    }
  }

  std::vector<Vector> row_sums(l);
  for (std::size_t i = 0; i < l; ++i) row_sums[i].assign(measures[i].size(), 0.0);
  for (const auto& p : exchange.pairs) {
    if (p.a >= l || p.b >= l || p.a == p.b) throw std::invalid_argument("exchange: invalid continuum pair");
    std::vector<ExchangeLink> links;
    if (p.rule == ExchangeRule::embedded_fracture) {
      if (continua[p.a].kind != ContinuumKind::background || continua[p.b].kind != ContinuumKind::fracture) {
        throw std::invalid_argument("exchange: embedded-fracture rule needs (background, fracture)");
      }
      links = embedded_fracture_links(fmesh, p.coefficient, p.distance);
    } else {
      if (continua[p.a].kind != ContinuumKind::background || continua[p.b].kind != ContinuumKind::background) {
        throw std::invalid_argument("exchange: overlap rule needs two background continua");
      }
      links = overlap_links(grid, p.coefficient, p.distance);
    }
    ExchangeBlocks q = assemble_exchange(measures[p.a].size(), measures[p.b].size(), links);
    for (std::size_t k = 0; k < q.diag_a.size(); ++k) row_sums[p.a][k] += q.diag_a[k];
    for (std::size_t k = 0; k < q.diag_b.size(); ++k) row_sums[p.b][k] += q.diag_b[k];
    a[p.a][p.b] = add(a[p.a][p.b], q.off);
    a[p.b][p.a] = add(a[p.b][p.a], q.off.transpose());
  }
  for (std::size_t i = 0; i < l; ++i) a[i][i] = diffusion[i].with_diagonal_added(row_sums[i]);

  BlockOperator op(continua, std::move(a), std::move(mass), std::move(rhs), std::move(measures));
  verify_block_operator(op);
  return op;
}

void verify_block_operator(const BlockOperator& op, double tol) {
  const std::size_t l = op.continuum_count();
  double scale = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) scale = std::max(scale, op.block(i, j).max_abs());
  }
  const double limit = tol * std::max(scale, 1.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i; j < l; ++j) {
      const CsrMatrix diff = add(op.block(i, j), op.block(j, i).transpose(), 1.0, -1.0);
      const double asym = diff.max_abs();
      if (asym > limit) {
        throw AssemblyError("block (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is not symmetric: deviation " + std::to_string(asym));
      }
    }
  }
  for (std::size_t i = 0; i < l; ++i) {
    Vector diag = op.block(i, i).diagonal_values();
    Vector off(diag.size(), 0.0);
    for (std::size_t j = 0; j < l; ++j) {
      const CsrMatrix& b = op.block(i, j);
      const auto ptr = b.row_ptr();
      const auto col = b.col_idx();
      const auto val = b.values();
      for (std::size_t r = 0; r < b.rows(); ++r) {
        for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
          if (i != j || col[k] != r) off[r] += std::abs(val[k]);
        }
      }
    }
    for (std::size_t r = 0; r < diag.size(); ++r) {
      if (diag[r] < off[r] - limit) {
        throw AssemblyError("continuum " + std::to_string(i) + " row " + std::to_string(r) +
                            " is not diagonally dominant");
      }
    }
  }
}

BlockOperator apply_well(const BlockOperator& op, const WellSpec& well) {
  if (well.continuum >= op.continuum_count()) throw std::invalid_argument("well: continuum out of range");
  if (!(well.index >= 0.0)) throw std::invalid_argument("well: index must be non-negative");
  const std::size_t c = well.continuum;
  const Vector& meas = op.measures(c);
  Vector shift(op.size(c), 0.0);
  std::vector<Vector> rhs;
  for (std::size_t i = 0; i < op.continuum_count(); ++i) rhs.push_back(op.rhs(i));
  for (std::size_t cell : well.cells) {
    if (cell >= op.size(c)) throw std::invalid_argument("well: cell index out of range");
    shift[cell] += well.index * meas[cell];
    rhs[c][cell] += well.index * well.pressure * meas[cell];
  }
  auto blocks = op.blocks();
  blocks[c][c] = blocks[c][c].with_diagonal_added(shift);
  return op.with_blocks(std::move(blocks)).with_rhs(std::move(rhs));
}

}  // namespace mcflow

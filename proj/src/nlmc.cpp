#include "mcflow/nlmc.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace mcflow {

std::size_t LocalDomain::local_size() const {
  std::size_t n = 0;
  for (const auto& f : fine) n += f.size();
  return n;
}

const ContinuumCoarseMap& continuum_map(const CoarseMap& maps, ContinuumKind kind) {
  return kind == ContinuumKind::background ? maps.background : maps.fracture;
}

LocalDomain build_local_domain(std::size_t center, std::size_t layers, const CoarseMap& maps,
                               std::span<const ContinuumKind> kinds) {
  const StructuredGrid& coarse = maps.coarse;
  if (center >= coarse.cell_count()) throw std::invalid_argument("local domain: coarse index out of range");
  if (layers < 1) throw std::invalid_argument("local domain: layers must be at least 1");

  LocalDomain d;
  d.center = center;
  d.layers = layers;
  const std::size_t cx = coarse.ix(center);
  const std::size_t cy = coarse.iy(center);
  d.cx0 = cx >= layers ? cx - layers : 0;
  d.cy0 = cy >= layers ? cy - layers : 0;
  d.cx1 = std::min(coarse.nx(), cx + layers + 1);
  d.cy1 = std::min(coarse.ny(), cy + layers + 1);
  for (std::size_t iy = d.cy0; iy < d.cy1; ++iy) {
    for (std::size_t ix = d.cx0; ix < d.cx1; ++ix) d.coarse_cells.push_back(coarse.index(ix, iy));
  }
  d.covers_domain = d.coarse_cells.size() == coarse.cell_count();

  d.fine.resize(kinds.size());
  d.groups.resize(kinds.size());
  for (std::size_t alpha = 0; alpha < kinds.size(); ++alpha) {
    const ContinuumCoarseMap& map = continuum_map(maps, kinds[alpha]);
    for (std::size_t cell : d.coarse_cells) {
      const std::size_t slot = map.coarse_slot[cell];
      if (slot == ContinuumCoarseMap::npos) continue;
      ConstraintGroup g;
      g.coarse_cell = cell;
      g.slot = slot;
      for (std::size_t f : map.members[slot]) {
        g.local.push_back(d.fine[alpha].size());
        g.weights.push_back(map.cell_measures[f] / map.measures[slot]);
        d.fine[alpha].push_back(f);
      }
      d.groups[alpha].push_back(std::move(g));
    }
  }
  return d;
}

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenSparse to_eigen(const CsrMatrix& a) {
  // A symmetric CSR matrix read column-wise is the same matrix.
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(a.nnz());
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      t.emplace_back(static_cast<int>(i), static_cast<int>(col[k]), val[k]);
    }
  }
  EigenSparse m(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

struct LocalSystem {
  std::vector<std::size_t> global;  // local -> global fine index
  std::vector<std::size_t> group_offset;  // per continuum, first constraint row
  std::size_t constraints = 0;
};

LocalSystem local_system(const LocalDomain& d, std::span<const std::size_t> offsets) {
  LocalSystem s;
  s.group_offset.resize(d.fine.size() + 1, 0);
  for (std::size_t alpha = 0; alpha < d.fine.size(); ++alpha) {
    for (std::size_t f : d.fine[alpha]) s.global.push_back(offsets[alpha] + f);
    s.group_offset[alpha + 1] = s.group_offset[alpha] + d.groups[alpha].size();
  }
  s.constraints = s.group_offset.back();
  return s;
}

// Column-major C^T (n_loc x m).
Eigen::MatrixXd constraint_transpose(const LocalDomain& d, const LocalSystem& s) {
  Eigen::MatrixXd ct = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.global.size()),
                                             static_cast<Eigen::Index>(s.constraints));
  std::size_t base = 0;
  for (std::size_t alpha = 0; alpha < d.fine.size(); ++alpha) {
    for (std::size_t g = 0; g < d.groups[alpha].size(); ++g) {
      const auto& grp = d.groups[alpha][g];
      const auto row = static_cast<Eigen::Index>(s.group_offset[alpha] + g);
      for (std::size_t k = 0; k < grp.local.size(); ++k) {
        ct(static_cast<Eigen::Index>(base + grp.local[k]), row) = grp.weights[k];
      }
    }
    base += d.fine[alpha].size();
  }
  return ct;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::size_t target_row(const LocalDomain& d, const LocalSystem& s, std::size_t alpha) {
  for (std::size_t g = 0; g < d.groups[alpha].size(); ++g) {
    if (d.groups[alpha][g].coarse_cell == d.center) return s.group_offset[alpha] + g;
  }
  throw BasisError(d.center, alpha, "coarse cell " + std::to_string(d.center) +
                                        " has no content in continuum " + std::to_string(alpha));
}

// Columns of the result are the local basis vectors for each target row.
Eigen::MatrixXd schur_solve(const CsrMatrix& a_loc, const Eigen::MatrixXd& ct,
                            const std::vector<std::size_t>& rows, const LocalDomain& d,
                            std::span<const std::size_t> targets) {
  Eigen::SimplicialLDLT<EigenSparse> ldlt(to_eigen(a_loc));
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw BasisError(d.center, targets.empty() ? 0 : targets[0],
                     "local stiffness of coarse cell " + std::to_string(d.center) + " is not positive definite");
  }
  const Eigen::MatrixXd z = ldlt.solve(ct);
  const Eigen::MatrixXd s = ct.transpose() * z;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(s.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) e(static_cast<Eigen::Index>(rows[t]), static_cast<Eigen::Index>(t)) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (!lu.isInvertible()) {
    throw BasisError(d.center, targets.empty() ? 0 : targets[0],
                     "constraint system of coarse cell " + std::to_string(d.center) + " is singular");
  }
  // Z and S^{-1} are both large when fracture and matrix constraints share a
  // patch, so psi = Z W cancels; refine against the actual residual C psi.
  Eigen::MatrixXd psi = z * lu.solve(e);
  for (int sweep = 0; sweep < 3; ++sweep) psi += z * lu.solve(e - ct.transpose() * psi);
  return psi;
}

// Full saddle system; used when the patch has no Dirichlet boundary and the
// local stiffness is singular.
Eigen::MatrixXd saddle_solve(const CsrMatrix& a_loc, const Eigen::MatrixXd& ct,
                             const std::vector<std::size_t>& rows, const LocalDomain& d,
                             std::span<const std::size_t> targets) {
  constexpr std::size_t kMaxDense = 6000;
  const std::size_t n = a_loc.rows();
  const std::size_t m = static_cast<std::size_t>(ct.cols());
  if (n + m > kMaxDense) {
    throw BasisError(d.center, targets.empty() ? 0 : targets[0],
                     "patch covering the whole domain is too large for a dense saddle solve");
  }
  DenseMatrix k(n + m, n + m);
  const auto ptr = a_loc.row_ptr();
  const auto col = a_loc.col_idx();
  const auto val = a_loc.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) k(i, col[p]) = val[p];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = ct(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      k(i, n + j) = c;
      k(n + j, i) = c;
    }
  }
  DenseMatrix e(n + m, rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) e(n + rows[t], t) = 1.0;
  DenseMatrix x;
  try {
    x = dense_lu_solve(k, e);
  } catch (const SingularMatrixError&) {
    throw BasisError(d.center, targets.empty() ? 0 : targets[0],
                     "saddle system of coarse cell " + std::to_string(d.center) + " is singular");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < rows.size(); ++t) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = x(i, t);
  }
  return out;
}

}  // namespace

std::vector<Basis> solve_patch(const LocalDomain& domain, const CsrMatrix& a,
                               std::span<const std::size_t> offsets, std::span<const std::size_t> targets) {
  if (offsets.size() != domain.fine.size() + 1) throw std::invalid_argument("solve_patch: offset count mismatch");
  if (a.rows() != offsets.back() || a.cols() != offsets.back()) {
    throw std::invalid_argument("solve_patch: matrix does not match the continuum offsets");
  }
  const LocalSystem sys = local_system(domain, offsets);
  std::vector<std::size_t> rows;
  for (std::size_t alpha : targets) {
    if (alpha >= domain.fine.size()) throw std::invalid_argument("solve_patch: continuum out of range");
    rows.push_back(target_row(domain, sys, alpha));
  }
  if (rows.empty()) return {};

  const CsrMatrix a_loc = submatrix(a, sys.global, sys.global);
  const Eigen::MatrixXd ct = constraint_transpose(domain, sys);
  const Eigen::MatrixXd psi = domain.covers_domain ? saddle_solve(a_loc, ct, rows, domain, targets)
                                                   : schur_solve(a_loc, ct, rows, domain, targets);

  // Post-check of the constraint identity.
  constexpr double kConstraintTol = 1e-8;
  const Eigen::MatrixXd residual = ct.transpose() * psi;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (Eigen::Index g = 0; g < residual.rows(); ++g) {
      const double expected = static_cast<std::size_t>(g) == rows[t] ? 1.0 : 0.0;
      if (!(std::abs(residual(g, static_cast<Eigen::Index>(t)) - expected) <= kConstraintTol)) {
        throw BasisError(domain.center, targets[t],
                         "basis of coarse cell " + std::to_string(domain.center) + " violates its constraints (residual " +
                             format_g(std::abs(residual(g, static_cast<Eigen::Index>(t)) - expected)) + ")");
      }
    }
  }

  std::vector<std::size_t> order(sys.global.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sys.global[x] < sys.global[y]; });

  std::vector<Basis> out;
  out.reserve(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    Basis b;
    b.continuum = targets[t];
    b.coarse_cell = domain.center;
    b.index.reserve(order.size());
    b.value.reserve(order.size());
    for (std::size_t i : order) {
      const double v = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
      if (v == 0.0) continue;
      b.index.push_back(sys.global[i]);
      b.value.push_back(v);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Basis solve_basis(const LocalDomain& domain, const BlockOperator& op, std::size_t alpha) {
  const std::size_t targets[] = {alpha};
  auto bases = solve_patch(domain, op.global_matrix(), op.offsets(), targets);
  return std::move(bases.front());
}

std::vector<CoarseDof> coarse_dofs(const CoarseMap& maps, std::span<const ContinuumKind> kinds) {
  std::vector<CoarseDof> dofs;
  for (std::size_t alpha = 0; alpha < kinds.size(); ++alpha) {
    const ContinuumCoarseMap& map = continuum_map(maps, kinds[alpha]);
    for (std::size_t s = 0; s < map.size(); ++s) dofs.push_back({alpha, map.coarse_cells[s], map.measures[s]});
  }
  return dofs;
}

namespace {

std::vector<ContinuumKind> kinds_of(const BlockOperator& op) {
  std::vector<ContinuumKind> kinds;
  for (const auto& c : op.continua()) kinds.push_back(c.kind);
  return kinds;
}

}  // namespace

BasisSet build_basis_set(const BlockOperator& op, const CoarseMap& maps, std::size_t layers, std::size_t jobs) {
  const auto kinds = kinds_of(op);
  for (std::size_t alpha = 0; alpha < kinds.size(); ++alpha) {
    const std::size_t expected = kinds[alpha] == ContinuumKind::background ? maps.fine.cell_count()
                                                                           : maps.fracture.fine_to_coarse.size();
    if (op.size(alpha) != expected) throw std::invalid_argument("basis set: operator does not match the coarse map");
  }
  const CsrMatrix a = op.global_matrix();
  const auto offsets = op.offsets();

  BasisSet set;
  set.dofs = coarse_dofs(maps, kinds);
  set.fine_size = offsets.back();
  set.bases.resize(set.dofs.size());

  // DOF position for each (continuum, coarse cell).
  const std::size_t ncoarse = maps.coarse.cell_count();
  std::vector<std::size_t> dof_of(kinds.size() * ncoarse, ContinuumCoarseMap::npos);
  for (std::size_t k = 0; k < set.dofs.size(); ++k) {
    dof_of[set.dofs[k].continuum * ncoarse + set.dofs[k].coarse_cell] = k;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ncoarse) return;
      try {
        std::vector<std::size_t> targets;
        for (std::size_t alpha = 0; alpha < kinds.size(); ++alpha) {
          if (dof_of[alpha * ncoarse + i] != ContinuumCoarseMap::npos) targets.push_back(alpha);
        }
        if (targets.empty()) continue;
        const LocalDomain d = build_local_domain(i, layers, maps, kinds);
        auto bases = solve_patch(d, a, offsets, targets);
        for (auto& b : bases) set.bases[dof_of[b.continuum * ncoarse + i]] = std::move(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(ncoarse);
        return;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return set;
}

MultiscaleSpace::MultiscaleSpace(std::vector<CoarseDof> dofs, CsrMatrix r, CsrMatrix averaging)
    : dofs_(std::move(dofs)), r_(std::move(r)), rt_(r_.transpose()), avg_(std::move(averaging)) {
  if (r_.rows() != dofs_.size() || avg_.rows() != dofs_.size() || avg_.cols() != r_.cols()) {
    throw std::invalid_argument("multiscale space: inconsistent dimensions");
  }
}

MultiscaleSpace build_projection(BasisSet bases, const CoarseMap& maps, std::span<const ContinuumKind> kinds,
                                 std::span<const std::size_t> offsets) {
  if (bases.bases.size() != bases.dofs.size()) throw std::invalid_argument("projection: basis count mismatch");
  if (offsets.size() != kinds.size() + 1 || offsets.back() != bases.fine_size) {
    throw std::invalid_argument("projection: offsets do not match the fine size");
  }
  const std::size_t n = bases.dofs.size();
  std::vector<std::size_t> ptr(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const Basis& b = bases.bases[k];
    if (b.index.empty() || b.continuum != bases.dofs[k].continuum || b.coarse_cell != bases.dofs[k].coarse_cell) {
      throw std::invalid_argument("projection: missing basis for coarse DOF " + std::to_string(k));
    }
    ptr[k + 1] = ptr[k] + b.index.size();
  }
  std::vector<std::size_t> col;
  Vector val;
  col.reserve(ptr.back());
  val.reserve(ptr.back());
  for (auto& b : bases.bases) {
    col.insert(col.end(), b.index.begin(), b.index.end());
    val.insert(val.end(), b.value.begin(), b.value.end());
    b = Basis{};
  }
  CsrMatrix r(n, bases.fine_size, std::move(ptr), std::move(col), std::move(val));

  std::vector<Triplet> t;
  for (std::size_t k = 0; k < n; ++k) {
    const CoarseDof& dof = bases.dofs[k];
    const ContinuumCoarseMap& map = continuum_map(maps, kinds[dof.continuum]);
    const std::size_t slot = map.coarse_slot[dof.coarse_cell];
    for (std::size_t f : map.members[slot]) {
      t.push_back({k, offsets[dof.continuum] + f, map.cell_measures[f] / map.measures[slot]});
    }
  }
  CsrMatrix avg = CsrMatrix::from_triplets(n, bases.fine_size, std::move(t));
  return MultiscaleSpace(std::move(bases.dofs), std::move(r), std::move(avg));
}

MultiscaleSpace build_multiscale_space(const BlockOperator& op, const CoarseMap& maps, std::size_t layers,
                                       std::size_t jobs) {
  const auto kinds = kinds_of(op);
  return build_projection(build_basis_set(op, maps, layers, jobs), maps, kinds, op.offsets());
}

MultiscaleSpace partition_of_unity(const MultiscaleSpace& space, double min_sum) {
  const Vector w = spmv(space.projection_transpose(), Vector(space.coarse_size(), 1.0));
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= min_sum)) {
      throw std::domain_error("partition of unity: basis sum " + std::to_string(w[i]) + " at fine DOF " +
                              std::to_string(i));
    }
  }
  const CsrMatrix& r = space.projection();
  const auto ptr = r.row_ptr();
  const auto col = r.col_idx();
  Vector val(r.values().begin(), r.values().end());
  for (std::size_t p = 0; p < val.size(); ++p) val[p] /= w[col[p]];
  CsrMatrix scaled(r.rows(), r.cols(), std::vector<std::size_t>(ptr.begin(), ptr.end()),
                   std::vector<std::size_t>(col.begin(), col.end()), std::move(val));
  return MultiscaleSpace(space.dofs(), std::move(scaled), space.averaging());
}

CoarseOperator project_operators(const MultiscaleSpace& space, const BlockOperator& op,
                                 const ProjectionOptions& options, const BlockOperator* source_free) {
  if (space.fine_size() != op.total_size()) throw std::invalid_argument("project: dimension mismatch");
  if (source_free != nullptr && source_free->total_size() != op.total_size()) {
    throw std::invalid_argument("project: source-free operator dimension mismatch");
  }
  if (options.stiffness == CoarseStiffness::normalized) {
    const Vector w = spmv(space.projection_transpose(), Vector(space.coarse_size(), 1.0));
    for (double v : w) {
      if (std::abs(v - 1.0) > 1e-10) throw std::invalid_argument("project: space is not a partition of unity");
    }
  }
  CoarseOperator out;
  out.a = triple_product(space.projection(), op.global_matrix());
  if (options.stiffness == CoarseStiffness::conservative) {
    const BlockOperator& base = source_free != nullptr ? *source_free : op;
    const Vector fine_ones = spmv(space.projection_transpose(), Vector(space.coarse_size(), 1.0));
    Vector shift = spmv(space.projection(), spmv(base.global_matrix(), fine_ones));
    for (double& v : shift) v = -v;
    out.a = out.a.with_diagonal_added(shift);
  }

  const std::size_t l = op.continuum_count();
  out.offsets.assign(l + 1, 0);
  out.mass.resize(space.coarse_size());
  for (std::size_t k = 0; k < space.coarse_size(); ++k) {
    const CoarseDof& dof = space.dofs()[k];
    if (dof.continuum >= l) throw std::invalid_argument("project: DOF continuum out of range");
    out.mass[k] = op.continua()[dof.continuum].storage * dof.measure;
    out.offsets[dof.continuum + 1] = k + 1;
  }
  for (std::size_t alpha = 1; alpha <= l; ++alpha) out.offsets[alpha] = std::max(out.offsets[alpha], out.offsets[alpha - 1]);

  const Vector f = op.global_rhs();
  if (options.rhs == CoarseRhs::galerkin) {
    out.rhs = spmv(space.projection(), f);
  } else {
    const auto fo = op.offsets();
    const CsrMatrix& r = space.projection();
    const auto ptr = r.row_ptr();
    const auto col = r.col_idx();
    const auto val = r.values();
    out.rhs.assign(space.coarse_size(), 0.0);
    for (std::size_t k = 0; k < space.coarse_size(); ++k) {
      const std::size_t alpha = space.dofs()[k].continuum;
      for (std::size_t p = ptr[k]; p < ptr[k + 1]; ++p) {
        if (col[p] >= fo[alpha] && col[p] < fo[alpha + 1]) out.rhs[k] += val[p] * f[col[p]];
      }
    }
  }
  return out;
}

BlockOperator coarse_block_operator(const CoarseOperator& coarse, const std::vector<ContinuumSpec>& continua) {
  const std::size_t l = continua.size();
  if (coarse.offsets.size() != l + 1 || coarse.offsets.back() != coarse.mass.size()) {
    throw std::invalid_argument("coarse block operator: offsets do not match the continua");
  }
  const auto range = [&](std::size_t alpha) {
    std::vector<std::size_t> idx(coarse.offsets[alpha + 1] - coarse.offsets[alpha]);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = coarse.offsets[alpha] + k;
    return idx;
  };
  std::vector<std::vector<CsrMatrix>> blocks(l, std::vector<CsrMatrix>(l));
  std::vector<Vector> mass(l), rhs(l), measures(l);
  for (std::size_t alpha = 0; alpha < l; ++alpha) {
    const auto rows = range(alpha);
    for (std::size_t beta = 0; beta < l; ++beta) blocks[alpha][beta] = submatrix(coarse.a, rows, range(beta));
    for (std::size_t k : rows) {
      mass[alpha].push_back(coarse.mass[k]);
      rhs[alpha].push_back(coarse.rhs[k]);
      measures[alpha].push_back(coarse.mass[k] / continua[alpha].storage);
    }
  }
  return BlockOperator(continua, std::move(blocks), std::move(mass), std::move(rhs), std::move(measures));
}

CsrMatrix projected_mass(const MultiscaleSpace& space, const BlockOperator& op) {
  if (space.fine_size() != op.total_size()) throw std::invalid_argument("projected mass: dimension mismatch");
  const Vector m = op.global_mass();
  return triple_product(space.projection(), CsrMatrix::diagonal(m));
}

Vector reconstruct_fine(const MultiscaleSpace& space, std::span<const double> u_h) {
  if (u_h.size() != space.coarse_size()) throw std::invalid_argument("reconstruct: coarse vector size mismatch");
  return spmv(space.projection_transpose(), u_h);
}

Vector coarse_averages(const MultiscaleSpace& space, std::span<const double> fine) {
  if (fine.size() != space.fine_size()) throw std::invalid_argument("coarse averages: fine vector size mismatch");
  return spmv(space.averaging(), fine);
}

void dump_bases(const MultiscaleSpace& space, const std::filesystem::path& dir) {
  const CsrMatrix& r = space.projection();
  const auto ptr = r.row_ptr();
  const auto col = r.col_idx();
  const auto val = r.values();
  for (std::size_t k = 0; k < space.coarse_size(); ++k) {
    Vector dense(r.cols(), 0.0);
    for (std::size_t p = ptr[k]; p < ptr[k + 1]; ++p) dense[col[p]] = val[p];
    const auto& dof = space.dofs()[k];
    write_matrix_market_array(dir / ("basis_" + std::to_string(dof.continuum) + "_" +
                                     std::to_string(dof.coarse_cell) + ".mtx"),
                              dense);
  }
}

}  // namespace mcflow

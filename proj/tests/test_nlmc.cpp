#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mcflow/harness.hpp"
#include "mcflow/nlmc.hpp"

namespace mcflow {
namespace {

struct Toy {
  StructuredGrid fine, coarse;
  FractureMesh fmesh;
  CoarseMap maps;
  BlockOperator op;
  std::vector<ContinuumKind> kinds;
};

// 16x16 fine cells in 4x4 coarse cells, matrix plus two fracture lines.
Toy make_toy(double k_f = 1e3) {
  Toy t;
  t.fine = build_grid(16, 16, 1.0, 1.0);
  t.coarse = build_grid(4, 4, 1.0, 1.0);
  t.fmesh = mesh_fractures(FractureNetwork{{Segment{0.05, 0.3, 0.95, 0.7}, Segment{0.3, 0.95, 0.6, 0.05}}}, t.fine);
  t.maps = build_coarse_map(t.fine, t.coarse, t.fmesh);
  const std::vector<ContinuumSpec> c{{"matrix", ContinuumKind::background, 0.1, 1.0},
                                     {"fracture", ContinuumKind::fracture, 1.0, k_f}};
  t.op = assemble_block_operator(c, t.fine, t.fmesh, make_exchange(c, {}, t.fine.hx()));
  t.kinds = {ContinuumKind::background, ContinuumKind::fracture};
  return t;
}

// Mean of a global fine vector over coarse cell `cell` of continuum `alpha`.
double coarse_mean(const Toy& t, std::span<const double> u, std::size_t alpha, std::size_t cell) {
  const ContinuumCoarseMap& m = alpha == 0 ? t.maps.background : t.maps.fracture;
  const std::size_t slot = m.coarse_slot[cell];
  if (slot == ContinuumCoarseMap::npos) return 0.0;
  const std::size_t off = t.op.offsets()[alpha];
  double s = 0.0;
  for (std::size_t f : m.members[slot]) s += m.cell_measures[f] * u[off + f];
  return s / m.measures[slot];
}

Vector dense_basis(const Basis& b, std::size_t n) {
  Vector v(n, 0.0);
  for (std::size_t k = 0; k < b.index.size(); ++k) v[b.index[k]] = b.value[k];
  return v;
}

TEST(LocalDomain, PatchSizes) {
  const StructuredGrid fine = build_grid(70, 70, 1.0, 1.0);
  const StructuredGrid coarse = build_grid(7, 7, 1.0, 1.0);
  const CoarseMap maps = build_coarse_map(fine, coarse, FractureMesh{});
  const std::vector<ContinuumKind> kinds{ContinuumKind::background};
  EXPECT_EQ(build_local_domain(coarse.index(3, 3), 1, maps, kinds).coarse_cells.size(), 9u);
  EXPECT_EQ(build_local_domain(coarse.index(0, 0), 1, maps, kinds).coarse_cells.size(), 4u);
  EXPECT_EQ(build_local_domain(coarse.index(6, 3), 1, maps, kinds).coarse_cells.size(), 6u);
  const LocalDomain big = build_local_domain(coarse.index(3, 3), 3, maps, kinds);
  EXPECT_EQ(big.coarse_cells.size(), 49u);
  EXPECT_TRUE(big.covers_domain);
  EXPECT_EQ(big.fine[0].size(), 4900u);
  EXPECT_THROW(build_local_domain(49, 1, maps, kinds), std::invalid_argument);
  EXPECT_THROW(build_local_domain(0, 0, maps, kinds), std::invalid_argument);
}

TEST(LocalDomain, FractureEmptyCellsHaveNoConstraint) {
  const Toy t = make_toy();
  const LocalDomain d = build_local_domain(t.coarse.index(1, 1), 1, t.maps, t.kinds);
  EXPECT_EQ(d.groups[0].size(), 9u);
  std::size_t with_fracture = 0;
  for (std::size_t c : d.coarse_cells)
    if (t.maps.fracture.coarse_slot[c] != ContinuumCoarseMap::npos) ++with_fracture;
  EXPECT_EQ(d.groups[1].size(), with_fracture);
  for (const auto& g : d.groups[1]) {
    double w = 0.0;
    for (double x : g.weights) w += x;
    EXPECT_NEAR(w, 1.0, 1e-14);
  }
}

TEST(Basis, WholeDomainSingleContinuumIsConstant) {
  const StructuredGrid fine = build_grid(4, 4, 1.0, 1.0);
  const StructuredGrid coarse = build_grid(1, 1, 1.0, 1.0);
  const CoarseMap maps = build_coarse_map(fine, coarse, FractureMesh{});
  const BlockOperator op =
      assemble_block_operator({{"m", ContinuumKind::background, 1.0, 1.0}}, fine, FractureMesh{}, {});
  const std::vector<ContinuumKind> kinds{ContinuumKind::background};
  const LocalDomain d = build_local_domain(0, 1, maps, kinds);
  ASSERT_TRUE(d.covers_domain);
  const Basis b = solve_basis(d, op, 0);
  ASSERT_EQ(b.index.size(), 16u);
  for (double v : b.value) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Basis, ConstraintResidualsAndZeroOutsidePatch) {
  const Toy t = make_toy();
  const std::size_t n = t.op.total_size();
  for (std::size_t center : {t.coarse.index(0, 0), t.coarse.index(1, 2), t.coarse.index(3, 1)}) {
    const LocalDomain d = build_local_domain(center, 1, t.maps, t.kinds);
    for (std::size_t alpha = 0; alpha < 2; ++alpha) {
      const auto& m = alpha == 0 ? t.maps.background : t.maps.fracture;
      if (m.coarse_slot[center] == ContinuumCoarseMap::npos) continue;
      const Vector psi = dense_basis(solve_basis(d, t.op, alpha), n);
      for (std::size_t beta = 0; beta < 2; ++beta)
        for (std::size_t cell : d.coarse_cells) {
          const double want = (cell == center && beta == alpha) ? 1.0 : 0.0;
          EXPECT_NEAR(coarse_mean(t, psi, beta, cell), want, 1e-8);
        }
      // Nothing outside the patch.
      for (std::size_t beta = 0; beta < 2; ++beta) {
        const auto& mb = beta == 0 ? t.maps.background : t.maps.fracture;
        const std::size_t off = t.op.offsets()[beta];
        for (std::size_t f = 0; f < t.op.size(beta); ++f) {
          const std::size_t cell = mb.coarse_cells[mb.fine_to_coarse[f]];
          if (!std::binary_search(d.coarse_cells.begin(), d.coarse_cells.end(), cell)) {
            EXPECT_EQ(psi[off + f], 0.0);
          }
        }
      }
    }
  }
}

TEST(Basis, MinimizesEnergyAmongFeasibleCandidates) {
  const Toy t = make_toy();
  const CsrMatrix a = t.op.global_matrix();
  const std::size_t n = t.op.total_size();
  const std::size_t center = t.coarse.index(1, 1);
  const LocalDomain d = build_local_domain(center, 1, t.maps, t.kinds);
  const Vector psi = dense_basis(solve_basis(d, t.op, 0), n);
  const double e0 = dot(psi, spmv(a, psi));
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    // Random patch field with every constraint mean removed stays feasible.
    Vector delta(n, 0.0);
    for (std::size_t beta = 0; beta < 2; ++beta) {
      const std::size_t off = t.op.offsets()[beta];
      for (const ConstraintGroup& g : d.groups[beta]) {
        Vector v(g.local.size());
        double mean = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
          v[k] = n01(rng);
          mean += g.weights[k] * v[k];
        }
        for (std::size_t k = 0; k < v.size(); ++k) delta[off + d.fine[beta][g.local[k]]] = 0.1 * (v[k] - mean);
      }
    }
    Vector cand = psi;
    for (std::size_t i = 0; i < n; ++i) cand[i] += delta[i];
    EXPECT_NEAR(coarse_mean(t, cand, 0, center), 1.0, 1e-8);
    EXPECT_GE(dot(cand, spmv(a, cand)), e0);
  }
}

TEST(Projection, RowsMatchDofsAndReconstructBasis) {
  const Toy t = make_toy();
  const MultiscaleSpace space = build_multiscale_space(t.op, t.maps, 1, 2);
  EXPECT_EQ(space.coarse_size(), coarse_dofs(t.maps, t.kinds).size());
  EXPECT_EQ(space.coarse_size(), 16u + t.maps.fracture.size());
  EXPECT_EQ(space.fine_size(), t.op.total_size());

  const Vector zero = reconstruct_fine(space, Vector(space.coarse_size(), 0.0));
  for (double v : zero) EXPECT_EQ(v, 0.0);

  const std::size_t i = 5;
  Vector e(space.coarse_size(), 0.0);
  e[i] = 1.0;
  const Vector psi = reconstruct_fine(space, e);
  const LocalDomain d = build_local_domain(space.dofs()[i].coarse_cell, 1, t.maps, t.kinds);
  const Vector direct = dense_basis(solve_basis(d, t.op, space.dofs()[i].continuum), t.op.total_size());
  for (std::size_t k = 0; k < psi.size(); ++k) EXPECT_NEAR(psi[k], direct[k], 1e-12);

  const Vector ones = reconstruct_fine(space, Vector(space.coarse_size(), 1.0));
  for (double m : coarse_averages(space, ones)) EXPECT_NEAR(m, 1.0, 1e-6);
}

TEST(Projection, IdentitySpaceReproducesFineOperator) {
  const StructuredGrid g = build_grid(3, 2, 1.5, 1.0);
  const CoarseMap maps = build_coarse_map(g, g, FractureMesh{});
  const BlockOperator op = assemble_block_operator({{"m", ContinuumKind::background, 0.5, 2.0}}, g, {}, {});
  const MultiscaleSpace space = build_multiscale_space(op, maps, 1);
  const CsrMatrix& r = space.projection();
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(r.at(i, j), i == j ? 1.0 : 0.0, 1e-12);
  for (CoarseStiffness s : {CoarseStiffness::galerkin, CoarseStiffness::conservative}) {
    ProjectionOptions o;
    o.stiffness = s;
    const CoarseOperator c = project_operators(space, op, o);
    EXPECT_LT(add(c.a, op.block(0, 0), 1.0, -1.0).max_abs(), 1e-12);
  }
}

TEST(Projection, DirectCoarseMass) {
  const StructuredGrid fine = build_grid(80, 40, 2.0, 1.0);
  const StructuredGrid coarse = build_grid(40, 20, 2.0, 1.0);
  const CoarseMap maps = build_coarse_map(fine, coarse, FractureMesh{});
  const BlockOperator op = assemble_block_operator({{"m", ContinuumKind::background, 0.1, 1.0}}, fine, {}, {});
  const MultiscaleSpace space = build_multiscale_space(op, maps, 1, 2);
  const CoarseOperator c = project_operators(space, op);
  for (double m : c.mass) EXPECT_NEAR(m, 0.1 * 0.0025, 1e-8 * 2.5e-4);
  const CsrMatrix rmr = projected_mass(space, op);
  Vector lumped = spmv(rmr, Vector(rmr.cols(), 1.0));
  for (std::size_t i = 0; i < lumped.size(); ++i) EXPECT_NEAR(lumped[i], c.mass[i], 0.05 * c.mass[i]);
}

TEST(Projection, CoarseOperatorSymmetricPsdAndConsistent) {
  const Toy t = make_toy();
  const MultiscaleSpace space = build_multiscale_space(t.op, t.maps, 1, 2);
  ProjectionOptions galerkin;
  galerkin.stiffness = CoarseStiffness::galerkin;
  const CoarseOperator g = project_operators(space, t.op, galerkin);
  EXPECT_EQ(max_asymmetry(g.a), 0.0);
  double dmax = 0.0;
  for (double v : g.a.diagonal_values()) dmax = std::max(dmax, v);
  EXPECT_GE(min_eigenvalue(g.a, 1e-12), -1e-9 * dmax);

  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  Vector uh(space.coarse_size());
  for (auto& v : uh) v = n01(rng);
  const Vector lhs = spmv(g.a, uh);
  const Vector rhs = spmv(space.projection(), spmv(t.op.global_matrix(), reconstruct_fine(space, uh)));
  const double scale = norm2(rhs);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12 * scale);

  ProjectionOptions conservative;
  conservative.stiffness = CoarseStiffness::conservative;
  const CoarseOperator c = project_operators(space, t.op, conservative);
  EXPECT_EQ(max_asymmetry(c.a), 0.0);
  const double cmax = c.a.max_abs();
  for (double v : spmv(c.a, Vector(space.coarse_size(), 1.0))) EXPECT_LE(std::abs(v), 1e-9 * cmax);
}

TEST(Projection, PartitionOfUnityGivesConservativePsdOperator) {
  const Toy t = make_toy();
  const MultiscaleSpace raw = build_multiscale_space(t.op, t.maps, 1, 2);
  const MultiscaleSpace space = partition_of_unity(raw);
  for (double w : spmv(space.projection_transpose(), Vector(space.coarse_size(), 1.0))) EXPECT_NEAR(w, 1.0, 1e-13);

  ProjectionOptions o;
  o.stiffness = CoarseStiffness::normalized;
  const CoarseOperator c = project_operators(space, t.op, o);
  EXPECT_EQ(max_asymmetry(c.a), 0.0);
  const double cmax = c.a.max_abs();
  for (double v : spmv(c.a, Vector(space.coarse_size(), 1.0))) EXPECT_LE(std::abs(v), 1e-9 * cmax);
  EXPECT_GE(min_eigenvalue(c.a, 1e-12), -1e-9 * cmax);

  // Still a Galerkin product, now of the rescaled space.
  std::mt19937 rng(9);
  std::normal_distribution<double> n01;
  Vector uh(space.coarse_size());
  for (auto& v : uh) v = n01(rng);
  const Vector lhs = spmv(c.a, uh);
  const Vector rhs = spmv(space.projection(), spmv(t.op.global_matrix(), reconstruct_fine(space, uh)));
  const double scale = norm2(rhs);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12 * scale);

  EXPECT_THROW(project_operators(raw, t.op, o), std::invalid_argument);
}

TEST(Projection, PartitionOfUnityRejectsUncoveredCells) {
  const Toy t = make_toy();
  const MultiscaleSpace raw = build_multiscale_space(t.op, t.maps, 1, 2);
  EXPECT_THROW(partition_of_unity(raw, 2.0), std::domain_error);
}

TEST(Projection, CanonicalCoarseDofCounts) {
  const StructuredGrid fine = build_grid(400, 200, 2.0, 1.0);
  const StructuredGrid coarse = build_grid(40, 20, 2.0, 1.0);
  const FractureMesh m =
      mesh_fractures(read_fracture_network(std::filesystem::path(MCFLOW_SOURCE_DIR) / "geometry" / "fracture_network.txt"), fine);
  const CoarseMap maps = build_coarse_map(fine, coarse, m);
  const std::vector<ContinuumKind> two{ContinuumKind::background, ContinuumKind::fracture};
  const std::vector<ContinuumKind> three{ContinuumKind::background, ContinuumKind::background, ContinuumKind::fracture};
  EXPECT_NEAR(static_cast<double>(coarse_dofs(maps, two).size()), 956.0, 0.01 * 956.0);
  EXPECT_NEAR(static_cast<double>(coarse_dofs(maps, three).size()), 1756.0, 0.01 * 1756.0);
}

}  // namespace
}  // namespace mcflow

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mcflow/assembly.hpp"
#include "mcflow/geometry.hpp"
#include "mcflow/linalg.hpp"

namespace mcflow {

/// Coarse-cell mean over one continuum: sum_k weights[k] * psi[local[k]].
struct ConstraintGroup {
  std::size_t coarse_cell = 0;
  std::size_t slot = 0;  ///< position in the continuum's ContinuumCoarseMap
  std::vector<std::size_t> local;
  Vector weights;  ///< |cell| / |K^alpha|
};

/// Oversampled region K_i^+ around one coarse cell.
struct LocalDomain {
  std::size_t center = 0;
  std::size_t layers = 0;
  std::size_t cx0 = 0, cx1 = 0, cy0 = 0, cy1 = 0;  ///< coarse index ranges [c0, c1)
  std::vector<std::size_t> coarse_cells;           ///< increasing global ids
  /// Per continuum: fine indices (continuum numbering) inside the patch.
  std::vector<std::vector<std::size_t>> fine;
  /// Per continuum: one constraint per coarse cell with content.
  std::vector<std::vector<ConstraintGroup>> groups;
  /// True when the patch is the whole domain (no Dirichlet boundary).
  bool covers_domain = false;

  std::size_t local_size() const;
};

/// Coarse map of continuum `alpha` according to its kind.
const ContinuumCoarseMap& continuum_map(const CoarseMap& maps, ContinuumKind kind);

LocalDomain build_local_domain(std::size_t center, std::size_t layers, const CoarseMap& maps,
                               std::span<const ContinuumKind> kinds);

/// One multiscale basis function, stored sparsely in global fine numbering.
struct Basis {
  std::size_t continuum = 0;
  std::size_t coarse_cell = 0;
  std::vector<std::size_t> index;  ///< increasing global fine indices
  Vector value;
};

/// Bases for every target continuum of `domain.center` sharing one local
/// factorization. `a` is the global fine matrix, `offsets` the continuum offsets.
std::vector<Basis> solve_patch(const LocalDomain& domain, const CsrMatrix& a,
                               std::span<const std::size_t> offsets, std::span<const std::size_t> targets);

/// Single basis psi^{i,alpha}; throws BasisError naming (i, alpha) on failure.
Basis solve_basis(const LocalDomain& domain, const BlockOperator& op, std::size_t alpha);

/// (continuum, coarse cell) pair owning one coarse unknown.
struct CoarseDof {
  std::size_t continuum = 0;
  std::size_t coarse_cell = 0;
  double measure = 0.0;  ///< |K_i^alpha|
};

/// Coarse DOFs ordered by continuum, then coarse cell.
std::vector<CoarseDof> coarse_dofs(const CoarseMap& maps, std::span<const ContinuumKind> kinds);

struct BasisSet {
  std::vector<CoarseDof> dofs;
  std::vector<Basis> bases;  ///< parallel to dofs
  std::size_t fine_size = 0;
};

/// Solves all local problems; `jobs` worker threads (0 or 1 runs inline).
BasisSet build_basis_set(const BlockOperator& op, const CoarseMap& maps, std::size_t layers,
                         std::size_t jobs = 1);

class MultiscaleSpace {
 public:
  MultiscaleSpace() = default;
  MultiscaleSpace(std::vector<CoarseDof> dofs, CsrMatrix r, CsrMatrix averaging);

  const std::vector<CoarseDof>& dofs() const noexcept { return dofs_; }
  std::size_t coarse_size() const noexcept { return dofs_.size(); }
  std::size_t fine_size() const noexcept { return r_.cols(); }
  /// Rows are basis functions.
  const CsrMatrix& projection() const noexcept { return r_; }
  const CsrMatrix& projection_transpose() const noexcept { return rt_; }
  /// Rows give coarse-cell means of a fine vector.
  const CsrMatrix& averaging() const noexcept { return avg_; }

 private:
  std::vector<CoarseDof> dofs_;
  CsrMatrix r_;
  CsrMatrix rt_;
  CsrMatrix avg_;
};

/// Assembles R and the coarse averaging operator. Consumes the basis storage.
MultiscaleSpace build_projection(BasisSet bases, const CoarseMap& maps, std::span<const ContinuumKind> kinds,
                                 std::span<const std::size_t> offsets);

MultiscaleSpace build_multiscale_space(const BlockOperator& op, const CoarseMap& maps, std::size_t layers,
                                       std::size_t jobs = 1);

/// Divides every column of R by its sum so that R^T 1 = 1 exactly.
/// Throws std::domain_error when a column sum is below `min_sum`.
MultiscaleSpace partition_of_unity(const MultiscaleSpace& space, double min_sum = 0.1);

enum class CoarseRhs {
  /// F^H = R F^h, consistent with A^H = R A^h R^T.
  galerkin,
  /// F^H_alpha = R_{alpha alpha} F^h_alpha.
  block_diagonal,
};

struct CoarseOperator {
  Vector mass;  ///< diagonal of M^H
  CsrMatrix a;
  Vector rhs;
  /// Coarse DOF offsets per continuum (size L + 1).
  std::vector<std::size_t> offsets;
};

enum class CoarseStiffness {
  /// A^H = R A^h R^T.
  galerkin,
  /// Galerkin couplings with the diagonal reset so that constants stay in the
  /// kernel. Localized bases only sum to one up to their decay error, and the
  /// fracture permeability turns that error into a large spurious sink.
  /// Positive Galerkin couplings can make the result indefinite.
  conservative,
  /// Galerkin product on a space rescaled by partition_of_unity. Symmetric
  /// positive semidefinite and constants stay in the kernel.
  normalized,
};

struct ProjectionOptions {
  CoarseRhs rhs = CoarseRhs::galerkin;
  CoarseStiffness stiffness = CoarseStiffness::galerkin;
};


/// `source_free` is the operator without wells whose row sums define the
/// conservative correction; it defaults to `op`.
CoarseOperator project_operators(const MultiscaleSpace& space, const BlockOperator& op,
                                 const ProjectionOptions& options = {}, const BlockOperator* source_free = nullptr);

/// Coarse system in block form, so the time schemes apply unchanged.
BlockOperator coarse_block_operator(const CoarseOperator& coarse, const std::vector<ContinuumSpec>& continua);

/// Diagnostic R M^h R^T, kept only for comparison with the direct coarse mass.
CsrMatrix projected_mass(const MultiscaleSpace& space, const BlockOperator& op);

/// u_ms = R^T u_H.
Vector reconstruct_fine(const MultiscaleSpace& space, std::span<const double> u_h);

/// Coarse-cell means of a fine vector, one per coarse DOF.
Vector coarse_averages(const MultiscaleSpace& space, std::span<const double> fine);

/// Writes every basis as `basis_<continuum>_<coarse cell>.mtx` (array format).
void dump_bases(const MultiscaleSpace& space, const std::filesystem::path& dir);

}  // namespace mcflow

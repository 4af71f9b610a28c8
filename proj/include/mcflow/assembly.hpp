#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mcflow/geometry.hpp"
#include "mcflow/linalg.hpp"

namespace mcflow {

enum class ContinuumKind { background, fracture };

/// One overlapping flow field: a 2D background continuum (matrix, natural
/// fractures) or the 1D embedded fracture continuum.
struct ContinuumSpec {
  std::string name;
  ContinuumKind kind = ContinuumKind::background;
  double storage = 1.0;       ///< c
  double permeability = 1.0;  ///< k
};

/// Throws std::invalid_argument unless c > 0 and k > 0.
void validate(const ContinuumSpec& spec);

enum class ExchangeRule {
  /// Background cell <-> hosted fracture cell, T = coefficient * length / distance.
  embedded_fracture,
  /// Two background continua sharing every cell, T = coefficient * area / distance.
  overlap,
};

struct ExchangePair {
  std::size_t a = 0;
  std::size_t b = 0;
  ExchangeRule rule = ExchangeRule::embedded_fracture;
  double coefficient = 1.0;
  double distance = 1.0;
};

struct ExchangeSpec {
  std::vector<ExchangePair> pairs;
};

/// Exchange between cell `i` of one continuum and cell `j` of another.
struct ExchangeLink {
  std::size_t i = 0;
  std::size_t j = 0;
  double transmissibility = 0.0;
};

/// Contributions of one continuum pair to Q: row sums on each side and the
/// off-diagonal coupling block (entries -sigma_ij).
struct ExchangeBlocks {
  Vector diag_a;
  Vector diag_b;
  CsrMatrix off;
};

/// Block form of M du/dt + A u = F over L continua.
class BlockOperator {
 public:
  BlockOperator() = default;
  /// Takes blocks as given; `a` is L x L, `mass` and `rhs` hold one vector per
  /// continuum. `measures` may be empty (defaults to the mass diagonal).
  BlockOperator(std::vector<ContinuumSpec> continua, std::vector<std::vector<CsrMatrix>> a,
                std::vector<Vector> mass, std::vector<Vector> rhs, std::vector<Vector> measures = {});

  std::size_t continuum_count() const noexcept { return continua_.size(); }
  std::size_t size(std::size_t alpha) const { return mass_.at(alpha).size(); }
  std::size_t total_size() const;
  /// Offsets of each continuum in the global ordering; size L + 1.
  std::vector<std::size_t> offsets() const;

  const std::vector<ContinuumSpec>& continua() const noexcept { return continua_; }
  const CsrMatrix& block(std::size_t alpha, std::size_t beta) const { return a_.at(alpha).at(beta); }
  const std::vector<std::vector<CsrMatrix>>& blocks() const noexcept { return a_; }
  const Vector& mass(std::size_t alpha) const { return mass_.at(alpha); }
  const Vector& rhs(std::size_t alpha) const { return rhs_.at(alpha); }
  const Vector& measures(std::size_t alpha) const { return measures_.at(alpha); }

  CsrMatrix global_matrix() const;
  Vector global_mass() const;
  Vector global_rhs() const;

  /// Splits a global vector into per-continuum pieces and back.
  std::vector<Vector> split(std::span<const double> global) const;
  Vector join(const std::vector<Vector>& parts) const;

  /// Copy with a new right-hand side / modified blocks; used by well treatment.
  BlockOperator with_rhs(std::vector<Vector> rhs) const;
  BlockOperator with_blocks(std::vector<std::vector<CsrMatrix>> a) const;

 private:
  std::vector<ContinuumSpec> continua_;
  std::vector<std::vector<CsrMatrix>> a_;
  std::vector<Vector> mass_;
  std::vector<Vector> rhs_;
  std::vector<Vector> measures_;
};

/// Two-point flux matrix on the background grid, harmonic face averages of k.
CsrMatrix assemble_diffusion_2d(const StructuredGrid& grid, std::span<const double> k);
CsrMatrix assemble_diffusion_2d(const StructuredGrid& grid, double k);
/// Two-point flux along each fracture's cell chain; segments do not couple.
CsrMatrix assemble_diffusion_fracture(const FractureMesh& fmesh, double k_f);
/// diag(c_i * |cell_i|); c may hold one value or one per cell.
CsrMatrix assemble_mass(std::span<const double> measures, std::span<const double> c);

std::vector<ExchangeLink> embedded_fracture_links(const FractureMesh& fmesh, double coefficient,
                                                  double distance);
std::vector<ExchangeLink> overlap_links(const StructuredGrid& grid, double coefficient, double distance);
ExchangeBlocks assemble_exchange(std::size_t size_a, std::size_t size_b,
                                 std::span<const ExchangeLink> links);

/// A_aa = D_a + sum_b Q_ab (row sums), A_ab = -Q_ab. Continuum storage and
/// measures come from `grid` (background) or `fmesh` (fracture).
BlockOperator assemble_block_operator(const std::vector<ContinuumSpec>& continua,
                                      const StructuredGrid& grid, const FractureMesh& fmesh,
                                      const ExchangeSpec& exchange);

/// Checks A_ab = A_ba^T to `tol * max|A|` and weak diagonal dominance of every
/// row; throws AssemblyError otherwise.
void verify_block_operator(const BlockOperator& op, double tol = 1e-12);

struct WellSpec {
  std::size_t continuum = 0;
  std::vector<std::size_t> cells;
  double pressure = 0.0;  ///< u_w
  double index = 0.0;     ///< q_w
};

/// Implicit well q_w (u_w - u): adds q_w |cell| to the diagonal of the well rows
/// and q_w u_w |cell| to the right-hand side.
BlockOperator apply_well(const BlockOperator& op, const WellSpec& well);

}  // namespace mcflow

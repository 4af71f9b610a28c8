#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcflow/assembly.hpp"
#include "mcflow/linalg.hpp"

namespace mcflow {

enum class SchemeFamily { im1, imex1, im2, imex2 };
enum class SplitMode { d, l, u };

SplitMode parse_split(std::string_view name);
std::string to_string(SplitMode mode);

/// Two-level theta schemes and the three-level (mu, sigma) family, coupled
/// (Im) or implicit-explicit (ImEx) over a D/L/U split.
struct SchemeSpec {
  SchemeFamily family = SchemeFamily::im1;
  double theta = 1.0;
  double mu = 1.5;
  double sigma = 0.0;
  SplitMode split = SplitMode::d;
  std::string name;

  static SchemeSpec im1(double theta = 1.0);
  static SchemeSpec imex1(double theta = 1.0, SplitMode split = SplitMode::d);
  static SchemeSpec im2(double mu = 1.5, double sigma = 0.0);
  static SchemeSpec imex2(double mu = 1.5, double sigma = 0.0, SplitMode split = SplitMode::d);
  /// Im1, ImEx1, Im2, ImEx2 with defaults, or CN, BDF2, LF, CNAB, SBDF, CNLF.
  /// `cnlf_sigma` only affects CNLF.
  static SchemeSpec preset(std::string_view name, SplitMode split = SplitMode::d, double cnlf_sigma = 0.5);

  bool is_imex() const noexcept { return family == SchemeFamily::imex1 || family == SchemeFamily::imex2; }
  bool is_three_level() const noexcept { return family == SchemeFamily::im2 || family == SchemeFamily::imex2; }
  /// Scalar parameter conditions: theta >= 1/2, or mu >= 1/2 and sigma >= (1 - mu)/2.
  bool parameters_stable() const noexcept;
  /// Preset name when set, otherwise a family label with parameters.
  std::string label() const;
};

using BlockGrid = std::vector<std::vector<CsrMatrix>>;

/// A = A1 + A2 with A1 the implicit part.
struct SplitOperator {
  SplitMode mode = SplitMode::d;
  BlockGrid a1;
  BlockGrid a2;
  /// Continuum solve order for the implicit sweep.
  std::vector<std::size_t> order;
};

SplitOperator split_operator(const BlockOperator& op, SplitMode mode);

struct SimulationState {
  Vector u;
  Vector u_prev;
  bool has_prev = false;
  std::size_t step = 0;
  double time = 0.0;

  static SimulationState initial(Vector u0);
};

struct StepReport {
  std::size_t step = 0;
  /// CG iterations per implicit solve; one entry per continuum for ImEx,
  /// a single entry for the coupled solve.
  std::vector<std::size_t> iterations;
  double seconds = 0.0;
  /// Energy functional after the step when monitoring is on.
  std::optional<double> energy;
};

class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, SolveStats stats) : std::runtime_error(what), stats_(stats) {}
  const SolveStats& stats() const noexcept { return stats_; }

 private:
  SolveStats stats_;
};

/// Scheme bound to an operator and step size. Implicit matrices and their
/// preconditioners are built once and reused every step.
class Stepper {
 public:
  Stepper(const BlockOperator& op, SchemeSpec scheme, double tau, CgOptions cg = {});
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  /// Advances one step. Three-level schemes need `state.has_prev`.
  StepReport step(SimulationState& state) const;
  /// Backward Euler over tau in `substeps` equal pieces; u^{n-1} becomes the old u^n.
  StepReport bootstrap(SimulationState& state, std::size_t substeps = 1) const;

  const SchemeSpec& scheme() const noexcept;
  double tau() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StepReport step_two_level(SimulationState& state, const BlockOperator& op, const SchemeSpec& scheme, double tau,
                          const CgOptions& cg = {});
StepReport step_three_level(SimulationState& state, const BlockOperator& op, const SchemeSpec& scheme, double tau,
                            const CgOptions& cg = {});
StepReport bootstrap_first_step(SimulationState& state, const BlockOperator& op, double tau,
                                std::size_t substeps = 1, const CgOptions& cg = {});

enum class StabilityVerdict { holds, violated, not_applicable };
std::string to_string(StabilityVerdict verdict);

struct StabilityReport {
  StabilityVerdict verdict = StabilityVerdict::not_applicable;
  /// Smallest eigenvalue of the symmetric part of S (ImEx only).
  std::optional<double> lambda_min;
  /// L/U splits are checked through the symmetric part; the theorems cover D.
  bool heuristic = false;
};

/// Coupled schemes: scalar conditions only. ImEx schemes: lambda_min of S
/// against -tol * max|S|; `split` must be given.
StabilityReport check_stability(const SchemeSpec& scheme, const SplitOperator* split = nullptr, double tol = 1e-10);

/// ||u||_A^2.
double energy_two_level(const CsrMatrix& a, std::span<const double> u);
/// (1/4)||u1 + u0||_A^2 + ||u1 - u0||_S^2.
double energy_three_level(const CsrMatrix& a, const CsrMatrix& s, std::span<const double> u1,
                          std::span<const double> u0);
/// S for the three-level functional: (mu - 1/2) M / tau + (sigma + (mu - 1)/2) A1 - (mu/2) A2,
/// with A1 = A, A2 = 0 for coupled schemes.
CsrMatrix energy_matrix(const BlockOperator& op, const SchemeSpec& scheme, double tau);

struct TransientOptions {
  /// Step indices whose states are kept (and dumped when `snapshot_dir` is set).
  std::vector<std::size_t> snapshots;
  std::optional<std::filesystem::path> snapshot_dir;
  bool monitor_energy = false;
  std::size_t startup_substeps = 1;
  CgOptions cg;
};

struct Snapshot {
  std::size_t step = 0;
  double time = 0.0;
  Vector u;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<StepReport> reports;
  SimulationState final_state;
  /// Set when a step failed; the trajectory holds everything before it.
  std::optional<std::string> failure;
};

Trajectory run_transient(const BlockOperator& op, const SchemeSpec& scheme, double tau, std::size_t nt,
                         Vector u0, const TransientOptions& options = {});

/// Writes one `u_<continuum>_<step>.mtx` per continuum.
void dump_snapshot(const BlockOperator& op, const std::filesystem::path& dir, std::size_t step,
                   std::span<const double> u);

}  // namespace mcflow

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcflow/assembly.hpp"
#include "mcflow/geometry.hpp"
#include "mcflow/nlmc.hpp"
#include "mcflow/timeloop.hpp"

namespace mcflow {

struct GeometryConfig {
  std::filesystem::path file;
  double lx = 2.0;
  double ly = 1.0;
  std::size_t fine_nx = 400, fine_ny = 200;
  std::size_t coarse_nx = 40, coarse_ny = 20;
};

struct ExchangeConfig {
  /// Background <-> fracture: T = sigma * length / (fracture_distance * h).
  double fracture_distance = 0.25;
  /// Unset: the background continuum's own permeability.
  std::optional<double> fracture_sigma;
  /// Background <-> background: T = sigma * area / (overlap_distance * h).
  double overlap_distance = 1.0;
  /// Unset: permeability of the less permeable continuum of the pair.
  std::optional<double> overlap_sigma;
};

struct WellConfig {
  bool enabled = true;
  /// Target continuum name; empty selects the fracture continuum.
  std::string continuum;
  double pressure = 1.2;
  double index = 1e5;
  /// x0, x1, y0, y1.
  std::array<double, 4> box{1.85, 1.9, 0.35, 0.4};
};

struct TimeConfig {
  double t_max = 0.005;
  std::vector<std::size_t> nt{4, 8, 16, 32, 64, 128};
  double u0 = 1.0;
  std::size_t reference_nt = 1024;
  std::size_t startup_substeps = 1;
};

enum class SpaceKind { fine, multiscale };

struct SchemeConfig {
  std::vector<std::string> names{"Im1"};
  std::vector<SplitMode> splits{SplitMode::d};
  std::vector<SpaceKind> spaces{SpaceKind::fine};
  double theta = 1.0;
  double mu = 1.5;
  double sigma = 0.0;
  double cnlf_sigma = 0.5;
};

struct SolverConfig {
  CgOptions cg{};
  double reference_rtol = 1e-10;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::size_t timing_repeats = 1;
  bool monitor_energy = false;
};

struct RunConfig {
  GeometryConfig geometry;
  /// Sorted by increasing permeability.
  std::vector<ContinuumSpec> continua;
  ExchangeConfig exchange;
  WellConfig well;
  TimeConfig time;
  SchemeConfig schemes;
  std::size_t layers = 3;
  CoarseStiffness nlmc_stiffness = CoarseStiffness::normalized;
  SolverConfig solver;
  OutputConfig output;
};

/// Relative paths in the file resolve against `base_dir`.
RunConfig parse_config_string(std::string_view text, const std::filesystem::path& base_dir,
                              std::string_view source_name = "config");
RunConfig parse_config(const std::filesystem::path& path);

/// Scheme for a configured name; generic family names take theta/mu/sigma from the config.
SchemeSpec make_scheme(const SchemeConfig& config, std::string_view name, SplitMode split);

struct Problem {
  StructuredGrid fine;
  StructuredGrid coarse;
  FractureMesh fractures;
  CoarseMap maps;
  /// Operator without the well; its A annihilates constants.
  BlockOperator base;
  /// Operator including the implicit well.
  BlockOperator op;
  std::optional<WellSpec> well;
};

/// Fracture cells whose host background cell centre lies in the box.
std::vector<std::size_t> well_cells(const FractureMesh& fmesh, const StructuredGrid& grid,
                                    const std::array<double, 4>& box);
ExchangeSpec make_exchange(const std::vector<ContinuumSpec>& continua, const ExchangeConfig& config, double h);
Problem build_problem(const RunConfig& config);

/// Multiscale space on the well-free operator, rescaled when the configured
/// stiffness is `normalized`.
MultiscaleSpace build_coarse_space(const RunConfig& config, const Problem& problem, std::size_t layers,
                                   std::size_t jobs = 1);
/// Coarse system for `space` with the configured stiffness.
BlockOperator build_coarse_operator(const RunConfig& config, const Problem& problem, const MultiscaleSpace& space);

/// Steps n/4, n/2 and n, keeping only those that divide evenly.
std::vector<std::size_t> snapshot_steps(std::size_t nt);

struct Reference {
  std::size_t nt = 0;
  std::vector<Snapshot> snapshots;
  bool from_cache = false;
  double seconds = 0.0;

  /// Reference state at time step * T / nt_candidate; throws when no
  /// reference snapshot coincides.
  const Vector& at(std::size_t step, std::size_t nt_candidate) const;
};

/// Hex digest of everything the reference depends on.
std::string reference_key(const RunConfig& config, std::size_t nt_ref);
/// Fine Im1 (theta = 1) run at `nt_ref` steps, cached as `ref_<key>.bin` in `cache_dir`.
Reference compute_reference(const RunConfig& config, const Problem& problem, std::size_t nt_ref,
                            const std::filesystem::path& cache_dir);
void write_reference(const std::filesystem::path& path, const Reference& ref);
Reference read_reference(const std::filesystem::path& path);

struct ErrorValues {
  std::optional<double> e_h1;
  std::optional<double> e_h2;
  std::optional<double> e_ms1;
  std::optional<double> e_H1;
};

/// Relative errors in percent. Without `space` the candidate is a fine vector
/// (e_h1, e_h2); with it, a coarse vector (e_ms1 via R^T u_H, e_H1 against the
/// reference's coarse-cell means). `a` is the operator without the well.
/// A zero reference norm throws std::domain_error.
ErrorValues compute_errors(std::span<const double> u_ref, std::span<const double> candidate, const CsrMatrix& a,
                           const MultiscaleSpace* space = nullptr);

struct ReportRow {
  std::string scheme;
  std::string split;
  std::size_t nt = 0;
  std::size_t snapshot = 0;
  std::optional<double> e_h1, e_h2, e_ms1, e_H1;
  std::optional<double> time_total_s;
  std::vector<double> avg_iters;

  bool operator==(const ReportRow&) const = default;
};

struct RateRow {
  std::string scheme;
  std::string split;
  /// Snapshot time as a fraction of T.
  double t_fraction = 1.0;
  std::string metric;
  std::size_t nt = 0;
  std::size_t nt_next = 0;
  double rate = 0.0;
};

/// log2(e(N) / e(2N)) for every metric along each (scheme, split, time) series.
std::vector<RateRow> compute_rates(const std::vector<ReportRow>& rows);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> reference_nt;
  std::size_t jobs = 1;
  bool dump_snapshots = false;
  bool check_stability = false;
  std::optional<std::filesystem::path> cache_dir;
};

struct CaseReport {
  std::vector<ReportRow> rows;
  std::vector<RateRow> rates;
  std::vector<std::string> failures;
  std::vector<std::string> stability;
  std::filesystem::path out_dir;
};

/// Full sweep: reference, every (space, scheme, split, N_t) run, errors,
/// rates, and the CSV files in the output directory.
CaseReport run_case(const RunConfig& config, const RunOptions& options = {});

void write_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> read_csv(const std::filesystem::path& path);
void write_rates_csv(const std::vector<RateRow>& rates, const std::filesystem::path& path);

}  // namespace mcflow

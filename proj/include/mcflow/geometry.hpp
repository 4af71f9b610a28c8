#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <utility>
#include <vector>

namespace mcflow {

struct Segment {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  double length() const;
};

/// Straight fracture lines in the 2D domain.
struct FractureNetwork {
  std::vector<Segment> segments;
};

/// Reads `x1 y1 x2 y2` per line; `#` starts a comment line.
FractureNetwork parse_fracture_network(std::istream& in);
FractureNetwork read_fracture_network(const std::filesystem::path& path);
/// Throws std::invalid_argument when a segment has zero length or leaves the box.
void validate_network(const FractureNetwork& net, double lx, double ly);

/// Uniform nx x ny grid of rectangles over [0, lx] x [0, ly]; cells are
/// numbered row-major (x fastest).
class StructuredGrid {
 public:
  StructuredGrid() = default;
  StructuredGrid(std::size_t nx, std::size_t ny, double lx, double ly);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return lx_ / static_cast<double>(nx_); }
  double hy() const noexcept { return ly_ / static_cast<double>(ny_); }
  double cell_area() const noexcept { return hx() * hy(); }
  std::size_t cell_count() const noexcept { return nx_ * ny_; }

  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return iy * nx_ + ix; }
  std::size_t ix(std::size_t cell) const noexcept { return cell % nx_; }
  std::size_t iy(std::size_t cell) const noexcept { return cell / nx_; }
  /// Cell containing (x, y); points on the outer boundary map to the adjacent cell.
  std::size_t locate(double x, double y) const;

  bool operator==(const StructuredGrid&) const = default;

 private:
  std::size_t nx_ = 0, ny_ = 0;
  double lx_ = 0.0, ly_ = 0.0;
};

StructuredGrid build_grid(std::size_t nx, std::size_t ny, double lx, double ly);

struct FractureCell {
  std::size_t segment = 0;
  /// Arc-length interval [s0, s1] measured from the segment's first endpoint.
  double s0 = 0.0;
  double s1 = 0.0;
  double length = 0.0;
  /// Background cell hosting the fracture cell.
  std::size_t host = 0;
  double mid_x = 0.0;
  double mid_y = 0.0;
};

/// Two fracture cells adjacent along one segment.
struct FractureLink {
  std::size_t a = 0;
  std::size_t b = 0;
  /// Distance between the two cell midpoints.
  double distance = 0.0;
};

/// Fracture cells ordered by (segment, arc position).
struct FractureMesh {
  std::vector<FractureCell> cells;
  std::vector<FractureLink> links;
  std::size_t size() const noexcept { return cells.size(); }
};

/// Clips every segment against the grid lines; one fracture cell per
/// (segment, background cell) crossing. Slivers shorter than 1e-12 h are
/// merged into their neighbor.
FractureMesh mesh_fractures(const FractureNetwork& net, const StructuredGrid& grid);

/// Fine cells of one continuum grouped by coarse cell.
struct ContinuumCoarseMap {
  /// Global coarse-cell ids that contain content, increasing.
  std::vector<std::size_t> coarse_cells;
  /// For each entry of `coarse_cells`, the member fine indices (increasing).
  std::vector<std::vector<std::size_t>> members;
  /// Measure (area or length) of each coarse cell restricted to the continuum.
  std::vector<double> measures;
  /// Position in `coarse_cells` for every fine index.
  std::vector<std::size_t> fine_to_coarse;
  /// Measure of every fine cell.
  std::vector<double> cell_measures;
  /// Position in `coarse_cells` for every global coarse cell, or npos.
  std::vector<std::size_t> coarse_slot;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t size() const noexcept { return coarse_cells.size(); }
};

struct CoarseMap {
  StructuredGrid fine;
  StructuredGrid coarse;
  ContinuumCoarseMap background;
  ContinuumCoarseMap fracture;
};

/// Groups background cells into coarse blocks and fracture cells by the coarse
/// cell of their host. Coarse cells without fracture content are omitted from
/// the fracture map.
CoarseMap build_coarse_map(const StructuredGrid& fine, const StructuredGrid& coarse,
                           const FractureMesh& fmesh);

}  // namespace mcflow

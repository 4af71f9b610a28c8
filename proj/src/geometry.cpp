#include "mcflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mcflow {

double Segment::length() const { return std::hypot(x2 - x1, y2 - y1); }

FractureNetwork parse_fracture_network(std::istream& in) {
  FractureNetwork net;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Segment s;
    std::string extra;
    if (!(fields >> s.x1 >> s.y1 >> s.x2 >> s.y2) || (fields >> extra)) {
      throw std::invalid_argument("fracture file line " + std::to_string(line_no) +
                                  ": expected four numbers 'x1 y1 x2 y2'");
    }
    net.segments.push_back(s);
  }
  return net;
}

FractureNetwork read_fracture_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open fracture file '" + path.string() + "'");
  return parse_fracture_network(in);
}

void validate_network(const FractureNetwork& net, double lx, double ly) {
  for (std::size_t i = 0; i < net.segments.size(); ++i) {
    const Segment& s = net.segments[i];
    const auto inside = [&](double x, double y) { return x >= 0.0 && x <= lx && y >= 0.0 && y <= ly; };
    if (!inside(s.x1, s.y1) || !inside(s.x2, s.y2)) {
      throw std::invalid_argument("fracture segment " + std::to_string(i) + " leaves the domain");
    }
    if (!(s.length() > 0.0)) {
      throw std::invalid_argument("fracture segment " + std::to_string(i) + " has zero length");
    }
  }
}

StructuredGrid::StructuredGrid(std::size_t nx, std::size_t ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx == 0 || ny == 0) throw std::invalid_argument("grid: cell counts must be positive");
  if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("grid: extents must be positive");
}

std::size_t StructuredGrid::locate(double x, double y) const {
  const auto clamp_index = [](double v, std::size_t n) {
    if (!(v > 0.0)) return std::size_t{0};
    const auto i = static_cast<std::size_t>(v);
    return std::min(i, n - 1);
  };
  return index(clamp_index(x / hx(), nx_), clamp_index(y / hy(), ny_));
}

StructuredGrid build_grid(std::size_t nx, std::size_t ny, double lx, double ly) {
  return StructuredGrid(nx, ny, lx, ly);
}

namespace {

struct Piece {
  double t0;
  double t1;
  std::size_t host;
};

std::vector<Piece> clip_segment(const Segment& s, const StructuredGrid& grid) {
  const double dx = s.x2 - s.x1;
  const double dy = s.y2 - s.y1;
  const double len = s.length();
  const double h = std::min(grid.hx(), grid.hy());

  std::vector<double> ts{0.0, 1.0};
  if (dx != 0.0) {
    for (std::size_t i = 0; i <= grid.nx(); ++i) {
      const double t = (static_cast<double>(i) * grid.hx() - s.x1) / dx;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  if (dy != 0.0) {
    for (std::size_t j = 0; j <= grid.ny(); ++j) {
      const double t = (static_cast<double>(j) * grid.hy() - s.y1) / dy;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  std::vector<Piece> raw;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    raw.push_back({ts[k], ts[k + 1], grid.locate(s.x1 + tm * dx, s.y1 + tm * dy)});
  }

  // Slivers (corner crossings) are absorbed by the preceding piece, or by the
  // following one at the start of the segment.
  const double min_len = 1e-12 * h;
  std::vector<Piece> merged;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const Piece& p = raw[k];
    const bool sliver = (p.t1 - p.t0) * len < min_len && raw.size() > 1;
    if (sliver) {
      if (!merged.empty()) {
        merged.back().t1 = p.t1;
      } else {
        raw[k + 1].t0 = p.t0;
      }
      continue;
    }
    if (!merged.empty() && merged.back().host == p.host) {
      merged.back().t1 = p.t1;
      continue;
    }
    merged.push_back(p);
  }
  return merged;
}

}  // namespace

FractureMesh mesh_fractures(const FractureNetwork& net, const StructuredGrid& grid) {
  validate_network(net, grid.lx(), grid.ly());
  FractureMesh mesh;
  for (std::size_t sid = 0; sid < net.segments.size(); ++sid) {
    const Segment& s = net.segments[sid];
    const double len = s.length();
    const std::size_t first = mesh.cells.size();
    for (const Piece& p : clip_segment(s, grid)) {
      FractureCell c;
      c.segment = sid;
      c.s0 = p.t0 * len;
      c.s1 = p.t1 * len;
      c.length = c.s1 - c.s0;
      c.host = p.host;
      const double tm = 0.5 * (p.t0 + p.t1);
      c.mid_x = s.x1 + tm * (s.x2 - s.x1);
      c.mid_y = s.y1 + tm * (s.y2 - s.y1);
      mesh.cells.push_back(c);
    }
    for (std::size_t k = first + 1; k < mesh.cells.size(); ++k) {
      const double d = 0.5 * (mesh.cells[k - 1].length + mesh.cells[k].length);
      mesh.links.push_back({k - 1, k, d});
    }
  }
  return mesh;
}

namespace {

ContinuumCoarseMap group_by_coarse(const std::vector<std::size_t>& coarse_of_fine,
                                   const std::vector<double>& fine_measure, std::size_t coarse_count) {
  ContinuumCoarseMap map;
  map.coarse_slot.assign(coarse_count, ContinuumCoarseMap::npos);
  std::vector<std::vector<std::size_t>> by_coarse(coarse_count);
  for (std::size_t f = 0; f < coarse_of_fine.size(); ++f) by_coarse[coarse_of_fine[f]].push_back(f);
  map.fine_to_coarse.assign(coarse_of_fine.size(), ContinuumCoarseMap::npos);
  map.cell_measures = fine_measure;
  for (std::size_t c = 0; c < coarse_count; ++c) {
    if (by_coarse[c].empty()) continue;
    const std::size_t slot = map.coarse_cells.size();
    map.coarse_slot[c] = slot;
    map.coarse_cells.push_back(c);
    double measure = 0.0;
    for (std::size_t f : by_coarse[c]) {
      measure += fine_measure[f];
      map.fine_to_coarse[f] = slot;
    }
    map.measures.push_back(measure);
    map.members.push_back(std::move(by_coarse[c]));
  }
  return map;
}

}  // namespace

CoarseMap build_coarse_map(const StructuredGrid& fine, const StructuredGrid& coarse,
                           const FractureMesh& fmesh) {
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); };
  if (!close(fine.lx(), coarse.lx()) || !close(fine.ly(), coarse.ly())) {
    throw std::invalid_argument("coarse map: fine and coarse grids cover different domains");
  }
  if (fine.nx() % coarse.nx() != 0 || fine.ny() % coarse.ny() != 0) {
    throw std::invalid_argument("coarse map: coarse grid does not divide the fine grid evenly");
  }
  const std::size_t rx = fine.nx() / coarse.nx();
  const std::size_t ry = fine.ny() / coarse.ny();
  const auto coarse_of = [&](std::size_t cell) {
    return coarse.index(fine.ix(cell) / rx, fine.iy(cell) / ry);
  };

  CoarseMap map;
  map.fine = fine;
  map.coarse = coarse;

  std::vector<std::size_t> bg(fine.cell_count());
  for (std::size_t c = 0; c < bg.size(); ++c) bg[c] = coarse_of(c);
  map.background = group_by_coarse(bg, std::vector<double>(bg.size(), fine.cell_area()),
                                   coarse.cell_count());

  std::vector<std::size_t> fr(fmesh.size());
  std::vector<double> lengths(fmesh.size());
  for (std::size_t k = 0; k < fmesh.size(); ++k) {
    fr[k] = coarse_of(fmesh.cells[k].host);
    lengths[k] = fmesh.cells[k].length;
  }
  map.fracture = group_by_coarse(fr, lengths, coarse.cell_count());
  return map;
}

}  // namespace mcflow

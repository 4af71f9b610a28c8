#include "mcflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace mcflow {

std::vector<std::size_t> well_cells(const FractureMesh& fmesh, const StructuredGrid& grid,
                                    const std::array<double, 4>& box) {
  std::vector<std::size_t> cells;
  for (std::size_t f = 0; f < fmesh.size(); ++f) {
    const std::size_t host = fmesh.cells[f].host;
    const double x = (static_cast<double>(grid.ix(host)) + 0.5) * grid.hx();
    const double y = (static_cast<double>(grid.iy(host)) + 0.5) * grid.hy();
    if (x >= box[0] && x <= box[1] && y >= box[2] && y <= box[3]) cells.push_back(f);
  }
  return cells;
}

ExchangeSpec make_exchange(const std::vector<ContinuumSpec>& continua, const ExchangeConfig& config, double h) {
  ExchangeSpec ex;
  for (std::size_t a = 0; a < continua.size(); ++a) {
    if (continua[a].kind != ContinuumKind::background) continue;
    for (std::size_t b = 0; b < continua.size(); ++b) {
      if (continua[b].kind == ContinuumKind::fracture) {
        ex.pairs.push_back({a, b, ExchangeRule::embedded_fracture,
                            config.fracture_sigma.value_or(continua[a].permeability), config.fracture_distance * h});
      } else if (b > a) {
        const double k = std::min(continua[a].permeability, continua[b].permeability);
        ex.pairs.push_back({a, b, ExchangeRule::overlap, config.overlap_sigma.value_or(k), config.overlap_distance * h});
      }
    }
  }
  return ex;
}

Problem build_problem(const RunConfig& config) {
  const GeometryConfig& g = config.geometry;
  Problem p;
  p.fine = build_grid(g.fine_nx, g.fine_ny, g.lx, g.ly);
  p.coarse = build_grid(g.coarse_nx, g.coarse_ny, g.lx, g.ly);
  const bool has_fracture = std::any_of(config.continua.begin(), config.continua.end(),
                                        [](const ContinuumSpec& c) { return c.kind == ContinuumKind::fracture; });
  if (has_fracture) p.fractures = mesh_fractures(read_fracture_network(g.file), p.fine);
  p.maps = build_coarse_map(p.fine, p.coarse, p.fractures);
  const double h = std::min(p.fine.hx(), p.fine.hy());
  p.base = assemble_block_operator(config.continua, p.fine, p.fractures, make_exchange(config.continua, config.exchange, h));
  p.op = p.base;
  if (config.well.enabled) {
    WellSpec w;
    const auto it = std::find_if(config.continua.begin(), config.continua.end(),
                                 [&](const ContinuumSpec& c) { return c.name == config.well.continuum; });
    if (it == config.continua.end()) throw std::invalid_argument("well: unknown continuum '" + config.well.continuum + "'");
    w.continuum = static_cast<std::size_t>(it - config.continua.begin());
    w.pressure = config.well.pressure;
    w.index = config.well.index;
    if (it->kind == ContinuumKind::fracture) {
      w.cells = well_cells(p.fractures, p.fine, config.well.box);
    } else {
      for (std::size_t c = 0; c < p.fine.cell_count(); ++c) {
        const double x = (static_cast<double>(p.fine.ix(c)) + 0.5) * p.fine.hx();
        const double y = (static_cast<double>(p.fine.iy(c)) + 0.5) * p.fine.hy();
        const auto& b = config.well.box;
        if (x >= b[0] && x <= b[1] && y >= b[2] && y <= b[3]) w.cells.push_back(c);
      }
    }
    if (w.cells.empty()) throw std::invalid_argument("well: the box contains no cells of the target continuum");
    p.op = apply_well(p.base, w);
    p.well = std::move(w);
  }
  return p;
}

MultiscaleSpace build_coarse_space(const RunConfig& config, const Problem& problem, std::size_t layers,
                                   std::size_t jobs) {
  MultiscaleSpace space = build_multiscale_space(problem.base, problem.maps, layers, jobs);
  if (config.nlmc_stiffness == CoarseStiffness::normalized) space = partition_of_unity(space);
  return space;
}

BlockOperator build_coarse_operator(const RunConfig& config, const Problem& problem, const MultiscaleSpace& space) {
  ProjectionOptions popts;
  popts.stiffness = config.nlmc_stiffness;
  return coarse_block_operator(project_operators(space, problem.op, popts, &problem.base), config.continua);
}

std::vector<std::size_t> snapshot_steps(std::size_t nt) {
  std::vector<std::size_t> s;
  if (nt % 4 == 0) s.push_back(nt / 4);
  if (nt % 2 == 0) s.push_back(nt / 2);
  s.push_back(nt);
  return s;
}

const Vector& Reference::at(std::size_t step, std::size_t nt_candidate) const {
  if (nt_candidate == 0 || (step * nt) % nt_candidate != 0) {
    throw std::invalid_argument("reference: step " + std::to_string(step) + " of " + std::to_string(nt_candidate) +
                                " does not fall on a reference step");
  }
  const std::size_t m = step * nt / nt_candidate;
  for (const auto& s : snapshots) {
    if (s.step == m) return s.u;
  }
  throw std::invalid_argument("reference: no snapshot stored at step " + std::to_string(m));
}

namespace {

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

constexpr char kRefMagic[8] = {'M', 'C', 'F', 'R', 'E', 'F', '1', '\n'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("reference file truncated");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("reference file truncated");
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string reference_key(const RunConfig& config, std::size_t nt_ref) {
  std::ostringstream s;
  s.precision(17);
  s << "v1|" << config.geometry.lx << '|' << config.geometry.ly << '|' << config.geometry.fine_nx << 'x'
    << config.geometry.fine_ny << '|';
  const bool has_fracture = std::any_of(config.continua.begin(), config.continua.end(),
                                        [](const ContinuumSpec& c) { return c.kind == ContinuumKind::fracture; });
  if (has_fracture) s << read_file(config.geometry.file) << '|';
  for (const auto& c : config.continua) {
    s << c.name << ',' << static_cast<int>(c.kind) << ',' << c.storage << ',' << c.permeability << ';';
  }
  const auto& e = config.exchange;
  s << '|' << e.fracture_distance << ',' << e.fracture_sigma.value_or(-1) << ',' << e.overlap_distance << ','
    << e.overlap_sigma.value_or(-1);
  const auto& w = config.well;
  s << '|' << w.enabled << ',' << w.continuum << ',' << w.pressure << ',' << w.index;
  for (double b : w.box) s << ',' << b;
  s << '|' << config.time.t_max << ',' << config.time.u0 << ',' << nt_ref << ',' << config.solver.reference_rtol
    << ',' << static_cast<int>(config.solver.cg.preconditioner) << ',' << config.solver.cg.warm_start;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

void write_reference(const std::filesystem::path& path, const Reference& ref) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(kRefMagic, sizeof kRefMagic);
    put_u64(out, ref.nt);
    put_u64(out, ref.snapshots.size());
    for (const auto& s : ref.snapshots) {
      put_u64(out, s.step);
      put_f64(out, s.time);
      put_u64(out, s.u.size());
      out.write(reinterpret_cast<const char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Reference read_reference(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[sizeof kRefMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kRefMagic)) {
    throw IoError("'" + path.string() + "' is not a reference file");
  }
  Reference ref;
  ref.nt = get_u64(in);
  const std::uint64_t count = get_u64(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    Snapshot s;
    s.step = get_u64(in);
    s.time = get_f64(in);
    s.u.resize(get_u64(in));
    if (!in.read(reinterpret_cast<char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * sizeof(double)))) {
      throw IoError("reference file truncated");
    }
    ref.snapshots.push_back(std::move(s));
  }
  ref.from_cache = true;
  return ref;
}

Reference compute_reference(const RunConfig& config, const Problem& problem, std::size_t nt_ref,
                            const std::filesystem::path& cache_dir) {
  const std::filesystem::path path = cache_dir / ("ref_" + reference_key(config, nt_ref) + ".bin");
  if (std::filesystem::exists(path)) {
    Reference ref = read_reference(path);
    const bool sizes_ok = std::all_of(ref.snapshots.begin(), ref.snapshots.end(),
                                      [&](const Snapshot& s) { return s.u.size() == problem.op.total_size(); });
    if (ref.nt == nt_ref && sizes_ok) return ref;
  }
  const auto t0 = std::chrono::steady_clock::now();
  TransientOptions opts;
  opts.snapshots = snapshot_steps(nt_ref);
  opts.cg = config.solver.cg;
  opts.cg.rtol = config.solver.reference_rtol;
  Trajectory traj = run_transient(problem.op, SchemeSpec::im1(1.0), config.time.t_max / static_cast<double>(nt_ref),
                                  nt_ref, Vector(problem.op.total_size(), config.time.u0), opts);
  if (traj.failure) throw NotConvergedError("reference run failed: " + *traj.failure);
  Reference ref;
  ref.nt = nt_ref;
  ref.snapshots = std::move(traj.snapshots);
  ref.seconds = seconds_since(t0);
  write_reference(path, ref);
  return ref;
}

ErrorValues compute_errors(std::span<const double> u_ref, std::span<const double> candidate, const CsrMatrix& a,
                           const MultiscaleSpace* space) {
  const auto rel = [](std::span<const double> ref, std::span<const double> cand) {
    const double denom = norm2(ref);
    if (!(denom > 0.0)) throw std::domain_error("undefined relative error: zero reference norm");
    Vector d(ref.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = ref[i] - cand[i];
    return 100.0 * norm2(d) / denom;
  };
  ErrorValues e;
  if (space == nullptr) {
    if (candidate.size() != u_ref.size() || a.rows() != u_ref.size()) {
      throw std::invalid_argument("errors: fine vector sizes differ");
    }
    e.e_h1 = rel(u_ref, candidate);
    Vector d(u_ref.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = u_ref[i] - candidate[i];
    const double ref_energy = dot(u_ref, spmv(a, u_ref));
    if (!(ref_energy > 0.0)) throw std::domain_error("undefined energy error: zero reference energy norm");
    const double diff_energy = std::max(0.0, dot(d, spmv(a, d)));
    e.e_h2 = 100.0 * std::sqrt(diff_energy / ref_energy);
    return e;
  }
  if (candidate.size() != space->coarse_size() || u_ref.size() != space->fine_size()) {
    throw std::invalid_argument("errors: coarse vector sizes differ");
  }
  const Vector u_ms = reconstruct_fine(*space, candidate);
  e.e_ms1 = rel(u_ref, u_ms);
  const Vector avg = coarse_averages(*space, u_ref);
  e.e_H1 = rel(avg, candidate);
  return e;
}

std::vector<RateRow> compute_rates(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, std::map<std::size_t, const ReportRow*>> series;
  std::vector<Key> order;
  for (const auto& r : rows) {
    if (r.nt == 0) continue;
    const Key key{r.scheme, r.split, static_cast<double>(r.snapshot) / static_cast<double>(r.nt)};
    if (!series.count(key)) order.push_back(key);
    series[key][r.nt] = &r;
  }
  const std::pair<const char*, std::optional<double> ReportRow::*> metrics[] = {
      {"e_h1", &ReportRow::e_h1}, {"e_h2", &ReportRow::e_h2}, {"e_ms1", &ReportRow::e_ms1}, {"e_H1", &ReportRow::e_H1}};
  std::vector<RateRow> out;
  for (const Key& key : order) {
    const auto& byn = series[key];
    for (const auto& [name, field] : metrics) {
      for (const auto& [n, row] : byn) {
        const auto next = byn.find(2 * n);
        if (next == byn.end()) continue;
        const auto& e0 = row->*field;
        const auto& e1 = next->second->*field;
        if (!e0 || !e1 || !(*e0 > 0.0) || !(*e1 > 0.0)) continue;
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), name, n, 2 * n, std::log2(*e0 / *e1)});
      }
    }
  }
  return out;
}

namespace {

struct Job {
  SpaceKind space;
  SchemeSpec scheme;
  std::string split;
  std::size_t nt;
};

std::string job_label(const Job& j) {
  return (j.space == SpaceKind::multiscale ? "Ms-" : "") + j.scheme.label();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CaseReport run_case(const RunConfig& config, const RunOptions& options) {
  CaseReport report;
  report.out_dir = options.out_dir.value_or(config.output.dir);
  const std::filesystem::path cache = options.cache_dir.value_or(report.out_dir / "cache");
  const std::size_t nt_ref = options.reference_nt.value_or(config.time.reference_nt);
  const std::size_t jobs = std::max<std::size_t>(1, options.jobs);

  const Problem problem = build_problem(config);
  const CsrMatrix a_base = problem.base.global_matrix();
  const Reference ref = compute_reference(config, problem, nt_ref, cache);

  const auto& sc = config.schemes;
  const bool want_ms = std::find(sc.spaces.begin(), sc.spaces.end(), SpaceKind::multiscale) != sc.spaces.end();
  MultiscaleSpace space;
  BlockOperator coarse;
  if (want_ms) {
    space = build_coarse_space(config, problem, config.layers, jobs);
    coarse = build_coarse_operator(config, problem, space);
  }

  std::vector<Job> list;
  for (SpaceKind sp : sc.spaces) {
    for (const auto& name : sc.names) {
      const SchemeSpec probe = make_scheme(sc, name, SplitMode::d);
      const std::vector<SplitMode> splits = probe.is_imex() ? sc.splits : std::vector<SplitMode>{SplitMode::d};
      for (SplitMode m : splits) {
        for (std::size_t nt : config.time.nt) {
          list.push_back({sp, make_scheme(sc, name, m), probe.is_imex() ? to_string(m) : "", nt});
        }
      }
    }
  }

  if (options.check_stability) {
    for (SpaceKind sp : sc.spaces) {
      const BlockOperator& op = sp == SpaceKind::multiscale ? coarse : problem.base;
      for (const auto& name : sc.names) {
        const SchemeSpec probe = make_scheme(sc, name, SplitMode::d);
        const std::vector<SplitMode> splits = probe.is_imex() ? sc.splits : std::vector<SplitMode>{SplitMode::d};
        for (SplitMode m : splits) {
          const SchemeSpec s = make_scheme(sc, name, m);
          std::ostringstream line;
          line << (sp == SpaceKind::multiscale ? "Ms-" : "") << s.label();
          if (s.is_imex()) line << " split=" << to_string(m);
          try {
            const SplitOperator split = split_operator(op, m);
            const StabilityReport r = check_stability(s, s.is_imex() ? &split : nullptr);
            line << ": " << to_string(r.verdict);
            if (r.lambda_min) line << " (lambda_min=" << *r.lambda_min << ")";
            if (r.heuristic) line << " [heuristic]";
          } catch (const std::exception& e) {
            line << ": check failed: " << e.what();
          }
          report.stability.push_back(line.str());
        }
      }
    }
  }

  std::vector<std::vector<ReportRow>> results(list.size());
  std::vector<std::string> errors(list.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= list.size()) return;
      const Job& job = list[idx];
      const bool ms = job.space == SpaceKind::multiscale;
      const BlockOperator& op = ms ? coarse : problem.op;
      const std::string label = job_label(job);
      try {
        TransientOptions opts;
        for (std::size_t s : snapshot_steps(job.nt)) {
          if ((s * ref.nt) % job.nt == 0) opts.snapshots.push_back(s);
        }
        opts.startup_substeps = config.time.startup_substeps;
        opts.cg = config.solver.cg;
        opts.monitor_energy = config.output.monitor_energy;
        if (options.dump_snapshots) {
          opts.snapshot_dir = report.out_dir / "snapshots" /
                              (label + (job.split.empty() ? "" : "-" + job.split) + "_nt" + std::to_string(job.nt));
        }
        const double tau = config.time.t_max / static_cast<double>(job.nt);
        std::vector<double> times;
        Trajectory traj;
        for (std::size_t rep = 0; rep < config.output.timing_repeats; ++rep) {
          const auto t0 = std::chrono::steady_clock::now();
          Trajectory t = run_transient(op, job.scheme, tau, job.nt, Vector(op.total_size(), config.time.u0), opts);
          times.push_back(seconds_since(t0));
          if (rep == 0) traj = std::move(t);
          opts.snapshot_dir.reset();
        }
        Vector iters;
        for (const auto& r : traj.reports) {
          if (iters.size() < r.iterations.size()) iters.resize(r.iterations.size(), 0.0);
          for (std::size_t k = 0; k < r.iterations.size(); ++k) iters[k] += static_cast<double>(r.iterations[k]);
        }
        for (double& v : iters) v /= static_cast<double>(std::max<std::size_t>(1, traj.reports.size()));
        for (const auto& snap : traj.snapshots) {
          ReportRow row;
          row.scheme = label;
          row.split = job.split;
          row.nt = job.nt;
          row.snapshot = snap.step;
          const ErrorValues e = compute_errors(ref.at(snap.step, job.nt), snap.u, a_base, ms ? &space : nullptr);
          row.e_h1 = e.e_h1;
          row.e_h2 = e.e_h2;
          row.e_ms1 = e.e_ms1;
          row.e_H1 = e.e_H1;
          row.time_total_s = median(times);
          row.avg_iters = iters;
          results[idx].push_back(std::move(row));
        }
        if (traj.failure) {
          errors[idx] = label + " " + job.split + " Nt=" + std::to_string(job.nt) + ": " + *traj.failure;
          results[idx].push_back({label, job.split, job.nt, 0, {}, {}, {}, {}, {}, {}});
        }
      } catch (const std::exception& e) {
        errors[idx] = label + " " + job.split + " Nt=" + std::to_string(job.nt) + ": " + e.what();
        results[idx].push_back({label, job.split, job.nt, 0, {}, {}, {}, {}, {}, {}});
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < list.size(); ++i) {
    for (auto& r : results[i]) report.rows.push_back(std::move(r));
    if (!errors[i].empty()) report.failures.push_back(errors[i]);
  }
  report.rates = compute_rates(report.rows);
  write_csv(report.rows, report.out_dir / "results.csv");
  write_rates_csv(report.rates, report.out_dir / "rates.csv");
  if (!report.stability.empty()) {
    std::ofstream out(report.out_dir / "stability.txt");
    for (const auto& l : report.stability) out << l << '\n';
  }
  return report;
}

}  // namespace mcflow

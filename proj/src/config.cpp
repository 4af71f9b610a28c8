#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "mcflow/harness.hpp"

namespace mcflow {

namespace {

std::size_t line_of(const toml::node& n) { return n.source().begin.line; }

[[noreturn]] void fail(const std::string& key, const toml::node& n, const std::string& what) {
  throw ParseError(key, line_of(n), key + " (line " + std::to_string(line_of(n)) + "): " + what);
}

void reject_unknown(const toml::table& tbl, const std::string& prefix, const std::set<std::string>& known) {
  for (auto&& [k, v] : tbl) {
    const std::string name(k.str());
    if (!known.count(name)) fail(prefix + name, v, "unknown key");
  }
}

const toml::table* subtable(const toml::table& root, const std::string& name) {
  const toml::node* n = root.get(name);
  if (n == nullptr) return nullptr;
  if (!n->is_table()) fail(name, *n, "expected a table");
  return n->as_table();
}

double get_double(const toml::table& tbl, const std::string& prefix, const std::string& key, double fallback) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return fallback;
  const auto v = n->value<double>();
  if (!v) fail(prefix + key, *n, "expected a number");
  return *v;
}

std::optional<double> get_optional_double(const toml::table& tbl, const std::string& prefix, const std::string& key) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return std::nullopt;
  const auto v = n->value<double>();
  if (!v) fail(prefix + key, *n, "expected a number");
  return *v;
}

std::size_t get_count(const toml::table& tbl, const std::string& prefix, const std::string& key,
                      std::size_t fallback) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return fallback;
  const auto v = n->value<int64_t>();
  if (!v || !n->is_integer() || *v < 1) fail(prefix + key, *n, "expected a positive integer");
  return static_cast<std::size_t>(*v);
}

bool get_bool(const toml::table& tbl, const std::string& prefix, const std::string& key, bool fallback) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return fallback;
  if (!n->is_boolean()) fail(prefix + key, *n, "expected true or false");
  return *n->value<bool>();
}

std::string get_string(const toml::table& tbl, const std::string& prefix, const std::string& key,
                       const std::string& fallback) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return fallback;
  if (!n->is_string()) fail(prefix + key, *n, "expected a string");
  return *n->value<std::string>();
}

const toml::array* get_array(const toml::table& tbl, const std::string& prefix, const std::string& key) {
  const toml::node* n = tbl.get(key);
  if (n == nullptr) return nullptr;
  if (!n->is_array()) fail(prefix + key, *n, "expected an array");
  return n->as_array();
}

std::vector<std::size_t> get_counts(const toml::table& tbl, const std::string& prefix, const std::string& key,
                                    std::vector<std::size_t> fallback) {
  const toml::array* arr = get_array(tbl, prefix, key);
  if (arr == nullptr) return fallback;
  std::vector<std::size_t> out;
  for (const auto& e : *arr) {
    const auto v = e.value<int64_t>();
    if (!e.is_integer() || !v || *v < 1) fail(prefix + key, e, "expected positive integers");
    out.push_back(static_cast<std::size_t>(*v));
  }
  if (out.empty()) fail(prefix + key, *tbl.get(key), "must not be empty");
  return out;
}

std::vector<std::string> get_strings(const toml::table& tbl, const std::string& prefix, const std::string& key,
                                     std::vector<std::string> fallback) {
  const toml::array* arr = get_array(tbl, prefix, key);
  if (arr == nullptr) return fallback;
  std::vector<std::string> out;
  for (const auto& e : *arr) {
    if (!e.is_string()) fail(prefix + key, e, "expected strings");
    out.push_back(*e.value<std::string>());
  }
  if (out.empty()) fail(prefix + key, *tbl.get(key), "must not be empty");
  return out;
}

void require_positive(double v, const toml::table& tbl, const std::string& prefix, const std::string& key) {
  if (!(v > 0.0)) fail(prefix + key, tbl.get(key) ? *tbl.get(key) : static_cast<const toml::node&>(tbl), "must be positive");
}

void parse_geometry(const toml::table& g, const std::filesystem::path& base, RunConfig& cfg) {
  const std::string p = "geometry.";
  reject_unknown(g, p, {"file", "lx", "ly", "fine", "coarse"});
  const toml::node* file = g.get("file");
  if (file == nullptr) throw ParseError(p + "file", line_of(g), "missing required key geometry.file");
  if (!file->is_string()) fail(p + "file", *file, "expected a string");
  std::filesystem::path path = *file->value<std::string>();
  cfg.geometry.file = path.is_absolute() ? path : base / path;
  cfg.geometry.lx = get_double(g, p, "lx", cfg.geometry.lx);
  cfg.geometry.ly = get_double(g, p, "ly", cfg.geometry.ly);
  require_positive(cfg.geometry.lx, g, p, "lx");
  require_positive(cfg.geometry.ly, g, p, "ly");
  const auto pair = [&](const std::string& key, std::size_t& nx, std::size_t& ny) {
    const auto v = get_counts(g, p, key, {nx, ny});
    if (v.size() != 2) fail(p + key, *g.get(key), "expected [nx, ny]");
    nx = v[0];
    ny = v[1];
  };
  pair("fine", cfg.geometry.fine_nx, cfg.geometry.fine_ny);
  pair("coarse", cfg.geometry.coarse_nx, cfg.geometry.coarse_ny);
  if (cfg.geometry.fine_nx % cfg.geometry.coarse_nx != 0 || cfg.geometry.fine_ny % cfg.geometry.coarse_ny != 0) {
    fail(p + "coarse", g.get("coarse") ? *g.get("coarse") : static_cast<const toml::node&>(g),
         "coarse grid must divide the fine grid");
  }
}

void parse_continua(const toml::node& node, RunConfig& cfg) {
  if (!node.is_array_of_tables()) fail("continuum", node, "expected [[continuum]] tables");
  std::size_t fractures = 0;
  for (const auto& e : *node.as_array()) {
    const toml::table& t = *e.as_table();
    const std::string p = "continuum.";
    reject_unknown(t, p, {"name", "kind", "c", "k"});
    ContinuumSpec spec;
    spec.name = get_string(t, p, "name", "");
    if (spec.name.empty()) throw ParseError(p + "name", line_of(t), "missing required key continuum.name");
    const std::string kind = get_string(t, p, "kind", "background");
    if (kind == "background") spec.kind = ContinuumKind::background;
    else if (kind == "fracture") spec.kind = ContinuumKind::fracture;
    else fail(p + "kind", *t.get("kind"), "expected \"background\" or \"fracture\"");
    if (!t.get("c")) throw ParseError(p + "c", line_of(t), "missing required key continuum.c");
    if (!t.get("k")) throw ParseError(p + "k", line_of(t), "missing required key continuum.k");
    spec.storage = get_double(t, p, "c", 0.0);
    spec.permeability = get_double(t, p, "k", 0.0);
    require_positive(spec.storage, t, p, "c");
    require_positive(spec.permeability, t, p, "k");
    for (const auto& other : cfg.continua) {
      if (other.name == spec.name) fail(p + "name", *t.get("name"), "duplicate continuum name '" + spec.name + "'");
    }
    if (spec.kind == ContinuumKind::fracture) ++fractures;
    cfg.continua.push_back(spec);
  }
  if (cfg.continua.empty()) fail("continuum", node, "at least one continuum is required");
  if (fractures > 1) fail("continuum", node, "at most one fracture continuum is supported");
  std::stable_sort(cfg.continua.begin(), cfg.continua.end(),
                   [](const ContinuumSpec& a, const ContinuumSpec& b) { return a.permeability < b.permeability; });
}

void parse_exchange(const toml::table& t, RunConfig& cfg) {
  const std::string p = "exchange.";
  reject_unknown(t, p, {"fracture_distance", "fracture_sigma", "overlap_distance", "overlap_sigma"});
  auto& e = cfg.exchange;
  e.fracture_distance = get_double(t, p, "fracture_distance", e.fracture_distance);
  e.overlap_distance = get_double(t, p, "overlap_distance", e.overlap_distance);
  e.fracture_sigma = get_optional_double(t, p, "fracture_sigma");
  e.overlap_sigma = get_optional_double(t, p, "overlap_sigma");
  require_positive(e.fracture_distance, t, p, "fracture_distance");
  require_positive(e.overlap_distance, t, p, "overlap_distance");
  if (e.fracture_sigma) require_positive(*e.fracture_sigma, t, p, "fracture_sigma");
  if (e.overlap_sigma) require_positive(*e.overlap_sigma, t, p, "overlap_sigma");
}

void parse_well(const toml::table& t, RunConfig& cfg) {
  const std::string p = "well.";
  reject_unknown(t, p, {"enabled", "continuum", "pressure", "index", "box"});
  auto& w = cfg.well;
  w.enabled = get_bool(t, p, "enabled", w.enabled);
  w.continuum = get_string(t, p, "continuum", w.continuum);
  w.pressure = get_double(t, p, "pressure", w.pressure);
  w.index = get_double(t, p, "index", w.index);
  if (!(w.index >= 0.0)) fail(p + "index", *t.get("index"), "must be non-negative");
  if (const toml::array* box = get_array(t, p, "box")) {
    if (box->size() != 4) fail(p + "box", *t.get("box"), "expected [x0, x1, y0, y1]");
    for (std::size_t i = 0; i < 4; ++i) {
      const auto v = (*box)[i].value<double>();
      if (!v) fail(p + "box", (*box)[i], "expected numbers");
      w.box[i] = *v;
    }
    if (!(w.box[0] < w.box[1]) || !(w.box[2] < w.box[3])) fail(p + "box", *t.get("box"), "empty box");
  }
}

void parse_time(const toml::table& t, RunConfig& cfg) {
  const std::string p = "time.";
  reject_unknown(t, p, {"t_max", "nt", "u0", "reference_nt", "startup_substeps"});
  auto& tc = cfg.time;
  tc.t_max = get_double(t, p, "t_max", tc.t_max);
  require_positive(tc.t_max, t, p, "t_max");
  tc.nt = get_counts(t, p, "nt", tc.nt);
  tc.u0 = get_double(t, p, "u0", tc.u0);
  tc.reference_nt = get_count(t, p, "reference_nt", tc.reference_nt);
  tc.startup_substeps = get_count(t, p, "startup_substeps", tc.startup_substeps);
}

void parse_schemes(const toml::table& t, RunConfig& cfg) {
  const std::string p = "schemes.";
  reject_unknown(t, p, {"list", "splits", "space", "theta", "mu", "sigma", "cnlf_sigma"});
  auto& s = cfg.schemes;
  s.theta = get_double(t, p, "theta", s.theta);
  s.mu = get_double(t, p, "mu", s.mu);
  s.sigma = get_double(t, p, "sigma", s.sigma);
  s.cnlf_sigma = get_double(t, p, "cnlf_sigma", s.cnlf_sigma);
  s.names = get_strings(t, p, "list", s.names);
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    try {
      (void)make_scheme(s, s.names[i], SplitMode::d);
    } catch (const std::invalid_argument& e) {
      fail(p + "list", (*t.get("list")->as_array())[i], e.what());
    }
  }
  if (const toml::array* arr = get_array(t, p, "splits")) {
    s.splits.clear();
    for (const auto& e : *arr) {
      const auto v = e.value<std::string>();
      if (!v) fail(p + "splits", e, "expected strings");
      try {
        s.splits.push_back(parse_split(*v));
      } catch (const std::invalid_argument& ex) {
        fail(p + "splits", e, ex.what());
      }
    }
    if (s.splits.empty()) fail(p + "splits", *t.get("splits"), "must not be empty");
  }
  if (const toml::array* arr = get_array(t, p, "space")) {
    s.spaces.clear();
    for (const auto& e : *arr) {
      const auto v = e.value<std::string>();
      if (v && *v == "fine") s.spaces.push_back(SpaceKind::fine);
      else if (v && *v == "multiscale") s.spaces.push_back(SpaceKind::multiscale);
      else fail(p + "space", e, "expected \"fine\" or \"multiscale\"");
    }
    if (s.spaces.empty()) fail(p + "space", *t.get("space"), "must not be empty");
  }
}

void parse_solver(const toml::table& t, RunConfig& cfg) {
  const std::string p = "solver.";
  reject_unknown(t, p, {"rtol", "reference_rtol", "max_iter", "preconditioner", "warm_start"});
  auto& s = cfg.solver;
  s.cg.rtol = get_double(t, p, "rtol", s.cg.rtol);
  s.reference_rtol = get_double(t, p, "reference_rtol", s.reference_rtol);
  s.cg.warm_start = get_bool(t, p, "warm_start", s.cg.warm_start);
  require_positive(s.cg.rtol, t, p, "rtol");
  require_positive(s.reference_rtol, t, p, "reference_rtol");
  s.cg.max_iter = static_cast<int>(get_count(t, p, "max_iter", static_cast<std::size_t>(s.cg.max_iter)));
  const std::string pre = get_string(t, p, "preconditioner", "ilu0");
  if (pre == "ilu0") s.cg.preconditioner = Preconditioner::ilu0;
  else if (pre == "jacobi") s.cg.preconditioner = Preconditioner::jacobi;
  else if (pre == "none") s.cg.preconditioner = Preconditioner::none;
  else fail(p + "preconditioner", *t.get("preconditioner"), "expected \"ilu0\", \"jacobi\" or \"none\"");
}

void parse_output(const toml::table& t, const std::filesystem::path& base, RunConfig& cfg) {
  const std::string p = "output.";
  reject_unknown(t, p, {"dir", "timing_repeats", "monitor_energy"});
  const std::filesystem::path dir = get_string(t, p, "dir", cfg.output.dir.string());
  cfg.output.dir = dir.is_absolute() ? dir : base / dir;
  cfg.output.timing_repeats = get_count(t, p, "timing_repeats", cfg.output.timing_repeats);
  cfg.output.monitor_energy = get_bool(t, p, "monitor_energy", cfg.output.monitor_energy);
}

}  // namespace

SchemeSpec make_scheme(const SchemeConfig& config, std::string_view name, SplitMode split) {
  SchemeSpec s;
  if (name == "Im1") s = SchemeSpec::im1(config.theta);
  else if (name == "ImEx1") s = SchemeSpec::imex1(config.theta, split);
  else if (name == "Im2") s = SchemeSpec::im2(config.mu, config.sigma);
  else if (name == "ImEx2") s = SchemeSpec::imex2(config.mu, config.sigma, split);
  else return SchemeSpec::preset(name, split, config.cnlf_sigma);
  s.name = std::string(name);
  return s;
}

RunConfig parse_config_string(std::string_view text, const std::filesystem::path& base_dir,
                              std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    const std::size_t line = e.source().begin.line;
    throw ParseError("", line, "syntax error (line " + std::to_string(line) + "): " + std::string(e.description()));
  }
  if (root.empty()) {
    throw ParseError("geometry.file", 0, "empty configuration; required keys: geometry.file, [[continuum]] (name, c, k)");
  }
  reject_unknown(root, "", {"geometry", "continuum", "exchange", "well", "time", "schemes", "nlmc", "solver", "output"});

  RunConfig cfg;
  const toml::table* g = subtable(root, "geometry");
  if (g == nullptr) throw ParseError("geometry.file", 0, "missing required key geometry.file");
  parse_geometry(*g, base_dir, cfg);
  const toml::node* cont = root.get("continuum");
  if (cont == nullptr) throw ParseError("continuum", 0, "missing required [[continuum]] tables");
  parse_continua(*cont, cfg);
  if (const toml::table* t = subtable(root, "exchange")) parse_exchange(*t, cfg);
  const toml::table* well_table = subtable(root, "well");
  if (well_table) parse_well(*well_table, cfg);
  if (const toml::table* t = subtable(root, "time")) parse_time(*t, cfg);
  if (const toml::table* t = subtable(root, "schemes")) parse_schemes(*t, cfg);
  if (const toml::table* t = subtable(root, "nlmc")) {
    reject_unknown(*t, "nlmc.", {"layers", "stiffness"});
    cfg.layers = get_count(*t, "nlmc.", "layers", cfg.layers);
    if (cfg.layers > 5) fail("nlmc.layers", *t->get("layers"), "supported range is 1 to 5");
    const std::string stiffness = get_string(*t, "nlmc.", "stiffness", "normalized");
    if (stiffness == "conservative") cfg.nlmc_stiffness = CoarseStiffness::conservative;
    else if (stiffness == "galerkin") cfg.nlmc_stiffness = CoarseStiffness::galerkin;
    else if (stiffness == "normalized") cfg.nlmc_stiffness = CoarseStiffness::normalized;
    else fail("nlmc.stiffness", *t->get("stiffness"), "expected \"normalized\", \"conservative\" or \"galerkin\"");
  }
  if (const toml::table* t = subtable(root, "solver")) parse_solver(*t, cfg);
  if (const toml::table* t = subtable(root, "output")) parse_output(*t, base_dir, cfg);
  else cfg.output.dir = base_dir / cfg.output.dir;

  if (cfg.well.enabled) {
    const auto target = std::find_if(cfg.continua.begin(), cfg.continua.end(), [&](const ContinuumSpec& c) {
      return cfg.well.continuum.empty() ? c.kind == ContinuumKind::fracture : c.name == cfg.well.continuum;
    });
    if (target == cfg.continua.end() && !well_table) {
      // default well with nothing to attach to
      cfg.well.enabled = false;
      return cfg;
    }
    if (target == cfg.continua.end()) {
      throw ParseError("well.continuum", 0, "the well needs a fracture continuum or an existing continuum name");
    }
    cfg.well.continuum = target->name;
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config_string(text.str(), base, path.string());
}

}  // namespace mcflow

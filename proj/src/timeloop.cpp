#include "mcflow/timeloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace mcflow {

SplitMode parse_split(std::string_view name) {
  if (name == "D" || name == "d") return SplitMode::d;
  if (name == "L" || name == "l") return SplitMode::l;
  if (name == "U" || name == "u") return SplitMode::u;
  throw std::invalid_argument("unknown split mode '" + std::string(name) + "' (expected D, L or U)");
}

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::d: return "D";
    case SplitMode::l: return "L";
    case SplitMode::u: return "U";
  }
  return "?";
}

SchemeSpec SchemeSpec::im1(double theta) {
  SchemeSpec s;
  s.family = SchemeFamily::im1;
  s.theta = theta;
  return s;
}

SchemeSpec SchemeSpec::imex1(double theta, SplitMode split) {
  SchemeSpec s = im1(theta);
  s.family = SchemeFamily::imex1;
  s.split = split;
  return s;
}

SchemeSpec SchemeSpec::im2(double mu, double sigma) {
  SchemeSpec s;
  s.family = SchemeFamily::im2;
  s.mu = mu;
  s.sigma = sigma;
  return s;
}

SchemeSpec SchemeSpec::imex2(double mu, double sigma, SplitMode split) {
  SchemeSpec s = im2(mu, sigma);
  s.family = SchemeFamily::imex2;
  s.split = split;
  return s;
}

SchemeSpec SchemeSpec::preset(std::string_view name, SplitMode split, double cnlf_sigma) {
  SchemeSpec s;
  if (name == "Im1") s = im1();
  else if (name == "ImEx1") s = imex1(1.0, split);
  else if (name == "Im2") s = im2();
  else if (name == "ImEx2") s = imex2(1.5, 0.0, split);
  else if (name == "CN") s = im2(1.0, 0.0);
  else if (name == "BDF2") s = im2(1.5, 0.0);
  else if (name == "LF") s = im2(0.5, 0.0);
  else if (name == "CNAB") s = imex2(1.0, 0.0, split);
  else if (name == "SBDF") s = imex2(1.5, 0.0, split);
  else if (name == "CNLF") s = imex2(0.5, cnlf_sigma, split);
  else throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
  s.name = std::string(name);
  return s;
}

bool SchemeSpec::parameters_stable() const noexcept {
  if (!is_three_level()) return theta >= 0.5;
  return mu >= 0.5 && sigma >= (1.0 - mu) / 2.0;
}

std::string SchemeSpec::label() const {
  if (!name.empty()) return name;
  std::ostringstream out;
  switch (family) {
    case SchemeFamily::im1: out << "Im1(theta=" << theta << ")"; break;
    case SchemeFamily::imex1: out << "ImEx1(theta=" << theta << ")"; break;
    case SchemeFamily::im2: out << "Im2(mu=" << mu << ",sigma=" << sigma << ")"; break;
    case SchemeFamily::imex2: out << "ImEx2(mu=" << mu << ",sigma=" << sigma << ")"; break;
  }
  return out.str();
}

SplitOperator split_operator(const BlockOperator& op, SplitMode mode) {
  const std::size_t l = op.continuum_count();
  SplitOperator s;
  s.mode = mode;
  s.a1.assign(l, std::vector<CsrMatrix>(l));
  s.a2.assign(l, std::vector<CsrMatrix>(l));
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const bool implicit = mode == SplitMode::d ? i == j : mode == SplitMode::l ? j <= i : j >= i;
      const CsrMatrix zero(op.size(i), op.size(j));
      s.a1[i][j] = implicit ? op.block(i, j) : zero;
      s.a2[i][j] = implicit ? zero : op.block(i, j);
    }
  }
  s.order.resize(l);
  for (std::size_t i = 0; i < l; ++i) s.order[i] = mode == SplitMode::u ? l - 1 - i : i;
  return s;
}

SimulationState SimulationState::initial(Vector u0) {
  SimulationState s;
  s.u = std::move(u0);
  return s;
}

namespace {

// (a M + b A_impl) u+ = M/tau (m0 u + m1 u-) - A_impl (c0 u + c1 u-) - A2 (d0 u + d1 u-) + F
struct Coefficients {
  double a = 0, b = 0, m0 = 0, m1 = 0, c0 = 0, c1 = 0, d0 = 0, d1 = 0;
};

Coefficients coefficients(const SchemeSpec& s, double tau) {
  Coefficients k;
  if (!s.is_three_level()) {
    k.a = 1.0 / tau;
    k.b = s.theta;
    k.m0 = 1.0;
    k.c0 = 1.0 - s.theta;
    k.d0 = s.is_imex() ? 1.0 : 0.0;
  } else {
    k.a = s.mu / tau;
    k.b = s.sigma + s.mu - 0.5;
    k.m0 = 2.0 * s.mu - 1.0;
    k.m1 = 1.0 - s.mu;
    k.c0 = 1.5 - s.mu - 2.0 * s.sigma;
    k.c1 = s.sigma;
    if (s.is_imex()) {
      k.d0 = s.mu + 0.5;
      k.d1 = -(s.mu - 0.5);
    }
  }
  return k;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_converged(const SolveStats& stats, const std::string& what) {
  if (!stats.converged) {
    throw StepFailure(what + ": CG stopped after " + std::to_string(stats.iterations) +
                          " iterations with relative residual " + std::to_string(stats.relative_residual),
                      stats);
  }
}

// a M + b A as one matrix.
CsrMatrix shifted(const CsrMatrix& a, std::span<const double> mass, double ca, double cb) {
  Vector d(mass.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = ca * mass[i];
  return a.scaled(cb).with_diagonal_added(d);
}

}  // namespace

struct Stepper::Impl {
  SchemeSpec scheme;
  double tau = 0.0;
  Coefficients k;
  std::vector<std::size_t> offsets;
  Vector mass;
  Vector rhs;
  CsrMatrix a_impl;  // A (coupled) or A1
  CsrMatrix a2;      // empty for coupled schemes
  bool has_a2 = false;

  // Coupled solve.
  std::unique_ptr<CsrMatrix> coupled;
  std::unique_ptr<CgSolver> coupled_solver;
  // Per-continuum solves for ImEx.
  std::vector<std::size_t> order;
  BlockGrid a1_blocks;
  std::vector<std::unique_ptr<CsrMatrix>> diag;
  std::vector<std::unique_ptr<CgSolver>> diag_solvers;
  // Global A for the backward Euler startup of three-level schemes.
  CsrMatrix a_full;
  CgOptions cg;

  void solve_implicit(std::span<const double> r, Vector& x, StepReport& report) const {
    if (!scheme.is_imex()) {
      const SolveStats st = coupled_solver->solve(r, x);
      report.iterations.push_back(static_cast<std::size_t>(st.iterations));
      require_converged(st, "coupled implicit solve");
      return;
    }
    const std::size_t l = order.size();
    report.iterations.assign(l, 0);
    for (std::size_t alpha : order) {
      const std::size_t n = offsets[alpha + 1] - offsets[alpha];
      Vector ra(r.begin() + static_cast<std::ptrdiff_t>(offsets[alpha]),
                r.begin() + static_cast<std::ptrdiff_t>(offsets[alpha + 1]));
      for (std::size_t beta = 0; beta < l; ++beta) {
        if (beta == alpha || a1_blocks[alpha][beta].nnz() == 0) continue;
        const std::span<const double> xb(x.data() + offsets[beta], offsets[beta + 1] - offsets[beta]);
        spmv_into(a1_blocks[alpha][beta], xb, ra, -k.b, 1.0);
      }
      const std::span<double> xa(x.data() + offsets[alpha], n);
      const SolveStats st = diag_solvers[alpha]->solve(ra, xa);
      report.iterations[alpha] = static_cast<std::size_t>(st.iterations);
      require_converged(st, "continuum " + std::to_string(alpha) + " implicit solve");
    }
  }
};

Stepper::Stepper(const BlockOperator& op, SchemeSpec scheme, double tau, CgOptions cg)
    : impl_(std::make_unique<Impl>()) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("stepper: tau must be positive");
  Impl& m = *impl_;
  m.scheme = std::move(scheme);
  m.tau = tau;
  m.k = coefficients(m.scheme, tau);
  m.offsets = op.offsets();
  m.mass = op.global_mass();
  m.rhs = op.global_rhs();
  m.cg = cg;
  if (m.scheme.is_three_level()) m.a_full = op.global_matrix();
  if (!m.scheme.is_imex()) {
    m.a_impl = op.global_matrix();
    m.coupled = std::make_unique<CsrMatrix>(shifted(m.a_impl, m.mass, m.k.a, m.k.b));
    m.coupled_solver = std::make_unique<CgSolver>(*m.coupled, cg);
  } else {
    SplitOperator split = split_operator(op, m.scheme.split);
    m.order = split.order;
    m.a_impl = compose_blocks(split.a1);
    m.a2 = compose_blocks(split.a2);
    m.has_a2 = m.a2.nnz() > 0;
    for (std::size_t alpha = 0; alpha < op.continuum_count(); ++alpha) {
      m.diag.push_back(std::make_unique<CsrMatrix>(shifted(split.a1[alpha][alpha], op.mass(alpha), m.k.a, m.k.b)));
      m.diag_solvers.push_back(std::make_unique<CgSolver>(*m.diag.back(), cg));
    }
    m.a1_blocks = std::move(split.a1);
  }
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

const SchemeSpec& Stepper::scheme() const noexcept { return impl_->scheme; }
double Stepper::tau() const noexcept { return impl_->tau; }

StepReport Stepper::step(SimulationState& state) const {
  const Impl& m = *impl_;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = m.mass.size();
  if (state.u.size() != n) throw std::invalid_argument("step: state size does not match the operator");
  const bool three = m.scheme.is_three_level();
  if (three && (!state.has_prev || state.u_prev.size() != n)) {
    throw StateError("three-level step needs u^{n-1}; bootstrap the first step");
  }
  const Coefficients& k = m.k;
  const auto prev = [&](std::size_t i) { return three ? state.u_prev[i] : 0.0; };

  Vector r(n, 0.0);
  if (k.c0 != 0.0 || k.c1 != 0.0) {
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = k.c0 * state.u[i] + k.c1 * prev(i);
    spmv_into(m.a_impl, w, r, -1.0, 0.0);
  }
  if (m.has_a2) {
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = k.d0 * state.u[i] + k.d1 * prev(i);
    spmv_into(m.a2, w, r, -1.0, 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    r[i] += m.mass[i] / m.tau * (k.m0 * state.u[i] + k.m1 * prev(i)) + m.rhs[i];
  }

  StepReport report;
  Vector x = state.u;
  m.solve_implicit(r, x, report);
  state.u_prev = std::move(state.u);
  state.u = std::move(x);
  state.has_prev = true;
  state.step += 1;
  state.time += m.tau;
  report.step = state.step;
  report.seconds = seconds_since(t0);
  return report;
}

StepReport Stepper::bootstrap(SimulationState& state, std::size_t substeps) const {
  const Impl& m = *impl_;
  const auto t0 = std::chrono::steady_clock::now();
  if (substeps == 0) throw std::invalid_argument("bootstrap: substeps must be at least 1");
  const std::size_t n = m.mass.size();
  if (state.u.size() != n) throw std::invalid_argument("bootstrap: state size does not match the operator");
  const double h = m.tau / static_cast<double>(substeps);
  const CsrMatrix& a = m.scheme.is_three_level() ? m.a_full : m.a_impl;
  if (m.scheme.is_imex() && !m.scheme.is_three_level()) {
    throw std::logic_error("bootstrap: two-level ImEx steppers do not keep the coupled matrix");
  }
  const CsrMatrix sys = shifted(a, m.mass, 1.0 / h, 1.0);
  const CgSolver solver(sys, m.cg);

  StepReport report;
  report.iterations.assign(1, 0);
  Vector u = state.u;
  Vector r(n);
  for (std::size_t s = 0; s < substeps; ++s) {
    for (std::size_t i = 0; i < n; ++i) r[i] = m.mass[i] / h * u[i] + m.rhs[i];
    const SolveStats st = solver.solve(r, u);
    report.iterations[0] += static_cast<std::size_t>(st.iterations);
    require_converged(st, "startup backward Euler solve");
  }
  state.u_prev = std::move(state.u);
  state.u = std::move(u);
  state.has_prev = true;
  state.step += 1;
  state.time += m.tau;
  report.step = state.step;
  report.seconds = seconds_since(t0);
  return report;
}

StepReport step_two_level(SimulationState& state, const BlockOperator& op, const SchemeSpec& scheme, double tau,
                          const CgOptions& cg) {
  if (scheme.is_three_level()) throw std::invalid_argument("step_two_level: scheme is three-level");
  return Stepper(op, scheme, tau, cg).step(state);
}

StepReport step_three_level(SimulationState& state, const BlockOperator& op, const SchemeSpec& scheme, double tau,
                            const CgOptions& cg) {
  if (!scheme.is_three_level()) throw std::invalid_argument("step_three_level: scheme is two-level");
  if (!state.has_prev) throw StateError("three-level step needs u^{n-1}; bootstrap the first step");
  return Stepper(op, scheme, tau, cg).step(state);
}

StepReport bootstrap_first_step(SimulationState& state, const BlockOperator& op, double tau, std::size_t substeps,
                                const CgOptions& cg) {
  return Stepper(op, SchemeSpec::im1(1.0), tau, cg).bootstrap(state, substeps);
}

std::string to_string(StabilityVerdict verdict) {
  switch (verdict) {
    case StabilityVerdict::holds: return "sufficient-condition-holds";
    case StabilityVerdict::violated: return "violated";
    case StabilityVerdict::not_applicable: return "not-applicable";
  }
  return "?";
}

StabilityReport check_stability(const SchemeSpec& scheme, const SplitOperator* split, double tol) {
  StabilityReport rep;
  if (!scheme.is_imex()) {
    rep.verdict = scheme.parameters_stable() ? StabilityVerdict::holds : StabilityVerdict::violated;
    return rep;
  }
  if (split == nullptr) return rep;
  rep.heuristic = split->mode != SplitMode::d;
  double c1 = 0.0, c2 = 0.0;
  if (scheme.is_three_level()) {
    c1 = scheme.sigma + (scheme.mu - 1.0) / 2.0;
    c2 = scheme.mu / 2.0;
  } else {
    c1 = scheme.theta - 0.5;
    c2 = 0.5;
  }
  const CsrMatrix a1 = compose_blocks(split->a1);
  const CsrMatrix a2 = compose_blocks(split->a2);
  const CsrMatrix s = symmetrize(add(a1, a2, c1, -c2));
  const double scale = std::max(s.max_abs(), a1.max_abs());
  try {
    rep.lambda_min = min_eigenvalue(s, std::max(tol * scale, 1e-300));
  } catch (const NotConvergedError& e) {
    throw NotConvergedError(std::string("stability check: ") + e.what());
  }
  bool ok = *rep.lambda_min >= -tol * scale;
  if (scheme.is_three_level() && scheme.mu < 0.5) ok = false;
  rep.verdict = ok ? StabilityVerdict::holds : StabilityVerdict::violated;
  return rep;
}

double energy_two_level(const CsrMatrix& a, std::span<const double> u) { return dot(u, spmv(a, u)); }

double energy_three_level(const CsrMatrix& a, const CsrMatrix& s, std::span<const double> u1,
                          std::span<const double> u0) {
  if (u1.size() != u0.size()) throw std::invalid_argument("energy: vector size mismatch");
  Vector sum(u1.size()), diff(u1.size());
  for (std::size_t i = 0; i < u1.size(); ++i) {
    sum[i] = u1[i] + u0[i];
    diff[i] = u1[i] - u0[i];
  }
  return 0.25 * dot(sum, spmv(a, sum)) + dot(diff, spmv(s, diff));
}

CsrMatrix energy_matrix(const BlockOperator& op, const SchemeSpec& scheme, double tau) {
  const Vector mass = op.global_mass();
  Vector d(mass.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (scheme.mu - 0.5) / tau * mass[i];
  const double c1 = scheme.sigma + (scheme.mu - 1.0) / 2.0;
  if (!scheme.is_imex()) return op.global_matrix().scaled(c1).with_diagonal_added(d);
  const SplitOperator split = split_operator(op, scheme.split);
  return add(compose_blocks(split.a1), compose_blocks(split.a2), c1, -scheme.mu / 2.0).with_diagonal_added(d);
}

void dump_snapshot(const BlockOperator& op, const std::filesystem::path& dir, std::size_t step,
                   std::span<const double> u) {
  const auto parts = op.split(u);
  for (std::size_t alpha = 0; alpha < parts.size(); ++alpha) {
    write_matrix_market_array(dir / ("u_" + op.continua()[alpha].name + "_" + std::to_string(step) + ".mtx"),
                              parts[alpha]);
  }
}

Trajectory run_transient(const BlockOperator& op, const SchemeSpec& scheme, double tau, std::size_t nt, Vector u0,
                         const TransientOptions& options) {
  if (nt == 0) throw std::invalid_argument("run_transient: N_t must be at least 1");
  if (u0.size() != op.total_size()) throw std::invalid_argument("run_transient: initial state size mismatch");
  const Stepper stepper(op, scheme, tau, options.cg);
  CsrMatrix a, s;
  if (options.monitor_energy) {
    a = op.global_matrix();
    if (scheme.is_three_level()) s = energy_matrix(op, scheme, tau);
  }
  const auto wanted = [&](std::size_t step) {
    return std::find(options.snapshots.begin(), options.snapshots.end(), step) != options.snapshots.end();
  };

  Trajectory traj;
  traj.final_state = SimulationState::initial(std::move(u0));
  SimulationState& state = traj.final_state;
  const auto record = [&](StepReport rep) {
    if (options.monitor_energy) {
      rep.energy = scheme.is_three_level() ? energy_three_level(a, s, state.u, state.u_prev)
                                           : energy_two_level(a, state.u);
    }
    traj.reports.push_back(std::move(rep));
    if (wanted(state.step)) {
      traj.snapshots.push_back({state.step, state.time, state.u});
      if (options.snapshot_dir) dump_snapshot(op, *options.snapshot_dir, state.step, state.u);
    }
  };
  if (wanted(0)) traj.snapshots.push_back({0, 0.0, state.u});

  try {
    for (std::size_t n = 0; n < nt; ++n) {
      if (scheme.is_three_level() && !state.has_prev) {
        record(stepper.bootstrap(state, options.startup_substeps));
      } else {
        record(stepper.step(state));
      }
    }
  } catch (const StepFailure& e) {
    traj.failure = "step " + std::to_string(state.step + 1) + ": " + e.what();
  }
  return traj;
}

}  // namespace mcflow

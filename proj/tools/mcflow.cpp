#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "mcflow/errors.hpp"
#include "mcflow/harness.hpp"

namespace {

std::size_t threads_from_env(std::size_t fallback) {
  const char* env = std::getenv("MCFLOW_THREADS");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0) {
    std::cerr << "warning: ignoring MCFLOW_THREADS='" << env << "'\n";
    return fallback;
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicontinuum flow solver: time-scheme sweeps against a reference run"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t ref_nt = 0;
  std::size_t jobs = 1;
  bool dump = false;
  bool stability = false;

  auto* run = app.add_subcommand("run", "Run the sweep described by a TOML config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--ref-nt", ref_nt, "Reference time steps (overrides time.reference_nt)")
      ->check(CLI::PositiveNumber);
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--dump-snapshots", dump, "Write snapshot vectors as Matrix Market files");
  run->add_flag("--check-stability", stability, "Evaluate the stability conditions of every scheme");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  mcflow::RunConfig config;
  try {
    config = mcflow::parse_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  mcflow::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (ref_nt > 0) opts.reference_nt = ref_nt;
  opts.jobs = threads_from_env(jobs);
  opts.dump_snapshots = dump;
  opts.check_stability = stability;

  mcflow::CaseReport report;
  try {
    report = mcflow::run_case(config, opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  for (const auto& line : report.stability) std::cout << "stability " << line << '\n';
  for (const auto& r : report.rows) {
    std::printf("%-14s %-2s Nt=%-5zu step=%-5zu", r.scheme.c_str(), r.split.c_str(), r.nt, r.snapshot);
    const auto col = [](const char* name, const std::optional<double>& v) {
      if (v) std::printf(" %s=%.4g", name, *v);
    };
    col("e_h1", r.e_h1);
    col("e_h2", r.e_h2);
    col("e_ms1", r.e_ms1);
    col("e_H1", r.e_H1);
    col("t", r.time_total_s);
    std::printf("\n");
  }
  for (const auto& f : report.failures) std::cerr << "failed: " << f << '\n';
  std::cout << "wrote " << (report.out_dir / "results.csv").string() << '\n';
  return report.failures.empty() ? 0 : 2;
}

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors
//
// aircomp sweep | converge | bench-time | oracle

#include "aircomp/harness.hpp"
#include "aircomp/oracles.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <thread>

using namespace aircomp;

namespace {

struct Common {
  std::string config_path;
  std::string out = "-";
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file");
  cmd->add_option("--out", c.out, "output CSV path ('-' for stdout)");
  cmd->add_option("--workers", c.workers, "worker threads (default: config or 1)")->check(CLI::NonNegativeNumber);
}

ExperimentSpec base_spec(const Common& c) {
  ExperimentSpec spec;
  if (!c.config_path.empty()) load_spec_config_file(c.config_path, spec);
  if (c.workers > 0) spec.workers = c.workers;
  return spec;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  fn(out);
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

int run_sweep_cmd(const Common& c, const std::string& schemes, const std::string& var, const std::string& range,
                  int trials, long long samples, bool per_symbol, int paths) {
  ExperimentSpec spec = base_spec(c);
  spec.schemes = parse_scheme_list(schemes);
  spec.var = parse_sweep_var(var);
  spec.values = parse_range(range);
  spec.trials = trials;
  if (samples >= 0) spec.empirical_samples = samples;
  if (paths > 0) spec.paths = paths;
  spec.per_symbol = per_symbol;
  const auto rows = run_sweep(spec);
  with_output(c.out, [&](std::ostream& o) { write_results(rows, o); });
  return 0;
}

int run_converge_cmd(const Common& c, int rounds, int trials, const std::string& snrs) {
  ExperimentSpec spec = base_spec(c);
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const std::vector<Real> snr_values = snrs.empty() ? std::vector<Real>{spec.config.snr_db()} : parse_range(snrs);
  with_output(c.out, [&](std::ostream& o) {
    o << "snr_db,round,mse,mse_per_cell,trials\n";
    o.precision(17);
    for (const Real snr : snr_values) {
      SystemConfig cfg = spec.config;
      cfg.set_snr_db(snr);
      std::vector<Real> acc(static_cast<std::size_t>(rounds) + 1, 0.0);
      for (int t = 0; t < trials; ++t) {
        RandomStream rng = RandomStream::substream(cfg.seed, static_cast<std::uint64_t>(t));
        const auto ch = draw_channels(cfg, spec.paths, spec.shared_geometry, spec.distinct_paths, rng);
        // fixed round count: no early exit so every trace has the same length
        const auto st = iterate_s3(ch, cfg, S3Options{rounds, 0.0});
        for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += st.mse_trace[std::min(r, st.mse_trace.size() - 1)];
      }
      for (std::size_t r = 0; r < acc.size(); ++r) {
        const Real m = acc[r] / trials;
        o << snr << ',' << r << ',' << m << ',' << m / cfg.frame_size() << ',' << trials << '\n';
      }
    }
  });
  return 0;
}

int run_bench_cmd(const Common& c, const std::string& schemes, const std::string& var, const std::string& range,
                  int realizations, int warmup) {
  ExperimentSpec spec = base_spec(c);
  const auto list = parse_scheme_list(schemes);
  const SweepVar v = parse_sweep_var(var);
  const auto values = parse_range(range);
  with_output(c.out, [&](std::ostream& o) {
    o << "scheme,sweep_var,sweep_value,M,N,U,R,median_ms,mean_ms,realizations\n";
    o.precision(17);
    for (const Real value : values) {
      ExperimentSpec s = spec;
      apply_sweep_value(v, value, s.config, s.paths, s.s3_rounds);
      s.config.validate();
      for (const Scheme sch : list) {
        const auto st = measure_runtime(sch, s, realizations, warmup);
        o << scheme_name(sch) << ',' << sweep_var_name(v) << ',' << value << ',' << s.config.M << ',' << s.config.N
          << ',' << s.config.U << ',' << s.paths << ',' << st.median_ms << ',' << st.mean_ms << ',' << st.samples
          << '\n';
      }
    }
  });
  return 0;
}

int run_oracle_cmd(const std::string& check, int instances, long long samples, std::uint64_t seed, int workers) {
  std::vector<OracleReport> reports;
  const bool all = check == "all";
  if (all || check == "eta") reports.push_back(check_eta(instances, seed));
  if (all || check == "zeta") reports.push_back(check_zeta(instances, seed));
  if (all || check == "equivalence") reports.push_back(check_equivalence(instances, seed));
  if (all || check == "empirical") {
    reports.push_back(check_empirical(std::min(instances, 20), samples, seed, workers));
  }
  if (reports.empty()) throw std::invalid_argument("unknown check '" + check + "'");
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " instances=" << r.instances << " worst=" << r.worst
              << " tol=" << r.tolerance;
    if (!r.detail.empty()) std::cout << " :: " << r.detail;
    std::cout << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OTFS over-the-air computation simulator"};
  app.require_subcommand(1);

  Common common;
  std::string schemes = "s1";
  std::string var = "snr_db";
  std::string range = "10";
  int trials = 100;
  long long samples = -1;
  bool per_symbol = false;
  int paths = 0;

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo MSE sweep");
  add_common(sweep, common);
  sweep->add_option("--scheme", schemes, "comma list of s1,s2,s3,b1,b2,b3,b4")->required();
  sweep->add_option("--var", var, "snr_db|devices|paths|iterations|frame_size|k_max|speed_kmh")->required();
  sweep->add_option("--range", range, "a:step:b or v1,v2,...")->required();
  sweep->add_option("--trials", trials, "channel realizations per point")->check(CLI::PositiveNumber);
  sweep->add_option("--empirical-samples", samples, "cell samples per trial for the empirical MSE (0: off)");
  sweep->add_option("--paths", paths, "paths per device (overrides config)");
  sweep->add_flag("--per-symbol", per_symbol, "divide MSE by U^2");

  int rounds = 15;
  int conv_trials = 1;
  std::string snrs;
  auto* converge = app.add_subcommand("converge", "S3 MSE per iteration");
  add_common(converge, common);
  converge->add_option("--rounds", rounds, "iterations");
  converge->add_option("--trials", conv_trials, "realizations averaged per SNR");
  converge->add_option("--snr-db", snrs, "SNR list or range (default: config)");

  std::string bench_schemes = "s1,s2,s3";
  int realizations = 5;
  int warmup = 3;
  auto* bench = app.add_subcommand("bench-time", "per-realization solve time");
  add_common(bench, common);
  bench->add_option("--scheme", bench_schemes, "comma list of schemes");
  bench->add_option("--var", var, "frame_size|paths|...")->required();
  bench->add_option("--range", range, "a:step:b or v1,v2,...")->required();
  bench->add_option("--realizations", realizations, "timed realizations per point")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "discarded runs (at least 3)");

  std::string check = "all";
  int instances = 100;
  long long oracle_samples = 200000;
  std::uint64_t seed = 1;
  int oracle_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* oracle = app.add_subcommand("oracle", "brute-force validation suites");
  oracle->add_option("--check", check, "eta|zeta|equivalence|empirical|all");
  oracle->add_option("--instances", instances, "random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--samples", oracle_samples, "empirical cell samples");
  oracle->add_option("--seed", seed, "seed");
  oracle->add_option("--workers", oracle_workers, "threads for the empirical check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sweep) return run_sweep_cmd(common, schemes, var, range, trials, samples, per_symbol, paths);
    if (*converge) return run_converge_cmd(common, rounds, conv_trials, snrs);
    if (*bench) return run_bench_cmd(common, bench_schemes, var, range, realizations, warmup);
    if (*oracle) return run_oracle_cmd(check, instances, oracle_samples, seed, oracle_workers);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::logic_error& e) {
    // invalid_argument derives from logic_error: a usage problem
    if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

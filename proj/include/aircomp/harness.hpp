// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/baselines.hpp"
#include "aircomp/dd_core.hpp"
#include "aircomp/power_control.hpp"
#include "aircomp/scheme_s2.hpp"
#include "aircomp/scheme_s3.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aircomp {

enum class Scheme { S1, S2, S3, B1, B2, B3, B4 };

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);
std::vector<Scheme> parse_scheme_list(std::string_view csv);

enum class SweepVar { SnrDb, Devices, Paths, Iterations, FrameSize, KMax, SpeedKmh };

std::string_view sweep_var_name(SweepVar var);
SweepVar parse_sweep_var(std::string_view name);

/// "a:step:b" (inclusive) or "v1,v2,...". Must be non-empty and strictly monotone.
std::vector<Real> parse_range(std::string_view text);

struct ExperimentSpec {
  std::vector<Scheme> schemes{Scheme::S1};
  SweepVar var = SweepVar::SnrDb;
  std::vector<Real> values{10.0};
  int trials = 100;
  SystemConfig config;
  SymbolAlphabet alphabet = SymbolAlphabet::Rademacher;
  int s3_rounds = 10;
  int paths = 4;                ///< R per device
  bool shared_geometry = true;  ///< required by S2
  bool distinct_paths = false;  ///< draw (delay, Doppler) without replacement
  int workers = 1;
  /// Cell samples per trial for the empirical MSE; 0 skips it.
  long long empirical_samples = 0;
  /// Divide every MSE by U^2 (per-symbol view of the averaged function).
  bool per_symbol = false;

  void validate() const;
};

/// Applies one sweep value to a copy of the spec's config and path count.
void apply_sweep_value(SweepVar var, Real value, SystemConfig& config, int& paths, int& s3_rounds);

/// Reads the JSON config keys (M, N, U, delta_f_hz, carrier_hz, p_s,
/// sigma2 | snr_db, l_max, k_max, seed, symbol_alphabet, s3_rounds,
/// shared_geometry, paths, distinct_paths, workers, empirical_samples) into
/// `spec`. Unknown keys are rejected.
void load_spec_config(const nlohmann::json& j, ExperimentSpec& spec);
void load_spec_config_file(const std::string& path, ExperimentSpec& spec);

struct ResultRow {
  std::string scheme;
  std::string sweep_var;
  Real sweep_value = 0.0;
  int M = 0;
  int N = 0;
  int U = 0;
  int R = 0;
  int trials = 0;
  Real mse_analytic = 0.0;
  Real mse_empirical = 0.0;  ///< NaN when not measured
  Real mse_std = 0.0;        ///< across trials, of the analytic value
  Real runtime_ms = 0.0;
  std::uint64_t seed = 0;
};

/// A scheme solved for one realization.
struct SolvedScheme {
  Scheme scheme = Scheme::S1;
  PowerPolicy s1;
  std::optional<S2Design> s2;
  std::vector<CMatrix> H;
  PrecoderFilterState s3;
  BaselineDesign baseline;
  /// Per-cell analytic MSE, un-normalized.
  Real mse = 0.0;
};

SolvedScheme solve_scheme(Scheme scheme, const ChannelRealization& channels, const SystemConfig& config,
                          int s3_rounds = 10);

/// Mean per-cell squared error over fresh symbols and noise, on the same
/// scale as SolvedScheme::mse. At least `samples` cells are drawn.
Real empirical_mse(const SolvedScheme& solved, const ChannelRealization& channels, const SystemConfig& config,
                   long long samples, SymbolAlphabet alphabet, RandomStream& rng);

ChannelRealization draw_channels(const SystemConfig& config, int paths, bool shared, bool distinct,
                                 RandomStream& rng);

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec);

struct EtaSearch {
  Real eta = 0.0;
  Real mse = 0.0;
};

/// Brute-force S1 check: log grid of `grid` points over
/// [1e-4 eta_ref, 1e4 eta_ref] (eta_ref = interior optimum with every device
/// at full power), clamped optimal powers at each eta.
EtaSearch grid_search_eta(const ChannelRealization& channels, const SystemConfig& config, int grid = 10000);
EtaSearch grid_search_eta(const AlignmentProblem& problem, int grid = 10000);

struct RuntimeStats {
  Real median_ms = 0.0;
  Real mean_ms = 0.0;
  int samples = 0;
};

/// Per-realization solve time (channel generation excluded), after
/// `warmup` discarded runs.
RuntimeStats measure_runtime(Scheme scheme, const ExperimentSpec& spec, int realizations, int warmup = 3);

inline constexpr std::string_view kCsvHeader =
    "scheme,sweep_var,sweep_value,M,N,U,R,trials,mse_analytic,mse_empirical,mse_std,runtime_ms,seed";

void emit_results(const std::vector<ResultRow>& rows, const std::string& path);
void write_results(const std::vector<ResultRow>& rows, std::ostream& out);
std::vector<ResultRow> parse_results(std::istream& in);
std::vector<ResultRow> read_results(const std::string& path);

}  // namespace aircomp

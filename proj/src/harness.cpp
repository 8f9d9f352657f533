// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/harness.hpp"

#include "aircomp/otfs_io.hpp"
#include "aircomp/scheme_s1.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace aircomp {

namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 7> kSchemes{{
    {Scheme::S1, "s1"},
    {Scheme::S2, "s2"},
    {Scheme::S3, "s3"},
    {Scheme::B1, "b1"},
    {Scheme::B2, "b2"},
    {Scheme::B3, "b3"},
    {Scheme::B4, "b4"},
}};

constexpr std::array<std::pair<SweepVar, std::string_view>, 7> kVars{{
    {SweepVar::SnrDb, "snr_db"},
    {SweepVar::Devices, "devices"},
    {SweepVar::Paths, "paths"},
    {SweepVar::Iterations, "iterations"},
    {SweepVar::FrameSize, "frame_size"},
    {SweepVar::KMax, "k_max"},
    {SweepVar::SpeedKmh, "speed_kmh"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

Real parse_number(std::string_view text) {
  const std::string s = trim(text);
  std::size_t used = 0;
  Real v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

int as_int(Real v, std::string_view what) {
  const Real r = std::round(v);
  if (std::abs(r - v) > 1e-9) throw std::invalid_argument(std::string(what) + " must be an integer");
  return static_cast<int>(r);
}

std::optional<BaselineKind> baseline_kind(Scheme s) {
  switch (s) {
    case Scheme::B1: return BaselineKind::MmsePrecodeNormalized;
    case Scheme::B2: return BaselineKind::MmsePrecodePowerControl;
    case Scheme::B3: return BaselineKind::PrecoderOnly;
    case Scheme::B4: return BaselineKind::FilterOnly;
    default: return std::nullopt;
  }
}

std::size_t scheme_index(Scheme s) { return static_cast<std::size_t>(s); }

constexpr std::uint64_t kEmpiricalSalt = 0xa5a5f00dc0ffee11ULL;

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  for (const auto& [s, n] : kSchemes) {
    if (s == scheme) return n;
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  std::string n = trim(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& [s, str] : kSchemes) {
    if (str == n) return s;
  }
  throw std::invalid_argument("unknown scheme '" + n + "' (expected s1|s2|s3|b1|b2|b3|b4)");
}

std::vector<Scheme> parse_scheme_list(std::string_view csv) {
  std::vector<Scheme> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = std::min(csv.find(',', start), csv.size());
    out.push_back(parse_scheme(csv.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::string_view sweep_var_name(SweepVar var) {
  for (const auto& [v, n] : kVars) {
    if (v == var) return n;
  }
  return "?";
}

SweepVar parse_sweep_var(std::string_view name) {
  const std::string n = trim(name);
  for (const auto& [v, str] : kVars) {
    if (str == n) return v;
  }
  throw std::invalid_argument("unknown sweep variable '" + n + "'");
}

std::vector<Real> parse_range(std::string_view text) {
  std::vector<Real> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<Real> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = std::min(text.find(':', start), text.size());
      parts.push_back(parse_number(text.substr(start, end - start)));
      start = end + 1;
    }
    if (parts.size() != 3) throw std::invalid_argument("range must be a:step:b");
    const Real a = parts[0], step = parts[1], b = parts[2];
    if (step == 0 || (b - a) * step < 0) throw std::invalid_argument("range step does not reach the end point");
    const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
    if (n > 1'000'000) throw std::invalid_argument("range has too many points");
    for (long long i = 0; i <= n; ++i) out.push_back(a + static_cast<Real>(i) * step);
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = std::min(text.find(',', start), text.size());
      out.push_back(parse_number(text.substr(start, end - start)));
      start = end + 1;
    }
  }
  if (out.empty()) throw std::invalid_argument("empty range");
  for (std::size_t i = 2; i < out.size(); ++i) {
    if ((out[i] - out[i - 1]) * (out[1] - out[0]) <= 0) throw std::invalid_argument("range must be strictly monotone");
  }
  if (out.size() == 2 && out[0] == out[1]) throw std::invalid_argument("range must be strictly monotone");
  return out;
}

void ExperimentSpec::validate() const {
  if (schemes.empty()) throw std::invalid_argument("no schemes selected");
  if (values.empty()) throw std::invalid_argument("empty sweep range");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (paths < 1) throw std::invalid_argument("paths must be >= 1");
  if (empirical_samples < 0) throw std::invalid_argument("empirical_samples must be >= 0");
  const bool wants_s2 = std::find(schemes.begin(), schemes.end(), Scheme::S2) != schemes.end();
  if (wants_s2 && !shared_geometry) {
    throw std::invalid_argument("S2 needs shared_geometry = true");
  }
  for (const Real v : values) {
    SystemConfig c = config;
    int r = paths;
    int rounds = s3_rounds;
    apply_sweep_value(var, v, c, r, rounds);
    c.validate();
    if (wants_s2 && c.l_max > c.M - 2) throw std::invalid_argument("S2 needs l_max <= M - 2");
  }
}

void apply_sweep_value(SweepVar var, Real value, SystemConfig& config, int& paths, int& s3_rounds) {
  switch (var) {
    case SweepVar::SnrDb: config.set_snr_db(value); break;
    case SweepVar::Devices: config.U = as_int(value, "devices"); break;
    case SweepVar::Paths: paths = as_int(value, "paths"); break;
    case SweepVar::Iterations: s3_rounds = as_int(value, "iterations"); break;
    case SweepVar::FrameSize: {
      const int mn = as_int(value, "frame_size");
      if (mn < 4) throw std::invalid_argument("frame_size must be >= 4");
      const int n = 1 << (static_cast<int>(std::floor(std::log2(static_cast<Real>(mn)))) / 2);
      if (mn % n != 0) throw std::invalid_argument("frame_size must be divisible by " + std::to_string(n));
      config.N = n;
      config.M = mn / n;
      config.l_max = std::min(config.l_max, config.M - 2);
      config.k_max = std::min(config.k_max, config.N / 2);
      break;
    }
    case SweepVar::KMax: config.k_max = as_int(value, "k_max"); break;
    case SweepVar::SpeedKmh:
      config.k_max = std::min(doppler_index_from_speed(value / 3.6, config), config.N / 2);
      break;
  }
}

void load_spec_config(const nlohmann::json& j, ExperimentSpec& spec) {
  static const std::set<std::string> known{
      "M",       "N",       "U",   "delta_f_hz", "carrier_hz", "p_s", "sigma2", "snr_db", "l_max",
      "k_max",   "seed",    "symbol_alphabet",   "s3_rounds",  "shared_geometry",  "paths",  "distinct_paths",
      "workers", "empirical_samples"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  if (j.contains("sigma2") && j.contains("snr_db")) throw std::invalid_argument("give sigma2 or snr_db, not both");
  auto& c = spec.config;
  try {
    if (j.contains("M")) c.M = j["M"].get<int>();
    if (j.contains("N")) c.N = j["N"].get<int>();
    if (j.contains("U")) c.U = j["U"].get<int>();
    if (j.contains("delta_f_hz")) c.delta_f = j["delta_f_hz"].get<Real>();
    if (j.contains("carrier_hz")) c.carrier_freq = j["carrier_hz"].get<Real>();
    if (j.contains("p_s")) c.p_s = j["p_s"].get<Real>();
    if (j.contains("sigma2")) c.sigma2 = j["sigma2"].get<Real>();
    if (j.contains("l_max")) c.l_max = j["l_max"].get<int>();
    if (j.contains("k_max")) c.k_max = j["k_max"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("snr_db")) c.set_snr_db(j["snr_db"].get<Real>());
    if (j.contains("symbol_alphabet")) {
      const auto a = j["symbol_alphabet"].get<std::string>();
      if (a == "rademacher") {
        spec.alphabet = SymbolAlphabet::Rademacher;
      } else if (a == "real_gaussian") {
        spec.alphabet = SymbolAlphabet::RealGaussian;
      } else {
        throw std::invalid_argument("symbol_alphabet must be rademacher or real_gaussian");
      }
    }
    if (j.contains("s3_rounds")) spec.s3_rounds = j["s3_rounds"].get<int>();
    if (j.contains("shared_geometry")) spec.shared_geometry = j["shared_geometry"].get<bool>();
    if (j.contains("paths")) spec.paths = j["paths"].get<int>();
    if (j.contains("distinct_paths")) spec.distinct_paths = j["distinct_paths"].get<bool>();
    if (j.contains("workers")) spec.workers = j["workers"].get<int>();
    if (j.contains("empirical_samples")) spec.empirical_samples = j["empirical_samples"].get<long long>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
}

void load_spec_config_file(const std::string& path, ExperimentSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  load_spec_config(j, spec);
}

ChannelRealization draw_channels(const SystemConfig& config, int paths, bool shared, bool distinct,
                                 RandomStream& rng) {
  if (shared) return generate_shared_geometry_channels(config, paths, rng, distinct);
  const std::vector<int> counts(static_cast<std::size_t>(config.U), paths);
  return generate_channels(config, counts, rng, distinct);
}

SolvedScheme solve_scheme(Scheme scheme, const ChannelRealization& channels, const SystemConfig& config,
                          int s3_rounds) {
  SolvedScheme s;
  s.scheme = scheme;
  const Real mn = config.frame_size();
  switch (scheme) {
    case Scheme::S1:
      s.s1 = solve_s1(channels, config);
      s.mse = analytic_mse_s1(s.s1, channels, config);
      break;
    case Scheme::S2:
      s.s2.emplace(channels, config);
      s.mse = s.s2->total_mse();
      break;
    case Scheme::S3:
      s.H = channel_matrices(channels, config);
      s.s3 = iterate_s3(s.H, config, S3Options{s3_rounds, 1e-8});
      s.mse = s.s3.mse_trace.back() / mn;
      break;
    default:
      s.H = channel_matrices(channels, config);
      s.baseline = design_baseline(*baseline_kind(scheme), s.H, config);
      s.mse = s.baseline.mse / mn;
      break;
  }
  return s;
}

Real empirical_mse(const SolvedScheme& solved, const ChannelRealization& channels, const SystemConfig& config,
                   long long samples, SymbolAlphabet alphabet, RandomStream& rng) {
  const int M = config.M;
  const int N = config.N;
  const int U = config.U;
  const long long cells = solved.scheme == Scheme::S2 ? static_cast<long long>(solved.s2->data_rows()) * N
                                                      : static_cast<long long>(M) * N;
  const long long frames = std::max<long long>(1, (samples + cells - 1) / cells);
  Real acc = 0.0;
  std::vector<DDFrame> x(static_cast<std::size_t>(U));
  for (long long f = 0; f < frames; ++f) {
    for (auto& xf : x) xf = random_symbols(M, N, alphabet, rng);
    switch (solved.scheme) {
      case Scheme::S1: {
        const DDFrame w = random_noise(M, N, config.sigma2, rng);
        const auto out = estimate_s1(x, channels, solved.s1, &w, config);
        acc += static_cast<Real>(U) * U * (out.estimate.grid() - out.target.grid()).squaredNorm() / (M * N);
        break;
      }
      case Scheme::S2: {
        const int D = solved.s2->data_rows();
        for (auto& xf : x) xf.grid().bottomRows(M - D).setZero();
        const DDFrame w = random_noise(M, N, config.sigma2, rng);
        acc += run_s2(*solved.s2, x, channels, &w, config).total_mse;
        break;
      }
      default: {
        std::vector<CVector> xv;
        CVector target = CVector::Zero(M * N);
        for (const auto& xf : x) {
          xv.push_back(xf.vectorize(Vectorization::ColMajor));
          target += xv.back();
        }
        CVector est;
        if (solved.scheme == Scheme::S3) {
          const CVector w = random_noise(M, N, config.sigma2, rng).vectorize(Vectorization::ColMajor);
          est = estimate_s3(solved.s3, solved.H, xv, w);
        } else {
          const std::size_t copies = solved.baseline.per_device_noise() ? static_cast<std::size_t>(U) : 1;
          std::vector<CVector> w;
          for (std::size_t i = 0; i < copies; ++i) {
            w.push_back(random_noise(M, N, config.sigma2, rng).vectorize(Vectorization::ColMajor));
          }
          est = estimate_baseline(solved.baseline, solved.H, xv, w);
        }
        acc += (est - target).squaredNorm() / (M * N);
        break;
      }
    }
  }
  return acc / static_cast<Real>(frames);
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t S = spec.schemes.size();
  std::vector<ResultRow> rows;

  for (const Real value : spec.values) {
    SystemConfig config = spec.config;
    int R = spec.paths;
    int rounds = spec.s3_rounds;
    apply_sweep_value(spec.var, value, config, R, rounds);
    const Real norm = spec.per_symbol ? 1.0 / (static_cast<Real>(config.U) * config.U) : 1.0;

    struct TrialResult {
      std::vector<Real> analytic, empirical, runtime_ms;
    };
    std::vector<TrialResult> results(static_cast<std::size_t>(spec.trials));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(spec.trials));
    std::atomic<int> next{0};

    const auto worker = [&] {
      for (int t = next++; t < spec.trials; t = next++) {
        auto& res = results[static_cast<std::size_t>(t)];
        try {
          RandomStream ch_rng = RandomStream::substream(config.seed, static_cast<std::uint64_t>(t));
          const auto channels = draw_channels(config, R, spec.shared_geometry, spec.distinct_paths, ch_rng);
          for (std::size_t si = 0; si < S; ++si) {
            const Scheme sch = spec.schemes[si];
            const auto t0 = std::chrono::steady_clock::now();
            const auto solved = solve_scheme(sch, channels, config, rounds);
            const auto t1 = std::chrono::steady_clock::now();
            res.runtime_ms.push_back(std::chrono::duration<Real, std::milli>(t1 - t0).count());
            res.analytic.push_back(solved.mse * norm);
            if (spec.empirical_samples > 0) {
              RandomStream em_rng = RandomStream::substream(
                  config.seed ^ kEmpiricalSalt, static_cast<std::uint64_t>(t) * 16 + scheme_index(sch));
              res.empirical.push_back(
                  empirical_mse(solved, channels, config, spec.empirical_samples, spec.alphabet, em_rng) * norm);
            } else {
              res.empirical.push_back(std::numeric_limits<Real>::quiet_NaN());
            }
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      }
    };
    const int nw = std::min(spec.workers, spec.trials);
    if (nw <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    for (std::size_t si = 0; si < S; ++si) {
      ResultRow row;
      row.scheme = std::string(scheme_name(spec.schemes[si]));
      row.sweep_var = std::string(sweep_var_name(spec.var));
      row.sweep_value = value;
      row.M = config.M;
      row.N = config.N;
      row.U = config.U;
      row.R = R;
      row.trials = spec.trials;
      row.seed = config.seed;
      Real sa = 0, se = 0, st = 0;
      for (const auto& r : results) {
        sa += r.analytic[si];
        se += r.empirical[si];
        st += r.runtime_ms[si];
      }
      const Real n = spec.trials;
      row.mse_analytic = sa / n;
      row.mse_empirical = se / n;
      row.runtime_ms = st / n;
      Real var = 0;
      for (const auto& r : results) var += (r.analytic[si] - row.mse_analytic) * (r.analytic[si] - row.mse_analytic);
      row.mse_std = spec.trials > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

EtaSearch grid_search_eta(const AlignmentProblem& problem, int grid) {
  problem.validate();
  if (grid < 100) throw std::invalid_argument("grid_search_eta: grid must have at least 100 points");
  const int U = problem.devices();
  Real num = problem.floor;
  Real den = 0.0;
  for (int u = 0; u < U; ++u) {
    num += problem.p_max * problem.total_gain(u);
    den += std::sqrt(problem.p_max) * problem.principal(u);
  }
  const Real eta_ref = (num / den) * (num / den);
  const Real lo = std::log(1e-4 * eta_ref);
  const Real hi = std::log(1e4 * eta_ref);
  EtaSearch best{0.0, std::numeric_limits<Real>::infinity()};
  RVector p(U);
  for (int g = 0; g < grid; ++g) {
    const Real eta = std::exp(lo + (hi - lo) * g / (grid - 1));
    for (int u = 0; u < U; ++u) {
      const Real a = problem.principal(u);
      const Real S = problem.total_gain(u);
      p(u) = std::min(problem.p_max, a * a * eta / (S * S));
    }
    const Real e = alignment_mse(problem, p, eta);
    if (e < best.mse) best = {eta, e};
  }
  return best;
}

EtaSearch grid_search_eta(const ChannelRealization& channels, const SystemConfig& config, int grid) {
  return grid_search_eta(s1_problem(channels, config), grid);
}

namespace {
constexpr Real kMinTimedMs = 5.0;
}

RuntimeStats measure_runtime(Scheme scheme, const ExperimentSpec& spec, int realizations, int warmup) {
  if (realizations < 1) throw std::invalid_argument("measure_runtime: need at least one realization");
  warmup = std::max(warmup, 3);
  std::vector<Real> times;
  for (int i = 0; i < warmup + realizations; ++i) {
    RandomStream rng = RandomStream::substream(spec.config.seed, static_cast<std::uint64_t>(i));
    const auto channels = draw_channels(spec.config, spec.paths, spec.shared_geometry, spec.distinct_paths, rng);
    // sub-millisecond solves are repeated and averaged, timer jitter otherwise dominates
    int reps = 0;
    Real elapsed = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    do {
      const auto solved = solve_scheme(scheme, channels, spec.config, spec.s3_rounds);
      ++reps;
      elapsed = std::chrono::duration<Real, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < kMinTimedMs);
    if (i >= warmup) times.push_back(elapsed / reps);
  }
  RuntimeStats st;
  st.samples = static_cast<int>(times.size());
  for (const Real t : times) st.mean_ms += t;
  st.mean_ms /= st.samples;
  std::sort(times.begin(), times.end());
  const auto n = times.size();
  st.median_ms = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  return st;
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  out.precision(17);
  for (const auto& r : rows) {
    out << r.scheme << ',' << r.sweep_var << ',' << r.sweep_value << ',' << r.M << ',' << r.N << ',' << r.U << ','
        << r.R << ',' << r.trials << ',' << r.mse_analytic << ',' << r.mse_empirical << ',' << r.mse_std << ','
        << r.runtime_ms << ',' << r.seed << '\n';
  }
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_results(rows, out);
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::vector<ResultRow> parse_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("results: unexpected CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 13) throw std::invalid_argument("results: expected 13 fields in '" + line + "'");
    ResultRow r;
    r.scheme = f[0];
    r.sweep_var = f[1];
    r.sweep_value = parse_number(f[2]);
    r.M = std::stoi(f[3]);
    r.N = std::stoi(f[4]);
    r.U = std::stoi(f[5]);
    r.R = std::stoi(f[6]);
    r.trials = std::stoi(f[7]);
    r.mse_analytic = parse_number(f[8]);
    r.mse_empirical = parse_number(f[9]);
    r.mse_std = parse_number(f[10]);
    r.runtime_ms = parse_number(f[11]);
    r.seed = std::stoull(f[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_results(in);
}

}  // namespace aircomp

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/dd_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace aircomp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void SystemConfig::validate() const {
  std::ostringstream err;
  if (M < 2) err << "M must be >= 2 (got " << M << "); ";
  if (N < 2) err << "N must be >= 2 (got " << N << "); ";
  if (U < 1) err << "U must be >= 1 (got " << U << "); ";
  if (!(p_s > 0)) err << "p_s must be > 0; ";
  if (!(sigma2 > 0)) err << "sigma2 must be > 0; ";
  if (!(delta_f > 0)) err << "delta_f must be > 0; ";
  if (l_max < 0 || l_max > M - 1) err << "l_max must lie in [0, M-1] (got " << l_max << "); ";
  if (k_max < 0 || k_max > N / 2) err << "k_max must lie in [0, N/2] (got " << k_max << "); ";
  if (const auto msg = err.str(); !msg.empty()) invalid("invalid SystemConfig: " + msg);
}

Real SystemConfig::snr_db() const { return 10.0 * std::log10(p_s / sigma2); }

void SystemConfig::set_snr_db(Real snr_db) { sigma2 = p_s / std::pow(10.0, snr_db / 10.0); }

bool ChannelRealization::shared_geometry() const {
  if (devices.empty()) return true;
  const auto& ref = devices.front();
  return std::all_of(devices.begin(), devices.end(), [&](const DevicePaths& d) {
    return d.size() == ref.size() &&
           std::equal(d.begin(), d.end(), ref.begin(), [](const ChannelPath& a, const ChannelPath& b) {
             return a.delay == b.delay && a.doppler == b.doppler;
           });
  });
}

void ChannelRealization::validate(const SystemConfig& config) const {
  if (device_count() != config.U) {
    invalid("channel has " + std::to_string(device_count()) + " devices, config expects " +
            std::to_string(config.U));
  }
  for (int u = 0; u < device_count(); ++u) {
    const auto p = paths(u);
    if (p.empty()) invalid("device " + std::to_string(u) + " has no paths");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].delay < 0 || p[i].delay > config.l_max) invalid("delay index out of [0, l_max]");
      if (std::abs(p[i].doppler) > config.k_max) invalid("Doppler index out of [-k_max, k_max]");
      if (i > 0 && p[i].delay < p[i - 1].delay) invalid("paths must be sorted by delay");
    }
  }
}

void sort_by_delay(DevicePaths& paths) {
  std::stable_sort(paths.begin(), paths.end(),
                   [](const ChannelPath& a, const ChannelPath& b) { return a.delay < b.delay; });
}

DevicePaths merge_coincident(std::span<const ChannelPath> paths) {
  DevicePaths out;
  for (const auto& p : paths) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ChannelPath& q) {
      return q.delay == p.delay && q.doppler == p.doppler;
    });
    if (it == out.end()) {
      out.push_back(p);
    } else {
      it->gain += p.gain;
    }
  }
  return out;
}

CVector DDFrame::vectorize(Vectorization order) const {
  const int M = rows();
  const int N = cols();
  CVector v(M * N);
  for (int l = 0; l < M; ++l) {
    for (int k = 0; k < N; ++k) {
      v(order == Vectorization::RowMajor ? l * N + k : k * M + l) = grid_(l, k);
    }
  }
  return v;
}

DDFrame DDFrame::devectorize(const CVector& v, int M, int N, Vectorization order) {
  if (v.size() != static_cast<Eigen::Index>(M) * N) {
    invalid("devectorize: length " + std::to_string(v.size()) + " != M*N");
  }
  DDFrame f(M, N);
  for (int l = 0; l < M; ++l) {
    for (int k = 0; k < N; ++k) {
      f(l, k) = v(order == Vectorization::RowMajor ? l * N + k : k * M + l);
    }
  }
  return f;
}

RandomStream RandomStream::substream(std::uint64_t seed, std::uint64_t index) {
  return RandomStream(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

Complex RandomStream::complex_gaussian(Real variance) {
  const Real s = std::sqrt(variance / 2.0);
  const Real re = gaussian();
  const Real im = gaussian();
  return {s * re, s * im};
}

Real RandomStream::gaussian() {
  std::normal_distribution<Real> dist(0.0, 1.0);
  return dist(engine_);
}

int RandomStream::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

Real RandomStream::symbol(SymbolAlphabet alphabet) {
  if (alphabet == SymbolAlphabet::Rademacher) {
    return (engine_() >> 63) ? 1.0 : -1.0;
  }
  return gaussian();
}

DDFrame random_symbols(int M, int N, SymbolAlphabet alphabet, RandomStream& rng) {
  DDFrame f(M, N);
  for (int k = 0; k < N; ++k) {
    for (int l = 0; l < M; ++l) f(l, k) = rng.symbol(alphabet);
  }
  return f;
}

DDFrame random_noise(int M, int N, Real sigma2, RandomStream& rng) {
  DDFrame f(M, N);
  for (int k = 0; k < N; ++k) {
    for (int l = 0; l < M; ++l) f(l, k) = rng.complex_gaussian(sigma2);
  }
  return f;
}

namespace {

// Draws R (delay, Doppler) pairs. Without replacement, pairs are drawn from
// the (l_max+1)(2k_max+1) grid by partial Fisher-Yates.
std::vector<std::pair<int, int>> draw_geometry(const SystemConfig& config, int R, RandomStream& rng,
                                               bool distinct) {
  const int n_delay = config.l_max + 1;
  const int n_doppler = 2 * config.k_max + 1;
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(R));
  if (!distinct) {
    for (int i = 0; i < R; ++i) {
      const int l = rng.uniform_int(0, config.l_max);
      const int k = rng.uniform_int(-config.k_max, config.k_max);
      out.emplace_back(l, k);
    }
    return out;
  }
  const int cells = n_delay * n_doppler;
  if (R > cells) {
    invalid("distinct sampling of " + std::to_string(R) + " paths needs at most " + std::to_string(cells));
  }
  std::vector<int> pool(static_cast<std::size_t>(cells));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < R; ++i) {
    const int j = rng.uniform_int(i, cells - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    const int c = pool[static_cast<std::size_t>(i)];
    out.emplace_back(c / n_doppler, c % n_doppler - config.k_max);
  }
  return out;
}

}  // namespace

ChannelRealization generate_channels(const SystemConfig& config, std::span<const int> path_counts,
                                     RandomStream& rng, bool distinct) {
  ChannelRealization ch;
  ch.devices.reserve(path_counts.size());
  for (const int R : path_counts) {
    if (R < 1) invalid("every device needs at least one path");
    const auto geometry = draw_geometry(config, R, rng, distinct);
    DevicePaths paths;
    for (const auto& [l, k] : geometry) {
      paths.push_back({rng.complex_gaussian(1.0 / R), l, k});
    }
    sort_by_delay(paths);
    ch.devices.push_back(std::move(paths));
  }
  return ch;
}

ChannelRealization generate_shared_geometry_channels(const SystemConfig& config, int paths,
                                                     RandomStream& rng, bool distinct) {
  if (paths < 1) invalid("shared geometry needs at least one path");
  auto geometry = draw_geometry(config, paths, rng, distinct);
  std::stable_sort(geometry.begin(), geometry.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  ChannelRealization ch;
  for (int u = 0; u < config.U; ++u) {
    DevicePaths dev;
    for (const auto& [l, k] : geometry) {
      dev.push_back({rng.complex_gaussian(1.0 / paths), l, k});
    }
    ch.devices.push_back(std::move(dev));
  }
  return ch;
}

int doppler_index_from_speed(Real speed_mps, const SystemConfig& config) {
  if (speed_mps < 0) invalid("speed must be non-negative");
  const Real doppler_hz = config.carrier_freq * speed_mps / kSpeedOfLight;
  return static_cast<int>(std::lround(doppler_hz * config.N / config.delta_f));
}

void to_json(nlohmann::json& j, const ChannelRealization& channels) {
  j = nlohmann::json::object();
  auto& devices = j["devices"] = nlohmann::json::array();
  for (const auto& dev : channels.devices) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : dev) {
      paths.push_back({{"re", p.gain.real()}, {"im", p.gain.imag()}, {"l", p.delay}, {"k", p.doppler}});
    }
    devices.push_back({{"paths", std::move(paths)}});
  }
}

void from_json(const nlohmann::json& j, ChannelRealization& channels) {
  channels.devices.clear();
  for (const auto& dev : j.at("devices")) {
    DevicePaths paths;
    for (const auto& p : dev.at("paths")) {
      paths.push_back({{p.at("re").get<Real>(), p.at("im").get<Real>()}, p.at("l").get<int>(),
                       p.at("k").get<int>()});
    }
    channels.devices.push_back(std::move(paths));
  }
}

}  // namespace aircomp

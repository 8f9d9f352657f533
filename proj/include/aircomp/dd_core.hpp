// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace aircomp {

/// Frame geometry, power budget, noise level and channel bounds shared by
/// every scheme. All powers are linear.
struct SystemConfig {
  int M = 32;               ///< delay bins (subcarriers)
  int N = 16;               ///< Doppler bins (time slots)
  int U = 20;               ///< devices
  Real delta_f = 1.5e3;     ///< subcarrier spacing [Hz]
  Real carrier_freq = 4e9;  ///< [Hz]
  Real p_s = 1.0;           ///< per-symbol power budget
  Real sigma2 = 0.1;        ///< noise variance
  int l_max = 10;
  int k_max = 5;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  int frame_size() const { return M * N; }
  /// Per-frame budget P_t = M N P_s.
  Real total_power() const { return static_cast<Real>(M) * N * p_s; }
  Real snr_db() const;
  void set_snr_db(Real snr_db);
};

struct ChannelPath {
  Complex gain;
  int delay = 0;    ///< l, in [0, l_max]
  int doppler = 0;  ///< k, in [-k_max, k_max]

  bool operator==(const ChannelPath&) const = default;
};

using DevicePaths = std::vector<ChannelPath>;

/// Per-device path lists, each sorted by delay (non-decreasing).
struct ChannelRealization {
  std::vector<DevicePaths> devices;

  int device_count() const { return static_cast<int>(devices.size()); }
  std::span<const ChannelPath> paths(int u) const { return devices.at(static_cast<std::size_t>(u)); }

  /// True when every device has the same (delay, Doppler) list.
  bool shared_geometry() const;
  void validate(const SystemConfig& config) const;
};

/// Stable per-device sort by delay.
void sort_by_delay(DevicePaths& paths);

/// Merges paths with identical (delay, Doppler): they act on the same
/// DD cell and are indistinguishable to the receiver.
DevicePaths merge_coincident(std::span<const ChannelPath> paths);

enum class Vectorization {
  RowMajor,  ///< index m*N + k, used by the ZP block model
  ColMajor,  ///< index k*M + l, used by the matrix model
};

/// M x N delay-Doppler grid.
class DDFrame {
 public:
  DDFrame() = default;
  DDFrame(int M, int N) : grid_(CMatrix::Zero(M, N)) {}
  explicit DDFrame(CMatrix grid) : grid_(std::move(grid)) {}

  int rows() const { return static_cast<int>(grid_.rows()); }
  int cols() const { return static_cast<int>(grid_.cols()); }

  Complex& operator()(int l, int k) { return grid_(l, k); }
  Complex operator()(int l, int k) const { return grid_(l, k); }

  const CMatrix& grid() const { return grid_; }
  CMatrix& grid() { return grid_; }

  CVector vectorize(Vectorization order) const;
  static DDFrame devectorize(const CVector& v, int M, int N, Vectorization order);

 private:
  CMatrix grid_;
};

enum class SymbolAlphabet { Rademacher, RealGaussian };

/// Seeded random source. Substreams for trial-level parallelism are derived
/// from (seed, index), so results do not depend on scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream substream(std::uint64_t seed, std::uint64_t index);

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  Complex complex_gaussian(Real variance);
  Real gaussian();
  int uniform_int(int lo, int hi);
  Real symbol(SymbolAlphabet alphabet);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Real zero-mean unit-variance symbols on every cell.
DDFrame random_symbols(int M, int N, SymbolAlphabet alphabet, RandomStream& rng);
DDFrame random_noise(int M, int N, Real sigma2, RandomStream& rng);

/// Uniform power delay profile: each of R paths has E|h|^2 = 1/R, delays
/// uniform on [0, l_max], Doppler uniform on [-k_max, k_max]. With
/// `distinct`, the (delay, Doppler) pairs of a device are drawn without
/// replacement.
ChannelRealization generate_channels(const SystemConfig& config, std::span<const int> path_counts,
                                     RandomStream& rng, bool distinct = false);

/// One (delay, Doppler) list drawn once and shared by all devices; gains
/// independent per device and path.
ChannelRealization generate_shared_geometry_channels(const SystemConfig& config, int paths,
                                                     RandomStream& rng, bool distinct = false);

/// round(f_c v N / (c delta_f)).
int doppler_index_from_speed(Real speed_mps, const SystemConfig& config);

void to_json(nlohmann::json& j, const ChannelRealization& channels);
void from_json(const nlohmann::json& j, ChannelRealization& channels);

}  // namespace aircomp

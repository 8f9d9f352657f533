// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/otfs_io.hpp"

#include <cmath>
#include <fstream>

namespace aircomp {

namespace {

Complex unit_phase(Real turns) { return std::polar(1.0, 2.0 * kPi * turns); }

// z^e with z = e^{j2pi/(MN)}; e is reduced mod MN first to keep the argument small.
Complex z_pow(long long e, int M, int N) {
  const long long mn = static_cast<long long>(M) * N;
  const long long r = ((e % mn) + mn) % mn;
  return unit_phase(static_cast<Real>(r) / static_cast<Real>(mn));
}

}  // namespace

Complex alpha_coeff(int l, int k, const ChannelPath& path, const SystemConfig& config) {
  const int M = config.M;
  const int N = config.N;
  const Complex phase = z_pow(static_cast<long long>(path.doppler) * mod(l - path.delay, M), M, N);
  if (l < path.delay) {
    return phase * unit_phase(-static_cast<Real>(k) / N);
  }
  return phase;
}

DDFrame apply_channel_scalar(std::span<const DDFrame> frames, std::span<const CMatrix> coeffs,
                             const ChannelRealization& channels, const DDFrame* noise,
                             const SystemConfig& config) {
  const int M = config.M;
  const int N = config.N;
  if (static_cast<int>(frames.size()) != channels.device_count()) {
    throw std::invalid_argument("apply_channel_scalar: one frame per device required");
  }
  if (!coeffs.empty() && coeffs.size() != frames.size()) {
    throw std::invalid_argument("apply_channel_scalar: one coefficient grid per device required");
  }
  DDFrame y(M, N);
  for (int u = 0; u < channels.device_count(); ++u) {
    const auto& x = frames[static_cast<std::size_t>(u)];
    if (x.rows() != M || x.cols() != N) throw std::invalid_argument("apply_channel_scalar: frame is not M x N");
    CMatrix bx = x.grid();
    if (!coeffs.empty()) {
      const auto& b = coeffs[static_cast<std::size_t>(u)];
      if (b.rows() != M || b.cols() != N) throw std::invalid_argument("apply_channel_scalar: coefficients not M x N");
      bx = bx.cwiseProduct(b);
    }
    for (const auto& path : channels.paths(u)) {
      for (int l = 0; l < M; ++l) {
        const int ls = mod(l - path.delay, M);
        for (int k = 0; k < N; ++k) {
          y(l, k) += path.gain * alpha_coeff(l, k, path, config) * bx(ls, mod(k - path.doppler, N));
        }
      }
    }
  }
  if (noise != nullptr) {
    if (noise->rows() != M || noise->cols() != N) throw std::invalid_argument("apply_channel_scalar: noise not M x N");
    y.grid() += noise->grid();
  }
  return y;
}

CMatrix dft_matrix(int N) {
  CMatrix F(N, N);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(N));
  for (int k = 0; k < N; ++k) {
    for (int n = 0; n < N; ++n) F(k, n) = scale * unit_phase(-static_cast<Real>(mod(k * n, N)) / N);
  }
  return F;
}

CMatrix cyclic_shift_matrix(int size) {
  CMatrix P = CMatrix::Zero(size, size);
  for (int r = 0; r < size; ++r) P(r, mod(r - 1, size)) = 1.0;
  return P;
}

CVector doppler_diagonal(int M, int N) {
  CVector d(M * N);
  for (int t = 0; t < M * N; ++t) d(t) = z_pow(t, M, N);
  return d;
}

CMatrix build_channel_matrix(std::span<const ChannelPath> paths, const SystemConfig& config) {
  const int M = config.M;
  const int N = config.N;
  const int MN = M * N;

  // Time-domain operator sum_i h_i Pi^{l_i} Delta^{k_i}; row t picks sample t - l_i.
  CMatrix time_op = CMatrix::Zero(MN, MN);
  for (const auto& p : paths) {
    for (int t = 0; t < MN; ++t) {
      const int src = mod(t - p.delay, MN);
      time_op(t, src) += p.gain * z_pow(static_cast<long long>(p.doppler) * src, M, N);
    }
  }

  // (F (x) I_M) A (F^H (x) I_M), applied block-wise: block (a, b) of the
  // result is sum_{c,d} F(a,c) A_{c,d} conj(F(b,d)).
  const CMatrix F = dft_matrix(N);
  CMatrix left = CMatrix::Zero(MN, MN);
  for (int a = 0; a < N; ++a) {
    for (int c = 0; c < N; ++c) left.middleRows(a * M, M) += F(a, c) * time_op.middleRows(c * M, M);
  }
  CMatrix H = CMatrix::Zero(MN, MN);
  for (int b = 0; b < N; ++b) {
    for (int d = 0; d < N; ++d) H.middleCols(b * M, M) += std::conj(F(b, d)) * left.middleCols(d * M, M);
  }
  return H;
}

Complex ZpBlockChannel::nu(int m, int l, int kappa) const {
  const auto it = blocks_.find({m, l});
  return it == blocks_.end() ? Complex{} : it->second(mod(kappa, N_));
}

std::vector<std::pair<int, int>> ZpBlockChannel::occupancy() const {
  std::vector<std::pair<int, int>> keys;
  keys.reserve(blocks_.size());
  for (const auto& [key, _] : blocks_) keys.push_back(key);
  return keys;
}

CMatrix ZpBlockChannel::block(int m, int l) const {
  CMatrix K = CMatrix::Zero(N_, N_);
  const auto it = blocks_.find({m, l});
  if (it == blocks_.end()) return K;
  for (int a = 0; a < N_; ++a) {
    for (int b = 0; b < N_; ++b) K(a, b) = it->second(mod(a - b, N_));
  }
  return K;
}

CMatrix ZpBlockChannel::to_dense() const {
  CMatrix H = CMatrix::Zero(M_ * N_, M_ * N_);
  for (const auto& [key, _] : blocks_) {
    const auto [m, l] = key;
    H.block(m * N_, (m - l) * N_, N_, N_) += block(m, l);
  }
  return H;
}

void ZpBlockChannel::accumulate(int m, int l, int kappa, Complex value) {
  auto [it, inserted] = blocks_.try_emplace({m, l}, CVector::Zero(N_));
  it->second(mod(kappa, N_)) += value;
}

ZpBlockChannel build_zp_blocks(std::span<const ChannelPath> paths, const SystemConfig& config) {
  ZpBlockChannel zp(config.M, config.N, config.l_max);
  for (const auto& p : paths) {
    for (int src = 0; src < zp.data_rows(); ++src) {
      const int m = src + p.delay;
      if (m >= config.M) continue;
      zp.accumulate(m, p.delay, p.doppler,
                    p.gain * z_pow(static_cast<long long>(p.doppler) * src, config.M, config.N));
    }
  }
  return zp;
}

CVector convert_vectorization(const CVector& v, Vectorization from, Vectorization to, int M, int N) {
  if (v.size() != static_cast<Eigen::Index>(M) * N) {
    throw std::invalid_argument("convert_vectorization: length " + std::to_string(v.size()) + " != M*N");
  }
  if (from == to) return v;
  return DDFrame::devectorize(v, M, N, from).vectorize(to);
}

void dump_matrix_csv(const CMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "row,col,re,im\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != Complex{}) out << r << ',' << c << ',' << m(r, c).real() << ',' << m(r, c).imag() << '\n';
    }
  }
}

}  // namespace aircomp

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aircomp {

/// Phase of path `path` on output cell (l, k) for rectangular pulses:
/// z^{k_i [l - l_i]_M}, times e^{-j2 pi k/N} when l < l_i, with
/// z = e^{j2 pi/(MN)}. At l == l_i no extra factor is applied.
Complex alpha_coeff(int l, int k, const ChannelPath& path, const SystemConfig& config);

/// Scalar delay-Doppler input-output relation:
///   y[l,k] = sum_u sum_i h_{u,i} alpha_{u,i}[l,k] (b x)_u[[l-l_i]_M, [k-k_i]_N] + w[l,k].
/// `coeffs` holds one M x N transmit-coefficient grid per device; pass an
/// empty span for b = 1. `noise` may be null.
DDFrame apply_channel_scalar(std::span<const DDFrame> frames, std::span<const CMatrix> coeffs,
                             const ChannelRealization& channels, const DDFrame* noise,
                             const SystemConfig& config);

/// Unitary N-point DFT, F[k,n] = e^{-j2 pi kn/N}/sqrt(N).
CMatrix dft_matrix(int N);
/// MN x MN cyclic down-shift.
CMatrix cyclic_shift_matrix(int size);
/// diag(z^0, ..., z^{MN-1}).
CVector doppler_diagonal(int M, int N);

/// Effective DD channel H_u = (F_N (x) I_M) sum_i h_i Pi^{l_i} Delta^{k_i} (F_N^H (x) I_M)
/// acting on column-major vectorized frames.
CMatrix build_channel_matrix(std::span<const ChannelPath> paths, const SystemConfig& config);

/// Block-sparse form of the ZP-assisted channel in row-major vectorization.
/// Block (m, l) is the N x N circulant K_{m,l} placed at block row m and
/// block column m - l; its first column is nu_{m,l}(0..N-1).
class ZpBlockChannel {
 public:
  ZpBlockChannel(int M, int N, int l_max) : M_(M), N_(N), l_max_(l_max) {}

  int M() const { return M_; }
  int N() const { return N_; }
  int l_max() const { return l_max_; }
  /// Rows carrying data: 0 .. M - l_max - 1.
  int data_rows() const { return M_ - l_max_; }

  /// nu_{m,l}(kappa); zero when the block is absent.
  Complex nu(int m, int l, int kappa) const;
  bool has_block(int m, int l) const { return blocks_.contains({m, l}); }
  /// (m, l) keys of all stored blocks, ordered.
  std::vector<std::pair<int, int>> occupancy() const;
  /// Full N x N circulant K_{m,l}.
  CMatrix block(int m, int l) const;
  /// Reassembled MN x MN matrix in row-major vectorization.
  CMatrix to_dense() const;

  void accumulate(int m, int l, int kappa, Complex value);

 private:
  int M_;
  int N_;
  int l_max_;
  std::map<std::pair<int, int>, CVector> blocks_;
};

/// nu_{m,l}(kappa) = sum of h_i z^{k_i (m - l)} over paths with l_i = l and
/// [k_i]_N = kappa. Blocks are stored only where the source row m - l is a
/// data row (0 <= m - l < M - l_max).
ZpBlockChannel build_zp_blocks(std::span<const ChannelPath> paths, const SystemConfig& config);

CVector convert_vectorization(const CVector& v, Vectorization from, Vectorization to, int M, int N);

/// Debug dump, one line per nonzero entry: row,col,re,im.
void dump_matrix_csv(const CMatrix& m, const std::string& path);

}  // namespace aircomp

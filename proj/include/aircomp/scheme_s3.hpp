// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"

#include <span>
#include <vector>

namespace aircomp {

struct PrecoderFilterState {
  std::vector<CMatrix> B;
  CMatrix V;
  RVector lambda;
  int iteration = 0;
  /// MSE after initialization, then after every full round. Evaluated in
  /// closed form from the filter and eigen steps.
  std::vector<Real> mse_trace;
  /// MSE after every half-step (B update, then V update), starting at init.
  std::vector<Real> half_step_trace;
  /// Largest trace(B_u B_u^H) seen over all rounds, per device.
  RVector max_power;
};

/// One dense MN x MN effective channel per device (column-major cells).
std::vector<CMatrix> channel_matrices(const ChannelRealization& channels, const SystemConfig& config);

/// sum_u ||V H_u B_u - I||_F^2 + sigma^2 ||V||_F^2 (all MN cells, un-normalized).
Real mse_matrix(std::span<const CMatrix> B, const CMatrix& V, std::span<const CMatrix> H, Real sigma2);

/// B_u(0): right singular vectors of H_u scaled to trace(B B^H) = P_t.
std::vector<CMatrix> init_precoders(std::span<const CMatrix> H, const SystemConfig& config);

/// MMSE receive filter for fixed precoders.
CMatrix update_filter(std::span<const CMatrix> B, std::span<const CMatrix> H, const SystemConfig& config);

/// Smallest lambda >= 0 with sum_i gamma_i / (lambda + sigma_i)^2 <= p_t, by
/// bisection. Returns 0 when the budget is slack at lambda = 0.
Real solve_lambda(const RVector& sigma, const RVector& gamma, Real p_t);

struct PrecoderUpdate {
  CMatrix B;
  Real lambda = 0.0;
  /// ||V H B - I||_F^2 at the returned B.
  Real residual = 0.0;
};

/// Power-constrained minimizer of ||V H B - I||^2 over B for fixed V:
/// B = (T + lambda I)^+ H^H V^H with T = H^H V^H V H, via the Hermitian
/// eigendecomposition of T.
PrecoderUpdate update_precoder(const CMatrix& V, const CMatrix& H, const SystemConfig& config);
/// Same with a given multiplier.
CMatrix update_precoder(const CMatrix& V, const CMatrix& H, Real lambda, const SystemConfig& config);

struct S3Options {
  int rounds = 10;
  /// Stop once the relative MSE change of a round falls below this.
  Real tolerance = 1e-8;
};

PrecoderFilterState iterate_s3(std::span<const CMatrix> H, const SystemConfig& config, const S3Options& opt = {});
PrecoderFilterState iterate_s3(const ChannelRealization& channels, const SystemConfig& config,
                               const S3Options& opt = {});

/// V (sum_u H_u B_u x_u + w) for column-major symbol vectors.
CVector estimate_s3(const PrecoderFilterState& state, std::span<const CMatrix> H, std::span<const CVector> x,
                    const CVector& noise);

}  // namespace aircomp

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace aircomp {

enum class BaselineKind {
  MmsePrecodeNormalized,    ///< b1: regularized inverse, scaled to the full budget
  MmsePrecodePowerControl,  ///< b2: b1 with the per-device power optimized
  PrecoderOnly,             ///< b3: KKT precoder with V = I
  FilterOnly,               ///< b4: MMSE receive filter, scaled identity precoders
};

std::string_view baseline_name(BaselineKind kind);

struct BaselineDesign {
  BaselineKind kind = BaselineKind::MmsePrecodeNormalized;
  std::vector<CMatrix> B;
  CMatrix V;  ///< identity unless FilterOnly
  /// b1/b2 only: power normalization per device; each device's own noise
  /// copy is divided by it.
  RVector phi;
  RVector power;   ///< b2: chosen p_u
  RVector lambda;  ///< b3
  /// Un-normalized MSE over all MN cells.
  Real mse = 0.0;

  bool per_device_noise() const {
    return kind == BaselineKind::MmsePrecodeNormalized || kind == BaselineKind::MmsePrecodePowerControl;
  }
};

BaselineDesign design_baseline(BaselineKind kind, std::span<const CMatrix> H, const SystemConfig& config);

/// Estimate of sum_u x_u. `noise` holds one vector for the shared-receiver
/// baselines (b3, b4) and one per device for b1/b2.
CVector estimate_baseline(const BaselineDesign& design, std::span<const CMatrix> H, std::span<const CVector> x,
                          std::span<const CVector> noise);

struct BaselineRun {
  CVector estimate;
  CVector target;
  Real mse_analytic = 0.0;
};

/// Draws the noise the baseline needs from `rng` and runs one frame set.
BaselineRun run_baseline(BaselineKind kind, const ChannelRealization& channels, std::span<const DDFrame> frames,
                         RandomStream& rng, const SystemConfig& config);

BaselineRun run_baseline_1(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config);
BaselineRun run_baseline_2(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config);
BaselineRun run_baseline_3(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config);
BaselineRun run_baseline_4(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config);

/// Golden-section minimizer of a unimodal f on [lo, hi]; returns the argmin.
Real golden_section(const std::function<Real(Real)>& f, Real lo, Real hi, Real rel_tol);

}  // namespace aircomp

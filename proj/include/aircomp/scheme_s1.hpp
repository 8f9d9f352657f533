// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"
#include "aircomp/power_control.hpp"

#include <span>
#include <vector>

namespace aircomp {

/// S1: every device aligns its first (principal) path and treats the other
/// paths as interference. Coincident (delay, Doppler) paths are merged first.
AlignmentProblem s1_problem(const ChannelRealization& channels, const SystemConfig& config);

/// Devices sorted by sum_i |h_{u,i}|^2 / |h_{u,1}|, stable.
std::vector<int> order_devices(const ChannelRealization& channels, const SystemConfig& config);

/// Objective on interval u (0..U) at eta, un-normalized (no 1/U^2).
Real objective_H(int u, Real eta, const ChannelRealization& channels, const SystemConfig& config);

PowerPolicy solve_s1(const ChannelRealization& channels, const SystemConfig& config);

/// Per-cell MSE, un-normalized.
Real analytic_mse_s1(const PowerPolicy& policy, const ChannelRealization& channels, const SystemConfig& config);

/// Per-device M x N transmit coefficients indexed by the transmitted cell:
/// b_u at source cell (l, k) undoes the principal-path phase on the output
/// cell (l + l_1, k + k_1) it lands on.
std::vector<CMatrix> s1_coefficients(const ChannelRealization& channels, const PowerPolicy& policy,
                                     const SystemConfig& config);

struct S1Output {
  DDFrame estimate;  ///< y / (U sqrt(eta))
  DDFrame target;    ///< sum_u x_u shifted by the principal path, / U
};

S1Output estimate_s1(std::span<const DDFrame> frames, const ChannelRealization& channels,
                     const PowerPolicy& policy, const DDFrame* noise, const SystemConfig& config);

}  // namespace aircomp

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/types.hpp"

#include <vector>

namespace aircomp {

/// Per-device MSE-optimal transmit power and a shared denoising factor for
///
///   eps(p, eta) = sum_u (sqrt(p_u) a_u / sqrt(eta) - 1)^2
///               + sum_u p_u q_u / eta + floor / eta,   0 <= p_u <= p_max,
///
/// where a_u is the aligned (principal) gain magnitude, q_u the power that
/// leaks per unit transmit power into uncancellable interference and
/// `floor` the noise plus residual interference power. S1 uses a_u = |h_{u,1}|,
/// q_u = sum_{i>=2} |h_{u,i}|^2, floor = sigma^2; every S2 row is an instance
/// with its own a, q and floor.
struct AlignmentProblem {
  RVector principal;  ///< a_u > 0
  RVector leakage;    ///< q_u >= 0
  Real floor = 0.0;
  Real p_max = 1.0;

  int devices() const { return static_cast<int>(principal.size()); }
  /// S_u = a_u^2 + q_u.
  Real total_gain(int u) const { return principal(u) * principal(u) + leakage(u); }
  /// Sort key S_u / a_u.
  Real sort_key(int u) const { return total_gain(u) / principal(u); }
  void validate() const;
};

struct PowerPolicy {
  RVector p;
  Real eta = 0.0;
  /// Number of devices (in sorted order) transmitting at full power.
  int u_star = 0;
  /// ordering[j] = original index of the j-th device by ascending sort key.
  std::vector<int> ordering;
};

/// Devices by ascending S_u / a_u, ties kept in index order.
std::vector<int> order_devices(const AlignmentProblem& problem);

/// Left edge of interval I_u: p_max (S/a)^2 of the u-th sorted device
/// (0 for u = 0); `u = devices() + 1` yields +infinity.
Real interval_edge(const AlignmentProblem& problem, const std::vector<int>& ordering, int u);

/// H_u(eta): the objective with the first u sorted devices at full power and
/// the rest at their unconstrained optimum.
Real objective_h(const AlignmentProblem& problem, const std::vector<int>& ordering, int u, Real eta);

/// Stationary point of H_u for u >= 1.
Real interior_eta(const AlignmentProblem& problem, const std::vector<int>& ordering, int u);

/// Jointly optimal powers and denoising factor (closed form over the U+1
/// intervals; argmin ties resolved toward smaller u).
PowerPolicy solve_power_control(const AlignmentProblem& problem);

/// eps(p, eta) for an arbitrary feasible policy.
Real alignment_mse(const AlignmentProblem& problem, const RVector& p, Real eta);

}  // namespace aircomp

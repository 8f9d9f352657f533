// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"

#include <cmath>
#include <initializer_list>

namespace aircomp::test {

inline bool rel_close(Real a, Real b, Real tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-300); }

inline SystemConfig small_config(int M, int N, int U, int l_max, int k_max, Real sigma2 = 1.0) {
  SystemConfig c;
  c.M = M;
  c.N = N;
  c.U = U;
  c.l_max = l_max;
  c.k_max = k_max;
  c.p_s = 1.0;
  c.sigma2 = sigma2;
  return c;
}

/// Every device gets the same (delay, Doppler) list with the given gains.
inline ChannelRealization shared(std::initializer_list<std::pair<int, int>> geometry,
                                 std::initializer_list<std::initializer_list<Complex>> gains) {
  ChannelRealization ch;
  for (const auto& g : gains) {
    DevicePaths d;
    auto it = g.begin();
    for (const auto& [l, k] : geometry) d.push_back({*it++, l, k});
    ch.devices.push_back(d);
  }
  return ch;
}

inline ChannelRealization single_path(std::initializer_list<Complex> gains) {
  ChannelRealization ch;
  for (const auto g : gains) ch.devices.push_back({{g, 0, 0}});
  return ch;
}

}  // namespace aircomp::test

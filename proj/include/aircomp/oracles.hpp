// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/harness.hpp"

#include <string>
#include <vector>

namespace aircomp {

struct OracleReport {
  std::string name;
  bool passed = false;
  int instances = 0;
  Real worst = 0.0;  ///< worst observed discrepancy (meaning depends on the check)
  Real tolerance = 0.0;
  std::string detail;
};

/// Closed-form S1 optimum vs brute-force eta grid on random channels
/// (M = N = 8, U <= 10, R <= 4), plus the two single-device cases.
OracleReport check_eta(int instances, std::uint64_t seed);

/// Closed-form cancellation weight vs a two-stage 10^4-point grid on random
/// co-phased instances, plus the zero-cross-gain case.
OracleReport check_zeta(int instances, std::uint64_t seed);

/// Scalar relation vs dense matrix form vs ZP block form, M, N <= 8.
OracleReport check_equivalence(int instances, std::uint64_t seed);

/// Analytic vs empirical MSE for every scheme on random small configs.
OracleReport check_empirical(int configs, long long samples, std::uint64_t seed, int workers = 1);

}  // namespace aircomp

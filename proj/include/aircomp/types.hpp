// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aircomp {

using Real = double;
using Complex = std::complex<Real>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMatrix = Matrix<Complex>;
using CVector = Vector<Complex>;
using RVector = Vector<Real>;

inline constexpr Real kPi = std::numbers::pi_v<Real>;
inline constexpr Real kSpeedOfLight = 2.998e8;

/// Raised when a solver meets a numerically defective input (singular
/// system, failed decomposition). The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-negative remainder, [a]_n.
constexpr int mod(int a, int n) {
  const int r = a % n;
  return r < 0 ? r + n : r;
}

/// Squared Frobenius norm of any Eigen expression.
template <typename Derived>
Real frobenius_sq(const Eigen::MatrixBase<Derived>& m) {
  return m.squaredNorm();
}

}  // namespace aircomp

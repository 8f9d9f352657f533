// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/power_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace aircomp {

void AlignmentProblem::validate() const {
  if (principal.size() == 0) throw std::invalid_argument("alignment problem has no devices");
  if (leakage.size() != principal.size()) throw std::invalid_argument("leakage/principal size mismatch");
  if (!(p_max > 0)) throw std::invalid_argument("p_max must be positive");
  if (floor < 0) throw std::invalid_argument("floor must be non-negative");
  for (Eigen::Index u = 0; u < principal.size(); ++u) {
    if (!(principal(u) > 0)) {
      throw std::invalid_argument("device " + std::to_string(u) + " has zero principal gain");
    }
    if (leakage(u) < 0) throw std::invalid_argument("negative leakage");
  }
}

std::vector<int> order_devices(const AlignmentProblem& problem) {
  problem.validate();
  std::vector<int> order(static_cast<std::size_t>(problem.devices()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return problem.sort_key(a) < problem.sort_key(b); });
  return order;
}

Real interval_edge(const AlignmentProblem& problem, const std::vector<int>& ordering, int u) {
  if (u <= 0) return 0.0;
  if (u > problem.devices()) return std::numeric_limits<Real>::infinity();
  const Real key = problem.sort_key(ordering[static_cast<std::size_t>(u - 1)]);
  return problem.p_max * key * key;
}

Real objective_h(const AlignmentProblem& problem, const std::vector<int>& ordering, int u, Real eta) {
  const Real sp = std::sqrt(problem.p_max);
  Real h = problem.floor / eta;
  for (int j = 0; j < problem.devices(); ++j) {
    const int d = ordering[static_cast<std::size_t>(j)];
    const Real a = problem.principal(d);
    const Real q = problem.leakage(d);
    if (j < u) {
      const Real e = sp * a / std::sqrt(eta) - 1.0;
      h += e * e + problem.p_max * q / eta;
    } else {
      const Real S = problem.total_gain(d);
      const Real e = a * a / S - 1.0;
      h += e * e + a * a * q / (S * S);
    }
  }
  return h;
}

Real interior_eta(const AlignmentProblem& problem, const std::vector<int>& ordering, int u) {
  Real num = problem.floor;
  Real den = 0.0;
  for (int j = 0; j < u; ++j) {
    const int d = ordering[static_cast<std::size_t>(j)];
    num += problem.p_max * problem.total_gain(d);
    den += std::sqrt(problem.p_max) * problem.principal(d);
  }
  const Real r = num / den;
  return r * r;
}

PowerPolicy solve_power_control(const AlignmentProblem& problem) {
  const auto ordering = order_devices(problem);
  const int U = problem.devices();

  int best_u = 0;
  Real best_eta = interval_edge(problem, ordering, 1);
  Real best_h = objective_h(problem, ordering, 0, best_eta);
  for (int u = 1; u <= U; ++u) {
    const Real lo = interval_edge(problem, ordering, u);
    const Real hi = interval_edge(problem, ordering, u + 1);
    const Real eta = std::min(hi, std::max(interior_eta(problem, ordering, u), lo));
    const Real h = objective_h(problem, ordering, u, eta);
    if (h < best_h) {
      best_h = h;
      best_u = u;
      best_eta = eta;
    }
  }
  if (!(best_eta > 0) || !std::isfinite(best_eta)) {
    throw NumericalError("power control produced a non-finite denoising factor");
  }

  PowerPolicy policy;
  policy.eta = best_eta;
  policy.u_star = best_u;
  policy.ordering = ordering;
  policy.p.resize(U);
  for (int j = 0; j < U; ++j) {
    const int d = ordering[static_cast<std::size_t>(j)];
    if (j < best_u) {
      policy.p(d) = problem.p_max;
    } else {
      const Real a = problem.principal(d);
      const Real S = problem.total_gain(d);
      policy.p(d) = a * a * best_eta / (S * S);
    }
  }
  return policy;
}

Real alignment_mse(const AlignmentProblem& problem, const RVector& p, Real eta) {
  Real e = problem.floor / eta;
  for (int u = 0; u < problem.devices(); ++u) {
    const Real d = std::sqrt(p(u)) * problem.principal(u) / std::sqrt(eta) - 1.0;
    e += d * d + p(u) * problem.leakage(u) / eta;
  }
  return e;
}

}  // namespace aircomp

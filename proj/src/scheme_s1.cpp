// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/scheme_s1.hpp"

#include "aircomp/otfs_io.hpp"

#include <cmath>

namespace aircomp {

namespace {

ChannelRealization merged(const ChannelRealization& channels) {
  ChannelRealization out;
  out.devices.reserve(channels.devices.size());
  for (const auto& d : channels.devices) out.devices.push_back(merge_coincident(d));
  return out;
}

}  // namespace

AlignmentProblem s1_problem(const ChannelRealization& channels, const SystemConfig& config) {
  const auto ch = merged(channels);
  AlignmentProblem prob;
  const int U = ch.device_count();
  prob.principal.resize(U);
  prob.leakage.resize(U);
  for (int u = 0; u < U; ++u) {
    const auto paths = ch.paths(u);
    if (paths.empty()) throw std::invalid_argument("device " + std::to_string(u) + " has no paths");
    prob.principal(u) = std::abs(paths[0].gain);
    Real q = 0.0;
    for (std::size_t i = 1; i < paths.size(); ++i) q += std::norm(paths[i].gain);
    prob.leakage(u) = q;
  }
  prob.floor = config.sigma2;
  prob.p_max = config.p_s;
  return prob;
}

std::vector<int> order_devices(const ChannelRealization& channels, const SystemConfig& config) {
  return order_devices(s1_problem(channels, config));
}

Real objective_H(int u, Real eta, const ChannelRealization& channels, const SystemConfig& config) {
  const auto prob = s1_problem(channels, config);
  if (u < 0 || u > prob.devices()) throw std::invalid_argument("interval index out of range");
  if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
  return objective_h(prob, order_devices(prob), u, eta);
}

PowerPolicy solve_s1(const ChannelRealization& channels, const SystemConfig& config) {
  return solve_power_control(s1_problem(channels, config));
}

Real analytic_mse_s1(const PowerPolicy& policy, const ChannelRealization& channels, const SystemConfig& config) {
  return alignment_mse(s1_problem(channels, config), policy.p, policy.eta);
}

std::vector<CMatrix> s1_coefficients(const ChannelRealization& channels, const PowerPolicy& policy,
                                     const SystemConfig& config) {
  const int M = config.M;
  const int N = config.N;
  std::vector<CMatrix> coeffs;
  for (int u = 0; u < channels.device_count(); ++u) {
    const auto paths = merge_coincident(channels.paths(u));
    const ChannelPath& p1 = paths.front();
    const Real scale = std::sqrt(policy.p(u)) / std::abs(p1.gain);
    CMatrix b(M, N);
    for (int l = 0; l < M; ++l) {
      for (int k = 0; k < N; ++k) {
        const int lo = mod(l + p1.delay, M);
        const int ko = mod(k + p1.doppler, N);
        b(l, k) = scale * std::conj(p1.gain * alpha_coeff(lo, ko, p1, config));
      }
    }
    coeffs.push_back(std::move(b));
  }
  return coeffs;
}

S1Output estimate_s1(std::span<const DDFrame> frames, const ChannelRealization& channels,
                     const PowerPolicy& policy, const DDFrame* noise, const SystemConfig& config) {
  const int M = config.M;
  const int N = config.N;
  const int U = channels.device_count();
  if (static_cast<int>(frames.size()) != U) throw std::invalid_argument("estimate_s1: one frame per device required");
  if (policy.p.size() != U) throw std::invalid_argument("estimate_s1: policy/device count mismatch");

  const auto coeffs = s1_coefficients(channels, policy, config);
  const DDFrame y = apply_channel_scalar(frames, coeffs, channels, noise, config);

  S1Output out{DDFrame(y.grid() / (U * std::sqrt(policy.eta))), DDFrame(M, N)};
  for (int u = 0; u < U; ++u) {
    const ChannelPath& p1 = channels.paths(u).front();
    const auto& x = frames[static_cast<std::size_t>(u)];
    for (int l = 0; l < M; ++l) {
      for (int k = 0; k < N; ++k) out.target(l, k) += x(mod(l - p1.delay, M), mod(k - p1.doppler, N));
    }
  }
  out.target.grid() /= static_cast<Real>(U);
  return out;
}

}  // namespace aircomp

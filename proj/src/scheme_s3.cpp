// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/scheme_s3.hpp"

#include "aircomp/otfs_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aircomp {

std::vector<CMatrix> channel_matrices(const ChannelRealization& channels, const SystemConfig& config) {
  std::vector<CMatrix> H;
  H.reserve(channels.devices.size());
  for (int u = 0; u < channels.device_count(); ++u) H.push_back(build_channel_matrix(channels.paths(u), config));
  return H;
}

Real mse_matrix(std::span<const CMatrix> B, const CMatrix& V, std::span<const CMatrix> H, Real sigma2) {
  if (B.size() != H.size()) throw std::invalid_argument("mse_matrix: one precoder per channel required");
  Real e = sigma2 * V.squaredNorm();
  for (std::size_t u = 0; u < H.size(); ++u) {
    if (H[u].rows() != V.cols() || B[u].rows() != H[u].cols()) throw std::invalid_argument("mse_matrix: shape mismatch");
    CMatrix E = V * H[u] * B[u];
    E.diagonal().array() -= 1.0;
    e += E.squaredNorm();
  }
  return e;
}

std::vector<CMatrix> init_precoders(std::span<const CMatrix> H, const SystemConfig& config) {
  const Real scale = std::sqrt(config.total_power() / config.frame_size());
  std::vector<CMatrix> B;
  for (const auto& h : H) {
    Eigen::BDCSVD<CMatrix> svd(h, Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD of the channel matrix failed");
    B.push_back(scale * svd.matrixV());
  }
  return B;
}

namespace {

struct FilterStep {
  CMatrix V;
  Real mse = 0.0;  ///< at the returned V
};

// At the MMSE filter V = S^H C^{-1} (S = sum H_u B_u) the objective reduces
// to U*MN - Re tr(V S).
FilterStep filter_step(std::span<const CMatrix> B, std::span<const CMatrix> H, const SystemConfig& config) {
  const Eigen::Index n = H.front().rows();
  CMatrix S = CMatrix::Zero(n, n);
  CMatrix C = config.sigma2 * CMatrix::Identity(n, n);
  for (std::size_t u = 0; u < H.size(); ++u) {
    const CMatrix HB = H[u] * B[u];
    S += HB;
    C.selfadjointView<Eigen::Lower>().rankUpdate(HB);
  }
  C.triangularView<Eigen::StrictlyUpper>() = C.adjoint();
  Eigen::LLT<CMatrix> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalError("receive-filter system is not positive definite");
  FilterStep out;
  out.V = llt.solve(S).adjoint();
  out.mse = static_cast<Real>(H.size()) * static_cast<Real>(n) - (out.V * S).trace().real();
  return out;
}

}  // namespace

CMatrix update_filter(std::span<const CMatrix> B, std::span<const CMatrix> H, const SystemConfig& config) {
  return filter_step(B, H, config).V;
}

Real solve_lambda(const RVector& sigma, const RVector& gamma, Real p_t) {
  if (sigma.size() != gamma.size()) throw std::invalid_argument("solve_lambda: size mismatch");
  if (!(p_t > 0)) throw std::invalid_argument("solve_lambda: budget must be positive");
  const auto f = [&](Real lambda) {
    Real s = 0.0;
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
      if (gamma(i) <= 0) continue;
      const Real d = lambda + sigma(i);
      if (d <= 0) return std::numeric_limits<Real>::infinity();
      s += gamma(i) / (d * d);
    }
    return s;
  };
  const Real total = gamma.cwiseMax(0.0).sum();
  if (total <= 0 || f(0.0) <= p_t) return 0.0;
  Real lo = 0.0;
  Real hi = std::sqrt(total / p_t);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const Real mid = 0.5 * (lo + hi);
    (f(mid) > p_t ? lo : hi) = mid;
  }
  return hi;
}

namespace {

struct Spectral {
  CMatrix vecs;
  RVector vals;
  CMatrix proj;  ///< Lambda^H (V H)^H
};

Spectral spectral(const CMatrix& V, const CMatrix& H) {
  const CMatrix VH = V * H;
  CMatrix T = CMatrix::Zero(VH.cols(), VH.cols());
  T.selfadjointView<Eigen::Lower>().rankUpdate(VH.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(T);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of T failed");
  Spectral s{eig.eigenvectors(), eig.eigenvalues().cwiseMax(0.0), {}};
  s.proj = s.vecs.adjoint() * VH.adjoint();
  return s;
}

RVector gains(const Spectral& s, Real lambda) {
  const Real cutoff = 1e-12 * std::max(s.vals.maxCoeff(), 0.0);
  RVector inv(s.vals.size());
  for (Eigen::Index i = 0; i < s.vals.size(); ++i) {
    const Real d = s.vals(i) + lambda;
    inv(i) = (lambda > 0 || s.vals(i) > cutoff) && d > 0 ? 1.0 / d : 0.0;
  }
  return inv;
}

CMatrix assemble(const Spectral& s, const RVector& inv) { return s.vecs * (inv.asDiagonal() * s.proj); }

}  // namespace

PrecoderUpdate update_precoder(const CMatrix& V, const CMatrix& H, const SystemConfig& config) {
  const Spectral s = spectral(V, H);
  const Real cutoff = 1e-12 * std::max(s.vals.maxCoeff(), 0.0);
  // Gamma_ii = (Lambda^H T Lambda)_ii, i.e. the eigenvalues; drop the null space.
  RVector gamma = s.vals;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (s.vals(i) <= cutoff) gamma(i) = 0.0;
  }
  const Real lambda = solve_lambda(s.vals, gamma, config.total_power());
  const RVector inv = gains(s, lambda);
  // ||V H B - I||^2 = sum_i (1 - sigma_i / (sigma_i + lambda))^2 in the eigenbasis
  const Real residual = (1.0 - (s.vals.array() * inv.array())).square().sum();
  return {assemble(s, inv), lambda, residual};
}

CMatrix update_precoder(const CMatrix& V, const CMatrix& H, Real lambda, const SystemConfig& config) {
  (void)config;
  if (lambda < 0) throw std::invalid_argument("update_precoder: lambda must be non-negative");
  const Spectral s = spectral(V, H);
  return assemble(s, gains(s, lambda));
}

PrecoderFilterState iterate_s3(std::span<const CMatrix> H, const SystemConfig& config, const S3Options& opt) {
  if (H.empty()) throw std::invalid_argument("iterate_s3: no devices");
  if (!(config.sigma2 > 0)) throw std::invalid_argument("iterate_s3: sigma2 must be positive");
  const auto U = static_cast<Eigen::Index>(H.size());
  PrecoderFilterState st;
  st.B = init_precoders(H, config);
  auto fs = filter_step(st.B, H, config);
  st.V = std::move(fs.V);
  st.lambda = RVector::Zero(U);
  st.max_power.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) st.max_power(u) = st.B[static_cast<std::size_t>(u)].squaredNorm();
  st.mse_trace.push_back(fs.mse);
  st.half_step_trace.push_back(fs.mse);

  for (int round = 1; round <= opt.rounds; ++round) {
    Real half = config.sigma2 * st.V.squaredNorm();
    for (Eigen::Index u = 0; u < U; ++u) {
      auto upd = update_precoder(st.V, H[static_cast<std::size_t>(u)], config);
      st.lambda(u) = upd.lambda;
      half += upd.residual;
      st.B[static_cast<std::size_t>(u)] = std::move(upd.B);
      st.max_power(u) = std::max(st.max_power(u), st.B[static_cast<std::size_t>(u)].squaredNorm());
    }
    st.half_step_trace.push_back(half);
    fs = filter_step(st.B, H, config);
    st.V = std::move(fs.V);
    st.half_step_trace.push_back(fs.mse);
    const Real prev = st.mse_trace.back();
    st.mse_trace.push_back(fs.mse);
    st.iteration = round;
    if (std::abs(prev - fs.mse) <= opt.tolerance * std::abs(prev)) break;
  }
  return st;
}

PrecoderFilterState iterate_s3(const ChannelRealization& channels, const SystemConfig& config, const S3Options& opt) {
  const auto H = channel_matrices(channels, config);
  return iterate_s3(H, config, opt);
}

CVector estimate_s3(const PrecoderFilterState& state, std::span<const CMatrix> H, std::span<const CVector> x,
                    const CVector& noise) {
  CVector y = noise;
  for (std::size_t u = 0; u < H.size(); ++u) y.noalias() += H[u] * (state.B[u] * x[u]);
  return state.V * y;
}

}  // namespace aircomp

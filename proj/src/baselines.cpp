// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/baselines.hpp"

#include "aircomp/scheme_s3.hpp"

#include <cmath>

namespace aircomp {

namespace {

Real misalignment(const CMatrix& V, const CMatrix& H, const CMatrix& B) {
  CMatrix E = V * H * B;
  E.diagonal().array() -= 1.0;
  return E.squaredNorm();
}

CMatrix regularized_inverse(const CMatrix& H, Real reg) {
  CMatrix G = H.adjoint() * H;
  G.diagonal().array() += reg;
  Eigen::LLT<CMatrix> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("regularized Gram matrix is not positive definite");
  return llt.solve(H.adjoint());
}

CVector column_major(const DDFrame& f) { return f.vectorize(Vectorization::ColMajor); }

}  // namespace

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::MmsePrecodeNormalized: return "b1";
    case BaselineKind::MmsePrecodePowerControl: return "b2";
    case BaselineKind::PrecoderOnly: return "b3";
    case BaselineKind::FilterOnly: return "b4";
  }
  return "?";
}

Real golden_section(const std::function<Real(Real)>& f, Real lo, Real hi, Real rel_tol) {
  const Real g = (std::sqrt(5.0) - 1.0) / 2.0;
  Real a = lo;
  Real b = hi;
  Real c = b - g * (b - a);
  Real d = a + g * (b - a);
  Real fc = f(c);
  Real fd = f(d);
  for (int it = 0; it < 500 && (b - a) > rel_tol * (std::abs(a) + std::abs(b) + 1e-300); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

BaselineDesign design_baseline(BaselineKind kind, std::span<const CMatrix> H, const SystemConfig& config) {
  if (H.empty()) throw std::invalid_argument("design_baseline: no devices");
  const Eigen::Index n = H.front().rows();
  const auto U = static_cast<Eigen::Index>(H.size());
  const Real P_t = config.total_power();
  const Real s2 = config.sigma2;
  const Real mn = static_cast<Real>(n);

  BaselineDesign d;
  d.kind = kind;
  d.V = CMatrix::Identity(n, n);
  switch (kind) {
    case BaselineKind::MmsePrecodeNormalized:
    case BaselineKind::MmsePrecodePowerControl: {
      d.phi.resize(U);
      d.power.resize(U);
      for (Eigen::Index u = 0; u < U; ++u) {
        const CMatrix& h = H[static_cast<std::size_t>(u)];
        CMatrix b = regularized_inverse(h, s2);
        const Real tr = b.squaredNorm();
        const Real fit = misalignment(d.V, h, b);
        Real p = P_t;
        if (kind == BaselineKind::MmsePrecodePowerControl) {
          const auto cost = [&](Real log_p) { return fit + s2 * mn * tr / std::exp(log_p); };
          const Real lp = golden_section(cost, std::log(1e-6 * P_t), std::log(P_t), 1e-4);
          p = cost(lp) < cost(std::log(P_t)) ? std::exp(lp) : P_t;
        }
        d.power(u) = p;
        d.phi(u) = std::sqrt(p / tr);
        d.mse += fit + s2 * mn / (d.phi(u) * d.phi(u));
        d.B.push_back(std::move(b));
      }
      break;
    }
    case BaselineKind::PrecoderOnly: {
      d.lambda.resize(U);
      for (Eigen::Index u = 0; u < U; ++u) {
        const CMatrix& h = H[static_cast<std::size_t>(u)];
        auto upd = update_precoder(d.V, h, config);
        d.lambda(u) = upd.lambda;
        d.mse += misalignment(d.V, h, upd.B);
        d.B.push_back(std::move(upd.B));
      }
      d.mse += s2 * mn;
      break;
    }
    case BaselineKind::FilterOnly: {
      for (Eigen::Index u = 0; u < U; ++u) d.B.push_back(std::sqrt(config.p_s) * CMatrix::Identity(n, n));
      d.V = update_filter(d.B, H, config);
      d.mse = mse_matrix(d.B, d.V, H, s2);
      break;
    }
  }
  return d;
}

CVector estimate_baseline(const BaselineDesign& design, std::span<const CMatrix> H, std::span<const CVector> x,
                          std::span<const CVector> noise) {
  const std::size_t U = H.size();
  if (x.size() != U) throw std::invalid_argument("estimate_baseline: one symbol vector per device required");
  if (design.per_device_noise()) {
    if (noise.size() != U) throw std::invalid_argument("estimate_baseline: b1/b2 need one noise vector per device");
    CVector f = CVector::Zero(H.front().rows());
    for (std::size_t u = 0; u < U; ++u) {
      f.noalias() += H[u] * (design.B[u] * x[u]);
      f += noise[u] / design.phi(static_cast<Eigen::Index>(u));
    }
    return f;
  }
  if (noise.size() != 1) throw std::invalid_argument("estimate_baseline: b3/b4 need one noise vector");
  CVector y = noise[0];
  for (std::size_t u = 0; u < U; ++u) y.noalias() += H[u] * (design.B[u] * x[u]);
  return design.kind == BaselineKind::FilterOnly ? CVector(design.V * y) : y;
}

BaselineRun run_baseline(BaselineKind kind, const ChannelRealization& channels, std::span<const DDFrame> frames,
                         RandomStream& rng, const SystemConfig& config) {
  const auto H = channel_matrices(channels, config);
  const auto d = design_baseline(kind, H, config);
  std::vector<CVector> x;
  CVector target = CVector::Zero(config.frame_size());
  for (const auto& f : frames) {
    x.push_back(column_major(f));
    target += x.back();
  }
  std::vector<CVector> noise;
  const std::size_t copies = d.per_device_noise() ? H.size() : 1;
  for (std::size_t i = 0; i < copies; ++i) {
    noise.push_back(column_major(random_noise(config.M, config.N, config.sigma2, rng)));
  }
  return {estimate_baseline(d, H, x, noise), target, d.mse};
}

BaselineRun run_baseline_1(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config) {
  return run_baseline(BaselineKind::MmsePrecodeNormalized, channels, frames, rng, config);
}
BaselineRun run_baseline_2(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config) {
  return run_baseline(BaselineKind::MmsePrecodePowerControl, channels, frames, rng, config);
}
BaselineRun run_baseline_3(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config) {
  return run_baseline(BaselineKind::PrecoderOnly, channels, frames, rng, config);
}
BaselineRun run_baseline_4(const ChannelRealization& channels, std::span<const DDFrame> frames, RandomStream& rng,
                           const SystemConfig& config) {
  return run_baseline(BaselineKind::FilterOnly, channels, frames, rng, config);
}

}  // namespace aircomp

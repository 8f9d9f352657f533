// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/scheme_s2.hpp"

#include "aircomp/otfs_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace aircomp {

namespace {

Complex z_pow(long long e, int M, int N) {
  const long long mn = static_cast<long long>(M) * N;
  const long long r = ((e % mn) + mn) % mn;
  return std::polar(1.0, 2.0 * kPi * static_cast<Real>(r) / static_cast<Real>(mn));
}

struct Counters {
  std::vector<long long> plus;
  std::vector<long long> minus;
};

Counters interference_counters(std::span<const int> delays, int D) {
  const int l1 = delays.front();
  const int lR = delays.back();
  const auto shared_first = std::count(delays.begin() + 1, delays.end(), l1);
  const auto shared_last = std::count(delays.begin(), delays.end() - 1, lR);
  Counters c{std::vector<long long>(static_cast<std::size_t>(D), 0),
             std::vector<long long>(static_cast<std::size_t>(D), 0)};
  for (int m = 0; m < D; ++m) {
    long long t = shared_first;
    for (const int l : delays) {
      const int s = m + l1 - l;
      if (l == l1 || s < 0) continue;
      t += c.plus[static_cast<std::size_t>(s)] + 1;
    }
    c.plus[static_cast<std::size_t>(m)] = t;
  }
  for (int m = D - 1; m >= 0; --m) {
    long long t = shared_last;
    for (const int l : delays) {
      const int s = m + lR - l;
      if (l == lR || s >= D) continue;
      t += c.minus[static_cast<std::size_t>(s)] + 1;
    }
    c.minus[static_cast<std::size_t>(m)] = t;
  }
  return c;
}

EstimationPlan build_plan(std::span<const ChannelPath> geometry, const SystemConfig& config, OrderRule rule) {
  if (geometry.empty()) throw std::invalid_argument("compute_order: empty delay list");
  if (config.l_max >= config.M - 1) {
    throw std::invalid_argument("compute_order: l_max = " + std::to_string(config.l_max) +
                                " leaves fewer than two data rows");
  }
  std::vector<int> delays;
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const int l = geometry[i].delay;
    if (l < 0 || l > config.l_max) throw std::invalid_argument("compute_order: delay outside [0, l_max]");
    if (i > 0 && l < delays.back()) throw std::invalid_argument("compute_order: delays must be sorted");
    delays.push_back(l);
  }

  EstimationPlan plan;
  const int D = config.M - config.l_max;
  plan.data_rows = D;
  auto counters = interference_counters(delays, D);
  plan.theta_plus = std::move(counters.plus);
  plan.theta_minus = std::move(counters.minus);

  int m_star = 0;
  if (rule == OrderRule::Successor) {
    for (int m = 0; m + 1 < D; ++m) {
      if (plan.theta_plus[static_cast<std::size_t>(m)] <= plan.theta_minus[static_cast<std::size_t>(m + 1)]) {
        m_star = m;
      }
    }
  } else {
    for (int m = 0; m < D; ++m) {
      if (plan.theta_plus[static_cast<std::size_t>(m)] <= plan.theta_minus[static_cast<std::size_t>(m)]) m_star = m;
    }
  }
  plan.m_star = m_star;
  for (int m = 0; m <= m_star; ++m) plan.order.push_back(m);
  for (int m = D - 1; m > m_star; --m) plan.order.push_back(m);

  const ChannelPath& first = geometry.front();
  const ChannelPath& last = geometry.back();
  plan.direction.resize(static_cast<std::size_t>(D));
  plan.obs_block.resize(static_cast<std::size_t>(D));
  plan.interference_sets.resize(static_cast<std::size_t>(D));
  for (int m = 0; m < D; ++m) {
    const bool fwd = m <= m_star;
    const int lp = fwd ? first.delay : last.delay;
    const int m2 = m + lp;
    plan.direction[static_cast<std::size_t>(m)] = fwd ? Direction::Forward : Direction::Backward;
    plan.obs_block[static_cast<std::size_t>(m)] = m2;
    auto& terms = plan.interference_sets[static_cast<std::size_t>(m)];
    for (const auto& p : geometry) {
      const int s = m2 - p.delay;
      if (p.delay == lp || s < 0 || s >= D) continue;
      const InterferenceTerm t{s, p.delay, mod(p.doppler, config.N)};
      const bool seen = std::any_of(terms.begin(), terms.end(), [&](const InterferenceTerm& q) {
        return q.delay == t.delay && q.kappa == t.kappa;
      });
      if (!seen) terms.push_back(t);
    }
  }
  return plan;
}

}  // namespace

EstimationPlan compute_order(std::span<const int> delays, const SystemConfig& config, OrderRule rule) {
  std::vector<ChannelPath> geometry;
  for (const int l : delays) geometry.push_back({Complex{1.0, 0.0}, l, 0});
  return build_plan(geometry, config, rule);
}

EstimationPlan compute_order(std::span<const ChannelPath> geometry, const SystemConfig& config, OrderRule rule) {
  return build_plan(geometry, config, rule);
}

CleanRow estimate_row_clean(const CVector& y_block, const RVector& principal, const SystemConfig& config) {
  AlignmentProblem prob;
  prob.principal = principal;
  prob.leakage = RVector::Zero(principal.size());
  prob.floor = config.sigma2;
  prob.p_max = config.p_s;
  const PowerPolicy pol = solve_power_control(prob);

  CleanRow out;
  out.design.p = pol.p;
  out.design.b = pol.p.cwiseSqrt().cast<Complex>();
  out.design.eta = pol.eta;
  out.design.floor = config.sigma2;
  out.design.leakage = prob.leakage;
  out.design.zeta = CVector(0);
  out.design.mse_analytic = alignment_mse(prob, pol.p, pol.eta);
  out.f_hat = y_block / std::sqrt(pol.eta);
  return out;
}

ZetaResult optimal_zeta(const RVector& prev_p, Real prev_eta, const RVector& prev_principal,
                        const CVector& cross_gains, const SystemConfig& config) {
  if (!(prev_eta > 0)) throw std::invalid_argument("optimal_zeta: eta_prev must be positive");
  const Eigen::Index U = prev_p.size();
  if (prev_principal.size() != U || cross_gains.size() != U) {
    throw std::invalid_argument("optimal_zeta: per-device vectors differ in length");
  }
  const Real s2 = config.sigma2;
  const Real den = (prev_p.array() * prev_principal.array().square()).sum() + s2;
  const Complex corr = (prev_p.cast<Complex>().array() * prev_principal.cast<Complex>().array() *
                        cross_gains.array()).sum();
  const Real power = (prev_p.array() * cross_gains.array().abs2()).sum();
  return {std::sqrt(prev_eta) * corr / den, power + s2 - std::norm(corr) / den};
}

Real zeta_energy(Complex zeta, const RVector& prev_p, Real prev_eta, const RVector& prev_principal,
                 const CVector& cross_gains, const SystemConfig& config) {
  const Real se = std::sqrt(prev_eta);
  Real e = config.sigma2 + std::norm(zeta) * config.sigma2 / prev_eta;
  for (Eigen::Index u = 0; u < prev_p.size(); ++u) {
    e += prev_p(u) * std::norm(cross_gains(u) - zeta * prev_principal(u) / se);
  }
  return e;
}

// ---------------------------------------------------------------------------

S2Design::S2Design(const ChannelRealization& channels, const SystemConfig& config, OrderRule rule)
    : config_(config) {
  config.validate();
  channels.validate(config);
  for (const auto& d : channels.devices) channels_.devices.push_back(merge_coincident(d));
  if (!channels_.shared_geometry()) {
    throw std::invalid_argument(
        "S2 needs one (delay, Doppler) list shared by all devices; use S1 or S3 for heterogeneous geometry");
  }
  // a tap that is silent on every device is not part of the geometry
  for (std::size_t i = channels_.devices.front().size(); i-- > 0;) {
    const bool silent = std::all_of(channels_.devices.begin(), channels_.devices.end(),
                                    [&](const DevicePaths& d) { return d[i].gain == Complex{}; });
    if (silent && channels_.devices.front().size() > 1) {
      for (auto& d : channels_.devices) d.erase(d.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  U_ = channels_.device_count();
  D_ = config.M - config.l_max;
  for (const auto& p : channels_.paths(0)) geometry_.push_back({Complex{}, p.delay, p.doppler});
  plan_ = compute_order(std::span<const ChannelPath>(geometry_), config, rule);

  rows_.resize(static_cast<std::size_t>(D_));
  forms_.resize(static_cast<std::size_t>(D_));
  done_.assign(static_cast<std::size_t>(D_), false);
  for (const int r : plan_.order) design_row(r);
}

Eigen::Index S2Design::data_index(int u, int row, int col) const {
  return (static_cast<Eigen::Index>(u) * D_ + row) * config_.N + mod(col, config_.N);
}

Eigen::Index S2Design::noise_index(int block, int col) const {
  return static_cast<Eigen::Index>(U_) * D_ * config_.N + static_cast<Eigen::Index>(block) * config_.N +
         mod(col, config_.N);
}

CVector S2Design::shifted(const CVector& f, int delta) const {
  const int N = config_.N;
  CVector out(f.size());
  for (Eigen::Index base = 0; base < f.size(); base += N) {
    for (int c = 0; c < N; ++c) out(base + mod(c + delta, N)) = f(base + c);
  }
  return out;
}

Complex S2Design::inner(const CVector& a, const CVector& b) const {
  const Eigen::Index nd = static_cast<Eigen::Index>(U_) * D_ * config_.N;
  const Eigen::Index nn = a.size() - nd;
  // E[a b^*]: unit-variance data cells, noise cells of variance sigma^2.
  return b.head(nd).dot(a.head(nd)) + config_.sigma2 * b.tail(nn).dot(a.tail(nn));
}

Complex S2Design::nu(int u, int m2, int l, int kappa) const {
  const int src = m2 - l;
  if (src < 0 || src >= D_) return {};
  Complex v{};
  for (const auto& p : channels_.paths(u)) {
    if (p.delay == l && mod(p.doppler, config_.N) == kappa) {
      v += p.gain * z_pow(static_cast<long long>(p.doppler) * src, config_.M, config_.N);
    }
  }
  return v;
}

void S2Design::design_row(int r) {
  const int N = config_.N;
  const Eigen::Index len = static_cast<Eigen::Index>(U_) * D_ * N + static_cast<Eigen::Index>(config_.M) * N;
  auto& est = rows_[static_cast<std::size_t>(r)];
  est.row = r;
  est.direction = plan_.direction[static_cast<std::size_t>(r)];
  const ChannelPath& pp = est.direction == Direction::Forward ? geometry_.front() : geometry_.back();
  est.principal_delay = pp.delay;
  est.principal_kappa = mod(pp.doppler, N);
  const int m2 = plan_.obs_block[static_cast<std::size_t>(r)];
  est.obs_block = m2;
  const int kp = est.principal_kappa;

  // Distinct taps (l, kappa) of the shared geometry.
  std::vector<std::pair<int, int>> taps;
  for (const auto& p : geometry_) {
    const std::pair<int, int> t{p.delay, mod(p.doppler, N)};
    if (std::find(taps.begin(), taps.end(), t) == taps.end()) taps.push_back(t);
  }

  // Cross-row interference plus the row's own noise cell.
  CVector interf = CVector::Zero(len);
  interf(noise_index(m2, kp)) = 1.0;
  std::vector<CVector> regressors;
  est.terms.clear();
  est.leakage = RVector::Zero(U_);
  RVector principal(U_);
  for (int u = 0; u < U_; ++u) principal(u) = std::abs(nu(u, m2, pp.delay, kp));

  for (const auto& [l, kappa] : taps) {
    const int s = m2 - l;
    if (s < 0 || s >= D_) continue;
    if (s == r) {
      if (kappa != kp) {
        for (int u = 0; u < U_; ++u) est.leakage(u) += std::norm(nu(u, m2, l, kappa));
      }
      continue;
    }
    if (!done_[static_cast<std::size_t>(s)]) {
      throw std::logic_error("S2 plan violation: row " + std::to_string(r) + " needs row " + std::to_string(s) +
                             " which is not yet estimated");
    }
    const auto& src = rows_[static_cast<std::size_t>(s)];
    for (int u = 0; u < U_; ++u) interf(data_index(u, s, kp - kappa)) += nu(u, m2, l, kappa) * src.b(u);
    regressors.push_back(shifted(forms_[static_cast<std::size_t>(s)], kp - kappa));
    est.terms.push_back({s, l, kappa});
  }

  // Jointly optimal cancellation weights.
  const auto T = static_cast<Eigen::Index>(regressors.size());
  est.zeta = CVector::Zero(T);
  CVector residual = interf;
  if (T > 0) {
    CMatrix A(T, T);
    CVector c(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (Eigen::Index q = 0; q < T; ++q) A(t, q) = inner(regressors[q], regressors[t]);
      c(t) = inner(interf, regressors[t]);
    }
    est.zeta = A.completeOrthogonalDecomposition().solve(c);
    if (!est.zeta.allFinite()) throw NumericalError("S2 cancellation weights are not finite");
    for (Eigen::Index t = 0; t < T; ++t) residual -= est.zeta(t) * regressors[t];
  }
  est.floor = inner(residual, residual).real();

  AlignmentProblem prob;
  prob.principal = principal;
  prob.leakage = est.leakage;
  prob.floor = est.floor;
  prob.p_max = config_.p_s;
  const PowerPolicy pol = solve_power_control(prob);
  est.p = pol.p;
  est.eta = pol.eta;
  est.b.resize(U_);
  for (int u = 0; u < U_; ++u) {
    const Complex g = nu(u, m2, pp.delay, kp);
    est.b(u) = std::sqrt(pol.p(u)) * std::conj(g) / std::abs(g);
  }

  CVector form = residual;
  for (const auto& [l, kappa] : taps) {
    if (l != pp.delay) continue;
    for (int u = 0; u < U_; ++u) form(data_index(u, r, kp - kappa)) += nu(u, m2, l, kappa) * est.b(u);
  }
  form /= std::sqrt(pol.eta);
  forms_[static_cast<std::size_t>(r)] = form;

  CVector err = form;
  for (int u = 0; u < U_; ++u) err(data_index(u, r, 0)) -= 1.0;
  est.mse_analytic = inner(err, err).real();
  done_[static_cast<std::size_t>(r)] = true;
}

Real S2Design::total_mse() const {
  Real s = 0.0;
  for (const auto& r : rows_) s += r.mse_analytic;
  return s / static_cast<Real>(rows_.size());
}

std::vector<CMatrix> S2Design::coefficients() const {
  std::vector<CMatrix> out;
  for (int u = 0; u < U_; ++u) {
    CMatrix b = CMatrix::Zero(config_.M, config_.N);
    for (int r = 0; r < D_; ++r) b.row(r).setConstant(rows_[static_cast<std::size_t>(r)].b(u));
    out.push_back(std::move(b));
  }
  return out;
}

S2Output run_s2(const S2Design& design, std::span<const DDFrame> frames, const ChannelRealization& channels,
                const DDFrame* noise, const SystemConfig& config) {
  const int N = config.N;
  const int D = design.data_rows();
  for (const auto& f : frames) {
    if (f.rows() != config.M || f.cols() != N) throw std::invalid_argument("run_s2: frame is not M x N");
    if (!f.grid().bottomRows(config.M - D).isZero(0.0)) {
      throw std::invalid_argument("run_s2: zero-padding rows of every frame must be exactly zero");
    }
  }
  const auto coeffs = design.coefficients();
  const DDFrame y = apply_channel_scalar(frames, coeffs, channels, noise, config);

  S2Output out;
  out.estimate = CMatrix::Zero(D, N);
  out.target = CMatrix::Zero(D, N);
  for (const auto& f : frames) out.target += f.grid().topRows(D);
  std::vector<bool> have(static_cast<std::size_t>(D), false);
  for (const int r : design.plan().order) {
    const auto& est = design.rows()[static_cast<std::size_t>(r)];
    for (const auto& t : est.terms) {
      if (!have[static_cast<std::size_t>(t.source_row)]) {
        throw std::logic_error("S2 execution: row " + std::to_string(t.source_row) + " used before estimation");
      }
    }
    const Real scale = 1.0 / std::sqrt(est.eta);
    for (int c = 0; c < N; ++c) {
      Complex v = y(est.obs_block, mod(c + est.principal_kappa, N));
      for (std::size_t t = 0; t < est.terms.size(); ++t) {
        const auto& term = est.terms[t];
        v -= est.zeta(static_cast<Eigen::Index>(t)) *
             out.estimate(term.source_row, mod(c + est.principal_kappa - term.kappa, N));
      }
      out.estimate(r, c) = v * scale;
    }
    have[static_cast<std::size_t>(r)] = true;
  }
  out.row_mse.resize(static_cast<std::size_t>(D));
  Real total = 0.0;
  for (int r = 0; r < D; ++r) {
    out.row_mse[static_cast<std::size_t>(r)] = (out.estimate.row(r) - out.target.row(r)).squaredNorm() / N;
    total += out.row_mse[static_cast<std::size_t>(r)];
  }
  out.total_mse = total / D;
  return out;
}

S2Output run_s2(std::span<const DDFrame> frames, const ChannelRealization& channels, const SystemConfig& config,
                RandomStream& rng) {
  const S2Design design(channels, config);
  const DDFrame w = random_noise(config.M, config.N, config.sigma2, rng);
  return run_s2(design, frames, channels, &w, config);
}

}  // namespace aircomp

// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/oracles.hpp"

#include "aircomp/otfs_io.hpp"
#include "aircomp/scheme_s1.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace aircomp {

OracleReport check_eta(int instances, std::uint64_t seed) {
  OracleReport rep{"eta", true, 0, 0.0, 1e-3, {}};
  std::ostringstream why;
  SystemConfig c;
  c.M = 8;
  c.N = 8;
  c.l_max = 7;
  c.k_max = 4;
  for (int i = 0; i < instances; ++i) {
    RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(i));
    c.U = rng.uniform_int(1, 10);
    c.set_snr_db(rng.uniform_int(-10, 40));
    const std::vector<int> counts(static_cast<std::size_t>(c.U), rng.uniform_int(1, 4));
    const auto ch = generate_channels(c, counts, rng);
    const Real closed = analytic_mse_s1(solve_s1(ch, c), ch, c);
    const Real grid = grid_search_eta(ch, c).mse;
    // closed form must not lose to the grid by more than the tolerance
    const Real gap = (closed - grid) / grid;
    rep.worst = std::max(rep.worst, gap);
    if (gap > rep.tolerance) {
      rep.passed = false;
      why << "instance " << i << ": closed " << closed << " grid " << grid << "; ";
    }
    ++rep.instances;
  }

  // Single-device closed cases at P_s = sigma^2 = 1.
  SystemConfig one;
  one.M = 8;
  one.N = 8;
  one.U = 1;
  one.p_s = 1.0;
  one.sigma2 = 1.0;
  one.l_max = 3;
  one.k_max = 2;
  const auto check_case = [&](const ChannelRealization& ch, Real eta, Real mse, const char* label) {
    const auto pol = solve_s1(ch, one);
    const Real e = analytic_mse_s1(pol, ch, one);
    const Real err = std::max(std::abs(pol.eta - eta) / eta, std::abs(e - mse) / mse);
    if (err > 1e-9) {
      rep.passed = false;
      why << label << ": eta " << pol.eta << " mse " << e << "; ";
    }
  };
  check_case(ChannelRealization{{{{Complex{1, 0}, 0, 0}}}}, 4.0, 0.5, "U=1 R=1");
  check_case(ChannelRealization{{{{Complex{1, 0}, 0, 0}, {Complex{0, 1}, 1, 1}}}}, 9.0, 2.0 / 3.0, "U=1 R=2");
  rep.detail = why.str();
  return rep;
}

OracleReport check_zeta(int instances, std::uint64_t seed) {
  OracleReport rep{"zeta", true, 0, 0.0, 1e-6, {}};
  std::ostringstream why;
  SystemConfig c;
  for (int i = 0; i < instances; ++i) {
    RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(i));
    const int U = rng.uniform_int(1, 10);
    c.p_s = 1.0;
    c.set_snr_db(rng.uniform_int(-5, 30));
    RVector p(U), a(U);
    CVector g(U);
    std::uniform_real_distribution<Real> unit(0.05, 1.0);
    for (int u = 0; u < U; ++u) {
      p(u) = unit(rng.engine());
      a(u) = std::abs(rng.complex_gaussian(1.0)) + 1e-3;
      g(u) = std::abs(rng.complex_gaussian(1.0));
    }
    const Real eta = unit(rng.engine()) * 5.0;
    const auto z = optimal_zeta(p, eta, a, g, c);
    const auto energy = [&](Real zr) { return zeta_energy(Complex{zr, 0.0}, p, eta, a, g, c); };

    // coarse grid over [0, 2 zeta* + 1], then a fine grid around the best cell
    Real lo = 0.0;
    Real hi = 2.0 * z.zeta.real() + 1.0;
    Real best = lo;
    for (int stage = 0; stage < 2; ++stage) {
      const Real step = (hi - lo) / 9999.0;
      Real best_e = std::numeric_limits<Real>::infinity();
      for (int k = 0; k < 10000; ++k) {
        const Real zr = lo + step * k;
        const Real e = energy(zr);
        if (e < best_e) {
          best_e = e;
          best = zr;
        }
      }
      lo = std::max(0.0, best - step);
      hi = best + step;
    }
    const Real e_grid = energy(best);
    const Real scale = std::max(std::abs(z.zeta), 1e-12);
    const Real err = std::max({std::abs(best - z.zeta.real()) / scale, (z.min_energy - e_grid) / e_grid,
                               std::abs(z.min_energy - energy(z.zeta.real())) / z.min_energy});
    rep.worst = std::max(rep.worst, err);
    if (err > rep.tolerance) {
      rep.passed = false;
      why << "instance " << i << ": zeta " << z.zeta.real() << " grid " << best << "; ";
    }
    ++rep.instances;
  }
  const auto zero = optimal_zeta(RVector::Ones(3), 2.0, RVector::Ones(3), CVector::Zero(3), c);
  if (zero.zeta != Complex{} || zero.min_energy != c.sigma2) {
    rep.passed = false;
    why << "zero cross gains: zeta " << zero.zeta << " energy " << zero.min_energy << "; ";
  }
  rep.detail = why.str();
  return rep;
}

OracleReport check_equivalence(int instances, std::uint64_t seed) {
  OracleReport rep{"equivalence", true, 0, 0.0, 1e-10, {}};
  std::ostringstream why;
  for (int i = 0; i < instances; ++i) {
    RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(i));
    SystemConfig c;
    c.M = rng.uniform_int(2, 8);
    c.N = rng.uniform_int(2, 8);
    c.U = 1;
    c.l_max = rng.uniform_int(0, c.M - 1);
    c.k_max = rng.uniform_int(0, c.N / 2);
    const std::vector<int> counts{rng.uniform_int(1, 5)};
    const auto ch = generate_channels(c, counts, rng);
    DDFrame x(c.M, c.N);
    for (int l = 0; l < c.M; ++l) {
      for (int k = 0; k < c.N; ++k) x(l, k) = rng.complex_gaussian(1.0);
    }
    const std::vector<DDFrame> frames{x};
    const DDFrame y = apply_channel_scalar(frames, {}, ch, nullptr, c);
    const CMatrix H = build_channel_matrix(ch.paths(0), c);
    const CVector hy = H * x.vectorize(Vectorization::ColMajor);
    Real err = (hy - y.vectorize(Vectorization::ColMajor)).cwiseAbs().maxCoeff();

    DDFrame xz = x;
    xz.grid().bottomRows(c.l_max).setZero();
    const std::vector<DDFrame> zframes{xz};
    const DDFrame yz = apply_channel_scalar(zframes, {}, ch, nullptr, c);
    const CMatrix K = build_zp_blocks(ch.paths(0), c).to_dense();
    const CVector ky = K * xz.vectorize(Vectorization::RowMajor);
    err = std::max(err, (ky - yz.vectorize(Vectorization::RowMajor)).cwiseAbs().maxCoeff());
    rep.worst = std::max(rep.worst, err);
    if (err > rep.tolerance) {
      rep.passed = false;
      why << "instance " << i << " (M=" << c.M << ",N=" << c.N << "): " << err << "; ";
    }
    ++rep.instances;
  }
  rep.detail = why.str();
  return rep;
}

OracleReport check_empirical(int configs, long long samples, std::uint64_t seed, int workers) {
  OracleReport rep{"empirical", true, 0, 0.0, 0.05, {}};
  constexpr std::array kAll{Scheme::S1, Scheme::S2, Scheme::S3, Scheme::B1, Scheme::B2, Scheme::B3, Scheme::B4};
  struct Cell {
    Real analytic = 0, empirical = 0;
    std::string label;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(configs) * kAll.size());
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i = next++; i < configs; i = next++) {
      RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(i));
      SystemConfig c;
      c.M = rng.uniform_int(3, 4);
      c.N = rng.uniform_int(2, 4);
      c.U = rng.uniform_int(1, 4);
      c.l_max = rng.uniform_int(0, c.M - 2);
      c.k_max = rng.uniform_int(0, c.N / 2);
      c.set_snr_db(rng.uniform_int(0, 20));
      const int R = rng.uniform_int(1, std::min(3, (c.l_max + 1) * (2 * c.k_max + 1)));
      const auto ch = generate_shared_geometry_channels(c, R, rng, true);
      for (std::size_t s = 0; s < kAll.size(); ++s) {
        const auto solved = solve_scheme(kAll[s], ch, c, 10);
        RandomStream er = RandomStream::substream(seed ^ 0x51ed5eedULL, static_cast<std::uint64_t>(i) * 16 + s);
        auto& cell = cells[static_cast<std::size_t>(i) * kAll.size() + s];
        cell.analytic = solved.mse;
        cell.empirical = empirical_mse(solved, ch, c, samples, SymbolAlphabet::Rademacher, er);
        std::ostringstream l;
        l << scheme_name(kAll[s]) << " config " << i << " (M=" << c.M << ",N=" << c.N << ",U=" << c.U << ",R=" << R
          << ")";
        cell.label = l.str();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::max(1, workers); ++w) pool.emplace_back(work);
  }
  std::ostringstream why;
  for (const auto& cell : cells) {
    const Real rel = std::abs(cell.empirical - cell.analytic) / cell.analytic;
    rep.worst = std::max(rep.worst, rel);
    if (rel > rep.tolerance) {
      rep.passed = false;
      why << cell.label << ": analytic " << cell.analytic << " empirical " << cell.empirical << "; ";
    }
    ++rep.instances;
  }
  rep.detail = why.str();
  return rep;
}

}  // namespace aircomp

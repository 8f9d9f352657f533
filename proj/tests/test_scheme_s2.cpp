// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/harness.hpp"
#include "aircomp/otfs_io.hpp"
#include "aircomp/scheme_s1.hpp"
#include "aircomp/scheme_s2.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace aircomp;
using aircomp::test::small_config;

namespace {

SystemConfig order_config(int M, int l_max) { return small_config(M, 4, 1, l_max, 1); }

int m_star(std::vector<int> delays, int M, OrderRule rule = OrderRule::Successor) {
  const int l_max = delays.back();
  return compute_order(std::span<const int>(delays), order_config(M, l_max), rule).m_star;
}

ChannelRealization with_geometry(const std::vector<std::pair<int, int>>& geometry, int U, RandomStream& rng) {
  ChannelRealization ch;
  const Real var = 1.0 / static_cast<Real>(geometry.size());
  for (int u = 0; u < U; ++u) {
    DevicePaths d;
    for (const auto& [l, k] : geometry) d.push_back({rng.complex_gaussian(var), l, k});
    ch.devices.push_back(d);
  }
  return ch;
}

Real row_objective(const RowEstimate& row, const RVector& principal, Real p_s) {
  AlignmentProblem prob;
  prob.principal = principal;
  prob.leakage = row.leakage;
  prob.floor = row.floor;
  prob.p_max = p_s;
  return alignment_mse(prob, row.p, row.eta);
}

}  // namespace

TEST_CASE("ordering reproduces the crossover rows") {
  CHECK(m_star({0, 2, 4, 5}, 16) == 5);
  CHECK(m_star({0, 0, 4, 5}, 16) == 4);
  CHECK(m_star({0, 2, 2, 5}, 16) == 3);
  CHECK(m_star({0, 1, 2, 3}, 8) == 1);
}

TEST_CASE("same-row comparison gives a different crossover") {
  // Comparing theta+ and theta- on the same row shifts every crossover by one.
  CHECK(m_star({0, 2, 4, 5}, 16, OrderRule::SameRow) == 6);
  CHECK(m_star({0, 0, 4, 5}, 16, OrderRule::SameRow) == 5);
  CHECK(m_star({0, 2, 2, 5}, 16, OrderRule::SameRow) == 4);
}

TEST_CASE("single-path geometry estimates rows in natural order") {
  const std::vector<int> d{0};
  const auto plan = compute_order(std::span<const int>(d), order_config(8, 2));
  REQUIRE(plan.data_rows == 6);
  CHECK(plan.order == std::vector<int>{0, 1, 2, 3, 4, 5});
  for (const auto& s : plan.interference_sets) CHECK(s.empty());
}

TEST_CASE("plan references only rows estimated earlier") {
  RandomStream rng(1);
  for (int t = 0; t < 200; ++t) {
    SystemConfig c = small_config(16, 4, 1, 5, 2);
    std::vector<ChannelPath> g;
    const int R = rng.uniform_int(1, 5);
    for (int i = 0; i < R; ++i) g.push_back({1.0, rng.uniform_int(0, 5), rng.uniform_int(-2, 2)});
    std::stable_sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.delay < b.delay; });
    const auto plan = compute_order(std::span<const ChannelPath>(g), c);
    std::vector<int> pos(static_cast<std::size_t>(plan.data_rows));
    for (std::size_t i = 0; i < plan.order.size(); ++i) pos[static_cast<std::size_t>(plan.order[i])] = static_cast<int>(i);
    // a permutation of the data rows
    std::vector<int> sorted = plan.order;
    std::sort(sorted.begin(), sorted.end());
    for (int m = 0; m < plan.data_rows; ++m) CHECK(sorted[static_cast<std::size_t>(m)] == m);
    for (int m = 0; m < plan.data_rows; ++m) {
      for (const auto& term : plan.interference_sets[static_cast<std::size_t>(m)]) {
        CHECK(pos[static_cast<std::size_t>(term.source_row)] < pos[static_cast<std::size_t>(m)]);
      }
    }
    // first forward row and last backward row are interference-free
    CHECK(plan.interference_sets.front().empty());
    CHECK(plan.interference_sets.back().empty());
  }
}

TEST_CASE("ordering rejects unusable geometry") {
  const std::vector<int> unsorted{2, 0};
  CHECK_THROWS_AS(compute_order(std::span<const int>(unsorted), order_config(8, 3)), std::invalid_argument);
  const std::vector<int> too_long{0, 4};
  CHECK_THROWS_AS(compute_order(std::span<const int>(too_long), order_config(8, 3)), std::invalid_argument);
  const std::vector<int> d{0, 1};
  CHECK_THROWS_AS(compute_order(std::span<const int>(d), order_config(8, 7)), std::invalid_argument);
}

TEST_CASE("clean row") {
  const SystemConfig c = small_config(8, 4, 1, 2, 1);
  CVector y(4);
  y << 1.0, 2.0, -1.0, 0.5;
  const auto r = estimate_row_clean(y, RVector::Constant(1, 1.0), c);
  CHECK(r.design.eta == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.design.p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.design.mse_analytic == doctest::Approx(0.5).epsilon(1e-12));
  CHECK((r.f_hat - y / 2.0).cwiseAbs().maxCoeff() < 1e-15);

  const SystemConfig quiet = small_config(8, 4, 3, 2, 1, 1e-12);
  RVector a(3);
  a << 0.5, 0.9, 1.4;
  const auto q = estimate_row_clean(CVector::Zero(4), a, quiet);
  CHECK(q.design.mse_analytic < 1e-9);
  for (int u = 0; u < 3; ++u) CHECK(std::sqrt(q.design.p(u)) * a(u) == doctest::Approx(std::sqrt(q.design.eta)).epsilon(1e-9));
}

TEST_CASE("optimal cancellation weight") {
  const SystemConfig c = small_config(8, 4, 2, 2, 1);
  // no cross gain: nothing to cancel
  const auto z0 = optimal_zeta(RVector::Constant(2, 0.8), 3.0, RVector::Constant(2, 0.7), CVector::Zero(2), c);
  CHECK(z0.zeta == Complex(0, 0));
  CHECK(z0.min_energy == c.sigma2);

  const auto z1 = optimal_zeta(RVector::Constant(1, 1.0), 4.0, RVector::Constant(1, 1.0), CVector::Constant(1, 1.0), c);
  CHECK(std::abs(z1.zeta - Complex(1, 0)) < 1e-14);
  CHECK(z1.min_energy == doctest::Approx(1.5).epsilon(1e-14));

  RandomStream rng(2);
  for (int t = 0; t < 100; ++t) {
    const int U = rng.uniform_int(1, 6);
    SystemConfig cc = small_config(8, 4, U, 2, 1, 0.05 + 0.5 * std::abs(rng.gaussian()));
    RVector p(U), a(U);
    CVector g(U);
    for (int u = 0; u < U; ++u) {
      p(u) = 0.1 + std::abs(rng.gaussian());
      a(u) = 0.1 + std::abs(rng.gaussian());
      g(u) = rng.complex_gaussian(1.0);
    }
    const Real eta = 0.2 + std::abs(rng.gaussian());
    const auto z = optimal_zeta(p, eta, a, g, cc);
    CHECK(zeta_energy(z.zeta, p, eta, a, g, cc) == doctest::Approx(z.min_energy).epsilon(1e-12));
    for (const Real f : {0.99, 1.01}) {
      CHECK(zeta_energy(z.zeta * f, p, eta, a, g, cc) >= z.min_energy);
      CHECK(zeta_energy(z.zeta * std::polar(1.0, f - 1.0), p, eta, a, g, cc) >= z.min_energy);
    }
  }
}

TEST_CASE("single-path channels make every row clean") {
  SystemConfig c = small_config(8, 4, 3, 2, 1, 0.2);
  RandomStream rng(3);
  const auto ch = with_geometry({{1, 1}}, 3, rng);
  const S2Design design(ch, c);
  RVector a(3);
  for (int u = 0; u < 3; ++u) a(u) = std::abs(ch.paths(u)[0].gain);
  const Real clean = estimate_row_clean(CVector::Zero(4), a, c).design.mse_analytic;
  for (const auto& row : design.rows()) {
    CHECK(row.terms.empty());
    CHECK(row.mse_analytic == doctest::Approx(clean).epsilon(1e-12));
  }
  CHECK(design.total_mse() == doctest::Approx(clean).epsilon(1e-12));
}

TEST_CASE("one cancelled term matches the closed-form weight") {
  SystemConfig c = small_config(8, 4, 3, 2, 1, 0.3);
  RandomStream rng(4);
  int checked = 0;
  for (int t = 0; t < 20; ++t) {
    const auto ch = with_geometry({{0, 0}, {2, 1}}, 3, rng);
    const S2Design design(ch, c);
    for (const auto& row : design.rows()) {
      if (row.terms.size() != 1) continue;
      const auto& term = row.terms.front();
      const auto& src = design.rows()[static_cast<std::size_t>(term.source_row)];
      if (!src.terms.empty()) continue;
      RVector a(3);
      CVector g(3);
      for (int u = 0; u < 3; ++u) {
        const auto zp_src = build_zp_blocks(ch.paths(u), c);
        const Complex nu_src = zp_src.nu(src.obs_block, src.principal_delay, src.principal_kappa);
        a(u) = std::abs(nu_src);
        const Complex nu_int = zp_src.nu(row.obs_block, term.delay, term.kappa);
        g(u) = nu_int * src.b(u) / std::sqrt(src.p(u));
      }
      const auto z = optimal_zeta(src.p, src.eta, a, g, c);
      CHECK(std::abs(row.zeta(0) - z.zeta) < 1e-10);
      CHECK(row.floor == doctest::Approx(z.min_energy).epsilon(1e-10));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("row MSE equals the alignment objective and stays above the noise floor") {
  SystemConfig c = small_config(16, 4, 4, 5, 2, 0.1);
  RandomStream rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto ch = generate_shared_geometry_channels(c, 4, rng);
    const S2Design design(ch, c);
    for (const auto& row : design.rows()) {
      RVector a(4);
      for (int u = 0; u < 4; ++u) {
        const auto merged = merge_coincident(ch.paths(u));
        a(u) = std::abs(build_zp_blocks(merged, c).nu(row.obs_block, row.principal_delay, row.principal_kappa));
      }
      CHECK(row.mse_analytic == doctest::Approx(row_objective(row, a, c.p_s)).epsilon(1e-9));
      CHECK(row.mse_analytic >= c.sigma2 / row.eta * (1 - 1e-12));
      CHECK(row.floor >= c.sigma2 * (1 - 1e-12));
      for (int u = 0; u < 4; ++u) CHECK(row.p(u) <= c.p_s + 1e-12);
    }
  }
}

TEST_CASE("shared first delay leaks into the row") {
  SystemConfig c = small_config(8, 4, 2, 2, 1, 0.1);
  RandomStream rng(6);
  const auto ch = with_geometry({{0, 0}, {0, 1}, {2, -1}}, 2, rng);
  const S2Design design(ch, c);
  bool leaked = false;
  for (const auto& row : design.rows()) {
    if (row.principal_delay == 0) {
      for (int u = 0; u < 2; ++u) CHECK(row.leakage(u) == doctest::Approx(std::norm(ch.paths(u)[1].gain)).epsilon(1e-12));
      leaked = true;
    }
  }
  CHECK(leaked);
}

TEST_CASE("a zero-gain duplicate path changes nothing") {
  SystemConfig c = small_config(8, 4, 2, 2, 1, 0.1);
  RandomStream rng(7);
  for (int t = 0; t < 10; ++t) {
    const auto base = with_geometry({{0, 0}, {2, 1}}, 2, rng);
    for (const auto& extra : {ChannelPath{0.0, 0, -1}, ChannelPath{0.0, 1, 1}, ChannelPath{0.0, 2, 0}}) {
      auto dup = base;
      for (auto& d : dup.devices) {
        d.push_back(extra);
        sort_by_delay(d);
      }
      const S2Design a(base, c);
      const S2Design b(dup, c);
      CHECK(b.plan().order == a.plan().order);
      CHECK(b.total_mse() == doctest::Approx(a.total_mse()).epsilon(1e-12));
    }
  }
}

TEST_CASE("S2 MSE falls with SNR on a fixed channel") {
  SystemConfig c = small_config(8, 8, 5, 3, 3);
  RandomStream rng(8);
  const auto ch = with_geometry({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 5, rng);
  Real prev = std::numeric_limits<Real>::infinity();
  for (int snr = 0; snr <= 40; snr += 5) {
    c.set_snr_db(snr);
    const Real e = S2Design(ch, c).total_mse();
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("with one device the cancellation residual vanishes at high SNR") {
  // With several devices the interference weights differ from the weights of
  // the previous estimate, which leaves a floor; a single device has none.
  SystemConfig c = small_config(8, 8, 1, 3, 3);
  RandomStream rng(15);
  const auto ch = with_geometry({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 1, rng);
  c.set_snr_db(80.0);
  CHECK(S2Design(ch, c).total_mse() < 1e-5);

  SystemConfig c5 = small_config(8, 8, 5, 3, 3);
  const auto ch5 = with_geometry({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 5, rng);
  c5.set_snr_db(80.0);
  const Real hi = S2Design(ch5, c5).total_mse();
  c5.set_snr_db(100.0);
  CHECK(S2Design(ch5, c5).total_mse() == doctest::Approx(hi).epsilon(1e-3));
  CHECK(hi > 1e-3);
}

TEST_CASE("S2 beats S1 on the staircase geometry") {
  SystemConfig c = small_config(8, 8, 5, 3, 3);
  c.set_snr_db(10.0);
  RandomStream rng(9);
  Real s1 = 0.0, s2 = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto ch = with_geometry({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 5, rng);
    s1 += analytic_mse_s1(solve_s1(ch, c), ch, c);
    s2 += S2Design(ch, c).total_mse();
  }
  CHECK(s2 < s1);
}

TEST_CASE("transmit coefficients vanish on zero-padding rows") {
  SystemConfig c = small_config(8, 4, 3, 2, 1);
  RandomStream rng(10);
  const auto ch = generate_shared_geometry_channels(c, 3, rng);
  const S2Design design(ch, c);
  for (const auto& b : design.coefficients()) {
    CHECK(b.rows() == 8);
    CHECK(b.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.topRows(6).cwiseAbs().minCoeff() > 0.0);
  }
}

TEST_CASE("S2 input checks") {
  SystemConfig c = small_config(8, 4, 2, 2, 1);
  RandomStream rng(11);
  const std::vector<int> counts{2, 2};
  auto hetero = generate_channels(c, counts, rng, true);
  hetero.devices[1][0].delay = hetero.devices[0][0].delay == 0 ? 1 : 0;
  sort_by_delay(hetero.devices[1]);
  CHECK_THROWS_AS(S2Design(hetero, c), std::invalid_argument);

  const auto ch = generate_shared_geometry_channels(c, 2, rng);
  const S2Design design(ch, c);
  std::vector<DDFrame> x{random_symbols(8, 4, SymbolAlphabet::Rademacher, rng),
                         random_symbols(8, 4, SymbolAlphabet::Rademacher, rng)};
  CHECK_THROWS_AS(run_s2(design, x, ch, nullptr, c), std::invalid_argument);
  for (auto& f : x) f.grid().bottomRows(2).setZero();
  CHECK_NOTHROW(run_s2(design, x, ch, nullptr, c));
}

TEST_CASE("S2 empirical MSE matches the analytic value") {
  SystemConfig c = small_config(8, 4, 2, 2, 1, 0.1);
  RandomStream rng(12);
  for (const auto& geometry : {std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, -1}},
                               std::vector<std::pair<int, int>>{{0, 1}, {0, 0}, {2, 1}}}) {
    const auto ch = with_geometry(geometry, 2, rng);
    const auto solved = solve_scheme(Scheme::S2, ch, c);
    RandomStream er(13);
    const Real emp = empirical_mse(solved, ch, c, 200000, SymbolAlphabet::Rademacher, er);
    CHECK(std::abs(emp - solved.mse) <= 0.05 * solved.mse);
  }
}

TEST_CASE("noise-free S2 run reproduces the linear forms") {
  SystemConfig c = small_config(8, 4, 2, 2, 1, 0.2);
  RandomStream rng(14);
  const auto ch = with_geometry({{0, 0}, {1, 1}, {2, -1}}, 2, rng);
  const S2Design design(ch, c);
  std::vector<DDFrame> x{random_symbols(8, 4, SymbolAlphabet::RealGaussian, rng),
                         random_symbols(8, 4, SymbolAlphabet::RealGaussian, rng)};
  for (auto& f : x) f.grid().bottomRows(2).setZero();
  const DDFrame w = random_noise(8, 4, c.sigma2, rng);
  const auto out = run_s2(design, x, ch, &w, c);
  for (int r = 0; r < design.data_rows(); ++r) {
    for (int col = 0; col < 4; ++col) {
      // form(r) is written for column 0; column col is the same form rotated by col
      const CVector& f = design.form(r);
      Complex v{};
      for (int u = 0; u < 2; ++u) {
        for (int s = 0; s < design.data_rows(); ++s) {
          for (int k = 0; k < 4; ++k) v += f(design.data_index(u, s, k)) * x[u](s, mod(k + col, 4));
        }
      }
      for (int m = 0; m < 8; ++m) {
        for (int k = 0; k < 4; ++k) v += f(design.noise_index(m, k)) * w(m, mod(k + col, 4));
      }
      CHECK(std::abs(out.estimate(r, col) - v) < 1e-10);
    }
  }
}

TEST_CASE("a repeated middle delay costs no more than a distinct one") {
  // [0,2,2,5] against [0,2,4,5] on matched gains. Not universal: at M = 8,
  // [0,1,1] loses to [0,1,2].
  SystemConfig c = small_config(16, 4, 3, 5, 1, 0.1);
  RandomStream rng(16);
  Real same = 0.0, distinct = 0.0;
  for (int t = 0; t < 1000; ++t) {
    ChannelRealization a, b;
    for (int u = 0; u < 3; ++u) {
      const Complex g0 = rng.complex_gaussian(0.25), g1 = rng.complex_gaussian(0.25);
      const Complex g2 = rng.complex_gaussian(0.25), g3 = rng.complex_gaussian(0.25);
      a.devices.push_back({{g0, 0, 0}, {g1, 2, 1}, {g2, 2, -1}, {g3, 5, 0}});
      b.devices.push_back({{g0, 0, 0}, {g1, 2, 1}, {g2, 4, -1}, {g3, 5, 0}});
    }
    same += S2Design(a, c).total_mse();
    distinct += S2Design(b, c).total_mse();
  }
  CHECK(same <= distinct);
}

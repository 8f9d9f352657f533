// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#include "aircomp/harness.hpp"
#include "aircomp/oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace aircomp;
using aircomp::test::small_config;

namespace {

std::string csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_results(rows, out);
  return out.str();
}

// Every column except runtime_ms, which is wall-clock.
std::vector<ResultRow> without_runtime(std::vector<ResultRow> rows) {
  for (auto& r : rows) r.runtime_ms = 0.0;
  return rows;
}

Real spearman(const std::vector<Real>& x, const std::vector<Real>& y) {
  const auto ranks = [](const std::vector<Real>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<Real> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<Real>(i);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const Real n = static_cast<Real>(x.size());
  Real d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1));
}

ExperimentSpec desk_spec() {
  ExperimentSpec s;
  s.config = small_config(8, 8, 5, 3, 3);
  s.paths = 3;
  s.trials = 20;
  return s;
}

}  // namespace

TEST_CASE("scheme and variable names") {
  CHECK(parse_scheme("s1") == Scheme::S1);
  CHECK(parse_scheme(" B3 ") == Scheme::B3);
  CHECK_THROWS_AS(parse_scheme("s9"), std::invalid_argument);
  CHECK(parse_scheme_list("s1,S2,b4") == std::vector<Scheme>{Scheme::S1, Scheme::S2, Scheme::B4});
  CHECK(scheme_name(Scheme::B2) == "b2");
  for (const auto v : {SweepVar::SnrDb, SweepVar::Devices, SweepVar::Paths, SweepVar::Iterations, SweepVar::FrameSize,
                       SweepVar::KMax, SweepVar::SpeedKmh}) {
    CHECK(parse_sweep_var(sweep_var_name(v)) == v);
  }
  CHECK_THROWS_AS(parse_sweep_var("bogus"), std::invalid_argument);
}

TEST_CASE("range parsing") {
  CHECK(parse_range("0:10:40") == std::vector<Real>{0, 10, 20, 30, 40});
  CHECK(parse_range("40:-20:0") == std::vector<Real>{40, 20, 0});
  CHECK(parse_range("5,10,20") == std::vector<Real>{5, 10, 20});
  CHECK(parse_range("7") == std::vector<Real>{7});
  CHECK_THROWS_AS(parse_range(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_range("0:0:5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_range("0:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_range("5,3,4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_range("1,x"), std::invalid_argument);
}

TEST_CASE("sweep values map onto the configuration") {
  SystemConfig c;
  int R = 4, rounds = 10;
  apply_sweep_value(SweepVar::SnrDb, 20.0, c, R, rounds);
  CHECK(c.sigma2 == doctest::Approx(0.01));
  apply_sweep_value(SweepVar::Devices, 7, c, R, rounds);
  CHECK(c.U == 7);
  apply_sweep_value(SweepVar::Paths, 2, c, R, rounds);
  CHECK(R == 2);
  apply_sweep_value(SweepVar::Iterations, 3, c, R, rounds);
  CHECK(rounds == 3);
  apply_sweep_value(SweepVar::FrameSize, 512, c, R, rounds);
  CHECK(c.M == 32);
  CHECK(c.N == 16);
  apply_sweep_value(SweepVar::FrameSize, 64, c, R, rounds);
  CHECK(c.M == 8);
  CHECK(c.N == 8);
  CHECK(c.l_max <= 6);
  CHECK(c.k_max <= 4);
  CHECK_NOTHROW(c.validate());
  apply_sweep_value(SweepVar::SpeedKmh, 0, c, R, rounds);
  CHECK(c.k_max == 0);
  CHECK_THROWS_AS(apply_sweep_value(SweepVar::Devices, 2.5, c, R, rounds), std::invalid_argument);
}

TEST_CASE("config loader") {
  ExperimentSpec s;
  load_spec_config(nlohmann::json{{"M", 8}, {"N", 4}, {"U", 3}, {"l_max", 2}, {"k_max", 1}, {"snr_db", 10.0},
                                  {"paths", 2}, {"symbol_alphabet", "real_gaussian"}},
                   s);
  CHECK(s.config.M == 8);
  CHECK(s.config.sigma2 == doctest::Approx(0.1));
  CHECK(s.paths == 2);
  CHECK(s.alphabet == SymbolAlphabet::RealGaussian);

  ExperimentSpec t;
  CHECK_THROWS_AS(load_spec_config(nlohmann::json{{"Mm", 8}}, t), std::invalid_argument);
  CHECK_THROWS_AS(load_spec_config(nlohmann::json{{"sigma2", 1.0}, {"snr_db", 0.0}}, t), std::invalid_argument);
  CHECK_THROWS_AS(load_spec_config(nlohmann::json{{"M", "eight"}}, t), std::invalid_argument);
  CHECK_THROWS_AS(load_spec_config(nlohmann::json{{"k_max", 100}}, t), std::invalid_argument);
  CHECK_THROWS_AS(load_spec_config_file("/nonexistent/config.json", t), std::invalid_argument);
}

TEST_CASE("spec validation") {
  ExperimentSpec s = desk_spec();
  s.schemes = {Scheme::S2};
  s.shared_geometry = false;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.shared_geometry = true;
  s.trials = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.trials = 1;
  s.config.l_max = 7;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("results CSV") {
  CHECK(csv({}) == std::string(kCsvHeader) + "\n");

  ResultRow r;
  r.scheme = "s3";
  r.sweep_var = "snr_db";
  r.sweep_value = 12.5;
  r.M = 8;
  r.N = 4;
  r.U = 3;
  r.R = 2;
  r.trials = 10;
  r.mse_analytic = 1.0 / 3.0;
  r.mse_empirical = std::numeric_limits<Real>::quiet_NaN();
  r.mse_std = 0.125;
  r.runtime_ms = 3.25;
  r.seed = 18446744073709551615ull;
  std::istringstream in(csv({r, r}));
  const auto back = parse_results(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].scheme == "s3");
  CHECK(back[0].sweep_value == r.sweep_value);
  CHECK(back[0].mse_analytic == r.mse_analytic);
  CHECK(std::isnan(back[0].mse_empirical));
  CHECK(back[0].seed == r.seed);
  CHECK(csv(back) == csv({r, r}));

  std::istringstream bad("scheme,oops\n");
  CHECK_THROWS_AS(parse_results(bad), std::invalid_argument);

  const auto path = (std::filesystem::temp_directory_path() / "aircomp_results_test.csv").string();
  emit_results({r}, path);
  CHECK(csv(read_results(path)) == csv({r}));
  std::remove(path.c_str());
}

TEST_CASE("sweeps are reproducible and independent of worker count") {
  ExperimentSpec s = desk_spec();
  s.schemes = {Scheme::S1, Scheme::S2, Scheme::B4};
  s.values = {0.0, 20.0};
  s.trials = 6;
  s.empirical_samples = 2000;
  const auto a = run_sweep(s);
  REQUIRE(a.size() == 6);  // one row per (scheme, value)
  CHECK(a[0].scheme == "s1");
  CHECK(a[2].scheme == "b4");
  CHECK(a[3].sweep_value == 20.0);
  const auto b = run_sweep(s);
  CHECK(csv(without_runtime(a)) == csv(without_runtime(b)));
  s.workers = 3;
  const auto c = run_sweep(s);
  CHECK(csv(without_runtime(a)) == csv(without_runtime(c)));

  s.trials = 1;
  s.workers = 1;
  CHECK(csv(without_runtime(run_sweep(s))) == csv(without_runtime(run_sweep(s))));
}

TEST_CASE("per-symbol view divides by U squared") {
  ExperimentSpec s = desk_spec();
  s.trials = 4;
  const auto raw = run_sweep(s);
  s.per_symbol = true;
  const auto ps = run_sweep(s);
  CHECK(ps[0].mse_analytic == doctest::Approx(raw[0].mse_analytic / 25.0).epsilon(1e-12));
}

TEST_CASE("S1 over SNR at full scale decreases then levels off") {
  ExperimentSpec s;
  s.schemes = {Scheme::S1};
  s.values = parse_range("0:5:40");
  s.trials = 1000;
  s.paths = 4;
  const auto rows = run_sweep(s);
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mse_analytic <= rows[i - 1].mse_analytic);
  const Real drop_low = rows[0].mse_analytic - rows[2].mse_analytic;
  const Real drop_high = rows[6].mse_analytic - rows[8].mse_analytic;
  CHECK(drop_high < 0.05 * drop_low);
}

TEST_CASE("S1 MSE falls with the number of devices") {
  ExperimentSpec s = desk_spec();
  s.schemes = {Scheme::S1};
  s.var = SweepVar::Devices;
  s.values = parse_range("5:5:30");
  s.trials = 200;
  s.per_symbol = true;
  const auto rows = run_sweep(s);
  std::vector<Real> u, e;
  for (const auto& r : rows) {
    u.push_back(r.sweep_value);
    e.push_back(r.mse_analytic);
  }
  CHECK(spearman(u, e) < 0);
}

TEST_CASE("empirical MSE vanishes with noise under perfect inversion") {
  SystemConfig c = small_config(8, 8, 3, 3, 3, 1e-30);
  const auto ch = aircomp::test::single_path({0.9, Complex(0, 0.7), -1.2});
  const auto solved = solve_scheme(Scheme::S1, ch, c);
  RandomStream er(1);
  CHECK(empirical_mse(solved, ch, c, 10000, SymbolAlphabet::Rademacher, er) < 1e-12);
  CHECK(solved.mse < 1e-12);
}

TEST_CASE("runtime measurement") {
  ExperimentSpec s = desk_spec();
  const auto st = measure_runtime(Scheme::S1, s, 3, 0);
  CHECK(st.samples == 3);
  CHECK(st.median_ms > 0);
  CHECK(st.mean_ms > 0);
  CHECK_THROWS_AS(measure_runtime(Scheme::S1, s, 0), std::invalid_argument);
}

TEST_CASE("oracle smoke run") {
  CHECK(check_eta(5, 1).passed);
  CHECK(check_zeta(5, 1).passed);
  CHECK(check_equivalence(5, 1).passed);
  const auto emp = check_empirical(1, 50000, 1);
  CHECK(emp.passed);
  CHECK(emp.instances == 7);
}

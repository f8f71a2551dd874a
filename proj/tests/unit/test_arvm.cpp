#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hfcov/arvm.hpp"
#include "hfcov/simulate.hpp"
#include "oracles.hpp"

using namespace hfcov;

TEST_CASE("realized covol: constant prices give zero") {
  const Panel p({TickSeries("a", {0.0, 0.4, 1.0}, {5, 5, 5}), TickSeries("b", {0.1, 0.2}, {1, 1})});
  const GridSpec g(3, 3);
  const SyncTable s = resolve_previous_ticks(p, g);
  CHECK(realized_covol(p, 0, 1, s, 0) == 0.0);
  CHECK(realized_covol(p, 0, 0, s, 0) == 0.0);
}

TEST_CASE("realized covol: prices equal to times on a full m=4 grid") {
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  const Panel p({TickSeries("a", t, t)});
  const SyncTable s = resolve_previous_ticks(p, GridSpec(4, 4));
  CHECK(realized_covol(p, 0, 0, s, 0) == 0.25);
}

TEST_CASE("realized covol: hand-traced previous ticks") {
  const Panel p({TickSeries("i", {0.0, 0.3, 0.6, 0.9}, {0, 1, 2, 3}), TickSeries("j", {0.0, 0.5, 1.0}, {0, 1, 2})});
  REQUIRE(p.avg_sample_size() == 4);
  const SyncTable s = resolve_previous_ticks(p, GridSpec(4, 2));
  CHECK(realized_covol(p, 0, 1, s, 0) == 3.0);
  CHECK(realized_covol(p, 1, 0, s, 0) == 3.0);
  CHECK_THROWS_AS(realized_covol(p, 0, 2, s, 0), std::out_of_range);
  CHECK_THROWS_AS(realized_covol(p, 0, 1, s, 2), std::out_of_range);
}

TEST_CASE("realized matrix") {
  const Panel one({TickSeries("a", {0.0, 0.5, 1.0}, {0, 1, 3})});
  const SyncTable s1 = resolve_previous_ticks(one, GridSpec(3, 2));
  const VolMatrix m1 = realized_matrix(one, s1, 0);
  CHECK(m1.dim() == 1);
  CHECK(m1(0, 0) == realized_covol(one, 0, 0, s1, 0));
  CHECK(m1.kind() == MatrixKind::per_grid);

  const TickSeries a("a", {0.1, 0.35, 0.8}, {0.2, -0.1, 0.4});
  const Panel twin({a, TickSeries("b", {0.1, 0.35, 0.8}, {0.2, -0.1, 0.4})});
  const VolMatrix m2 = realized_matrix(twin, resolve_previous_ticks(twin, GridSpec(3, 3)), 0);
  CHECK(m2(0, 0) == m2(0, 1));
  CHECK(m2(1, 0) == m2(1, 1));
  CHECK(m2(0, 0) == m2(1, 1));
}

TEST_CASE("realized matrix matches the brute-force double loop") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TickSeries> assets;
    for (int i = 0; i < 4; ++i) {
      std::vector<double> t;
      for (int l = 0; l < 15 + i; ++l) t.push_back(u(gen));
      std::sort(t.begin(), t.end());
      std::vector<double> y;
      for (std::size_t l = 0; l < t.size(); ++l) y.push_back(z(gen));
      assets.emplace_back("a" + std::to_string(i), t, y);
    }
    const Panel p(assets);
    const long n = p.avg_sample_size();
    for (long m : {1L, 3L, 5L, n}) {
      const GridSpec g(n, m);
      const SyncTable s = resolve_previous_ticks(p, g);
      for (long k = 0; k < g.K(); ++k) {
        const VolMatrix rm = realized_matrix(p, s, k);
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t j = 0; j < 4; ++j)
            CHECK(rm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(oracle::realized_covol(p, i, j, n, m, k)).epsilon(1e-12));
      }
      const VolMatrix avg = avg_realized_matrix(p, g);
      const Eigen::MatrixXd ref = oracle::avg_realized(p, n, m);
      CHECK((avg.values() - ref).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("averaged matrix") {
  const Panel p({TickSeries("a", {0.0, 0.2, 0.45, 0.7, 0.95}, {0, 1, 0.5, 2, 1}),
                 TickSeries("b", {0.05, 0.3, 0.6, 0.9, 1.0}, {1, 0, 2, 2, 3})});
  SUBCASE("K=1 equals the single grid") {
    const GridSpec g(5, 5);
    const SyncTable s = resolve_previous_ticks(p, g);
    CHECK(avg_realized_matrix(p, s).values() == realized_matrix(p, s, 0).values());
    CHECK(avg_realized_matrix(p, g).kind() == MatrixKind::averaged);
  }
  SUBCASE("K=2 is the entrywise mean") {
    const GridSpec g(5, 2);
    const SyncTable s = resolve_previous_ticks(p, g);
    REQUIRE(g.K() == 2);
    const Eigen::MatrixXd direct = (realized_matrix(p, s, 0).values() + realized_matrix(p, s, 1).values()) / 2.0;
    CHECK((avg_realized_matrix(p, s).values() - direct).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("identical per-grid matrices") {
    // constant prices: every class gives the zero matrix
    const Panel c({TickSeries("a", {0.1, 0.6}, {1, 1})});
    CHECK(avg_realized_matrix(c, GridSpec(2, 1)).values()(0, 0) == 0.0);
  }
}

TEST_CASE("noise variance") {
  CHECK(noise_variance(TickSeries("a", {0.1, 0.2, 0.3}, {4, 4, 4})) == 0.0);
  CHECK(noise_variance(TickSeries("a", {0.1, 0.2, 0.3, 0.4, 0.5}, {0, 1, 0, 1, 0})) == 0.5);
}

TEST_CASE("noise variance of pure noise recovers eta") {
  // Var of sum((e_{l+1}-e_l)^2)/(2(N-1)) for Gaussian e is about 1.5 eta^2 / N.
  const double eta = 0.3;
  const int N = 10000;
  std::mt19937_64 gen(99);
  std::normal_distribution<double> z(0.0, std::sqrt(eta));
  std::vector<double> t(N);
  for (int l = 0; l < N; ++l) t[static_cast<std::size_t>(l)] = static_cast<double>(l) / (N - 1);
  const double se = std::sqrt(1.5 / N) * eta;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(N);
    for (auto& v : y) v = z(gen);
    CHECK(std::abs(noise_variance(TickSeries("a", t, y)) - eta) < 5 * se);
  }
}

TEST_CASE("ARVM estimate") {
  SUBCASE("noiseless constant prices give the zero matrix") {
    const Panel p({TickSeries("a", {0.0, 0.5, 1.0}, {2, 2, 2}), TickSeries("b", {0.0, 0.5, 1.0}, {3, 3, 3})});
    const auto e = arvm_estimate(p, 3);
    CHECK(e.matrix.values().isZero(0.0));
    CHECK(e.noise.eta_hat().isZero(0.0));
  }
  SUBCASE("p=1, full grid, K=1 reduces to RV - 2n eta") {
    std::vector<double> t;
    std::vector<double> y;
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    for (int l = 0; l <= 40; ++l) {
      t.push_back(l / 40.0);
      y.push_back(z(gen));
    }
    const Panel p({TickSeries("a", t, y)});
    const long n = p.avg_sample_size();
    const auto e = arvm_estimate(p, n);
    // n = 41 observations, grid {0, 1/41, ..., 1}
    const SyncTable s = resolve_previous_ticks(p, GridSpec(n, n));
    const double rv_grid = realized_covol(p, 0, 0, s, 0);
    CHECK(e.matrix(0, 0) == doctest::Approx(rv_grid - 2.0 * n * noise_variance(p.asset(0))).epsilon(1e-13));
    CHECK(e.matrix.meta().at("m") == n);
    CHECK(e.matrix.meta().at("K") == 1);
  }
  SUBCASE("diagonal equals averaged RV minus 2m eta; off-diagonals untouched") {
    SimConfig cfg;
    cfg.p = 8;
    cfg.n = 60;
    cfg.seed = 4;
    cfg.noise_level = NoiseLevel::high;
    cfg.sync_mode = SyncMode::nonsynchronized;
    const Scenario sc = simulate_scenario(cfg);
    const long m = 20;
    const auto e = arvm_estimate(sc.panel, m);
    const VolMatrix avg = avg_realized_matrix(sc.panel, make_grids(sc.panel.avg_sample_size(), m));
    for (Eigen::Index i = 0; i < 8; ++i)
      for (Eigen::Index j = 0; j < 8; ++j) {
        if (i == j) {
          CHECK(e.matrix(i, i) == avg(i, i) - 2.0 * m * noise_variance(sc.panel.asset(static_cast<std::size_t>(i))));
          CHECK(e.noise.eta_hat()(i) == noise_variance(sc.panel.asset(static_cast<std::size_t>(i))));
        } else {
          CHECK(e.matrix(i, j) == avg(i, j));
        }
      }
    CHECK(e.matrix.kind() == MatrixKind::arvm);
    CHECK_THROWS_AS(arvm_estimate(sc.panel, 61), std::invalid_argument);
  }
}

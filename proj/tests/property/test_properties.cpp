// Randomized invariants, 1000 instances each.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hfcov/arvm.hpp"
#include "hfcov/harness.hpp"
#include "hfcov/regularize.hpp"
#include "hfcov/rng.hpp"
#include "hfcov/sampling.hpp"
#include "hfcov/simulate.hpp"
#include "oracles.hpp"

using namespace hfcov;

namespace {

constexpr int kInstances = 1000;

template <class Fn>
void for_instances(std::uint64_t seed, Fn&& fn) {
  std::mt19937_64 gen(seed);
  for (int inst = 0; inst < kInstances; ++inst) fn(gen, inst);
}

long uniform_int(std::mt19937_64& gen, long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); }
double uniform(std::mt19937_64& gen, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }

std::vector<double> random_times(std::mt19937_64& gen, std::size_t count) {
  std::set<double> s;
  while (s.size() < count) {
    // occasionally pin to the endpoints
    const long pick = uniform_int(gen, 0, 20);
    s.insert(pick == 0 ? 0.0 : pick == 1 ? 1.0 : uniform(gen, 0.0, 1.0));
  }
  return {s.begin(), s.end()};
}

TickSeries random_series(std::mt19937_64& gen, const std::string& id, std::size_t count) {
  std::normal_distribution<double> z;
  std::vector<double> t = random_times(gen, count);
  std::vector<double> y(count);
  double level = z(gen);
  for (auto& v : y) v = level += 0.1 * z(gen);
  return TickSeries(id, std::move(t), std::move(y));
}

Panel random_panel(std::mt19937_64& gen, std::size_t p, long lo, long hi) {
  std::vector<TickSeries> assets;
  for (std::size_t i = 0; i < p; ++i)
    assets.push_back(random_series(gen, "S" + std::to_string(i), static_cast<std::size_t>(uniform_int(gen, lo, hi))));
  return Panel(std::move(assets));
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& gen, Eigen::Index p) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j) a(i, j) = a(j, i) = z(gen);
  return a;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = z(gen);
  return a;
}

bool exactly_symmetric(const Eigen::MatrixXd& m) { return m == m.transpose(); }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("panel") {
  TEST_CASE("previous_tick is monotone in t") {
    for_instances(101, [](auto& gen, int) {
      const TickSeries s = random_series(gen, "a", static_cast<std::size_t>(uniform_int(gen, 2, 30)));
      double t1 = uniform(gen, -0.1, 1.1);
      double t2 = uniform(gen, -0.1, 1.1);
      if (t1 > t2) std::swap(t1, t2);
      REQUIRE(previous_tick(s, t1).index <= previous_tick(s, t2).index);
    });
  }

  TEST_CASE("previous_tick at an observation time returns that observation") {
    for_instances(102, [](auto& gen, int) {
      const TickSeries s = random_series(gen, "a", static_cast<std::size_t>(uniform_int(gen, 2, 30)));
      for (std::size_t j = 0; j < s.size(); ++j) {
        const auto pt = previous_tick(s, s.times()[j]);
        REQUIRE(pt.index == j);
        REQUIRE_FALSE(pt.before_first);
      }
    });
  }

  TEST_CASE("write then read is the identity") {
    for_instances(103, [](auto& gen, int) {
      const Panel p = random_panel(gen, static_cast<std::size_t>(uniform_int(gen, 1, 5)), 2, 12);
      std::stringstream ss;
      write_panel(p, ss);
      REQUIRE(read_panel(ss) == p);
    });
  }
}

TEST_SUITE("sampling") {
  TEST_CASE("resolved indices are nondecreasing in r") {
    for_instances(201, [](auto& gen, int) {
      const Panel p = random_panel(gen, static_cast<std::size_t>(uniform_int(gen, 1, 4)), 2, 25);
      const long n = p.avg_sample_size();
      const GridSpec g(n, uniform_int(gen, 1, n));
      const SyncTable s = resolve_previous_ticks(p, g);
      for (std::size_t i = 0; i < p.num_assets(); ++i)
        for (long k = 0; k < g.K(); ++k)
          for (long r = 1; r <= g.m(); ++r) REQUIRE(s.index(i, k, r) >= s.index(i, k, r - 1));
    });
  }

  TEST_CASE("grids of distinct classes are disjoint") {
    for_instances(202, [](auto& gen, int) {
      const long n = uniform_int(gen, 2, 400);
      const GridSpec g = make_grids(n, uniform_int(gen, 1, n));
      std::set<double> seen;
      std::size_t total = 0;
      for (long k = 0; k < g.K(); ++k)
        for (long r = 0; r <= g.m(); ++r) {
          seen.insert(g.point(k, r));
          ++total;
        }
      REQUIRE(seen.size() == total);
    });
  }
}

TEST_SUITE("arvm") {
  TEST_CASE("outputs are exactly symmetric and the average is linear") {
    for_instances(301, [](auto& gen, int) {
      const Panel p = random_panel(gen, static_cast<std::size_t>(uniform_int(gen, 1, 5)), 2, 30);
      const long n = p.avg_sample_size();
      const GridSpec g(n, uniform_int(gen, 1, n));
      const SyncTable s = resolve_previous_ticks(p, g);
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.num_assets()),
                                                   static_cast<Eigen::Index>(p.num_assets()));
      for (long k = 0; k < g.K(); ++k) {
        const VolMatrix rk = realized_matrix(p, s, k);
        REQUIRE(exactly_symmetric(rk.values()));
        sum += rk.values();
      }
      const VolMatrix avg = avg_realized_matrix(p, s);
      REQUIRE(exactly_symmetric(avg.values()));
      const Eigen::MatrixXd mean = sum / static_cast<double>(g.K());
      REQUIRE(max_abs(avg.values() - mean) <= 1e-12 * std::max(max_abs(mean), 1e-300));
      REQUIRE(exactly_symmetric(arvm_estimate(p, g.m()).matrix.values()));
    });
  }

  TEST_CASE("scaling one asset scales its row, column and noise variance") {
    for_instances(302, [](auto& gen, int) {
      const Panel p = random_panel(gen, static_cast<std::size_t>(uniform_int(gen, 2, 5)), 3, 30);
      const std::size_t i = static_cast<std::size_t>(uniform_int(gen, 0, static_cast<long>(p.num_assets()) - 1));
      const double c = uniform(gen, 0.1, 10.0);
      std::vector<TickSeries> assets;
      for (std::size_t a = 0; a < p.num_assets(); ++a) {
        const auto& src = p.asset(a);
        std::vector<double> y(src.log_prices().begin(), src.log_prices().end());
        if (a == i)
          for (auto& v : y) v *= c;
        assets.emplace_back(src.asset_id(), std::vector<double>(src.times().begin(), src.times().end()), std::move(y));
      }
      const Panel q(std::move(assets));
      const long m = uniform_int(gen, 1, p.avg_sample_size());
      const auto base = arvm_estimate(p, m);
      const auto scaled = arvm_estimate(q, m);
      const auto ii = static_cast<Eigen::Index>(i);
      const Eigen::MatrixXd avg = avg_realized_matrix(p, make_grids(p.avg_sample_size(), m)).values();
      const double eta = base.noise.eta_hat()(ii);
      REQUIRE(std::abs(scaled.noise.eta_hat()(ii) - c * c * eta) <= 1e-12 * c * c * eta + 1e-300);
      for (Eigen::Index j = 0; j < base.matrix.dim(); ++j) {
        const double factor = j == ii ? c * c : c;
        // the diagonal is a difference; bound by the magnitudes of its parts
        const double scale = j == ii ? c * c * (std::abs(avg(ii, ii)) + 2.0 * m * eta) : factor * std::abs(avg(ii, j));
        REQUIRE(std::abs(scaled.matrix(ii, j) - factor * base.matrix(ii, j)) <= 1e-12 * scale + 1e-300);
        REQUIRE(scaled.matrix(ii, j) == scaled.matrix(j, ii));
      }
    });
  }

  TEST_CASE("permuting assets permutes the estimate") {
    for_instances(303, [](auto& gen, int) {
      const std::size_t p = static_cast<std::size_t>(uniform_int(gen, 2, 6));
      const Panel panel = random_panel(gen, p, 3, 30);
      std::vector<std::size_t> perm(p);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), gen);
      std::vector<TickSeries> assets;
      for (std::size_t a = 0; a < p; ++a) assets.push_back(panel.asset(perm[a]));
      const Panel permuted(std::move(assets));
      const long m = uniform_int(gen, 1, panel.avg_sample_size());
      const auto base = arvm_estimate(panel, m);
      const auto moved = arvm_estimate(permuted, m);
      const VolMatrix expect = base.matrix.permuted(perm);
      REQUIRE(max_abs(moved.matrix.values() - expect.values()) <= 1e-12 * max_abs(expect.values()) + 1e-300);
      REQUIRE(moved.matrix.asset_ids() == expect.asset_ids());
      for (std::size_t a = 0; a < p; ++a)
        REQUIRE(moved.noise.eta_hat()(static_cast<Eigen::Index>(a)) ==
                base.noise.eta_hat()(static_cast<Eigen::Index>(perm[a])));
    });
  }

  TEST_CASE("synchronized full grid off-diagonals equal the classical realized covariance") {
    for_instances(304, [](auto& gen, int) {
      const std::size_t p = static_cast<std::size_t>(uniform_int(gen, 2, 5));
      const long n = uniform_int(gen, 2, 60);
      std::normal_distribution<double> z;
      std::vector<double> t(static_cast<std::size_t>(n));
      for (long l = 1; l <= n; ++l) t[static_cast<std::size_t>(l - 1)] = static_cast<double>(l) / static_cast<double>(n);
      std::vector<std::vector<double>> y(p, std::vector<double>(t.size()));
      std::vector<TickSeries> assets;
      for (std::size_t i = 0; i < p; ++i) {
        for (auto& v : y[i]) v = z(gen);
        assets.emplace_back("x" + std::to_string(i), t, y[i]);
      }
      const auto est = arvm_estimate(Panel(std::move(assets)), n);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
          if (i == j) continue;
          double ref = 0.0;
          for (std::size_t l = 1; l < t.size(); ++l) ref += (y[i][l] - y[i][l - 1]) * (y[j][l] - y[j][l - 1]);
          const double got = est.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          REQUIRE(std::abs(got - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
    });
  }
}

TEST_SUITE("regularize") {
  TEST_CASE("band and threshold are idempotent and keep symmetry") {
    for_instances(401, [](auto& gen, int) {
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 10));
      const VolMatrix m(random_symmetric(gen, p), MatrixKind::arvm);
      const long b = uniform_int(gen, 0, p);
      const VolMatrix bm = band(m, b);
      REQUIRE(band(bm, b).values() == bm.values());
      REQUIRE(exactly_symmetric(bm.values()));
      const double w = uniform(gen, 0.0, 2.0);
      const ThresholdOptions opt{uniform_int(gen, 0, 1) == 1};
      const VolMatrix tm = threshold(m, w, opt);
      REQUIRE(threshold(tm, w, opt).values() == tm.values());
      REQUIRE(exactly_symmetric(tm.values()));
      REQUIRE(tm.values() == oracle::threshold(m.values(), w, opt.keep_diagonal));
    });
  }

  TEST_CASE("band nesting") {
    for_instances(402, [](auto& gen, int) {
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 10));
      const VolMatrix m(random_symmetric(gen, p), MatrixKind::arvm);
      long b1 = uniform_int(gen, 0, p);
      long b2 = uniform_int(gen, 0, p);
      if (b1 > b2) std::swap(b1, b2);
      REQUIRE(band(band(m, b2), b1).values() == band(m, b1).values());
    });
  }

  TEST_CASE("a larger threshold keeps a subset of the support") {
    for_instances(403, [](auto& gen, int) {
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 10));
      const VolMatrix m(random_symmetric(gen, p), MatrixKind::arvm);
      double w1 = uniform(gen, 0.0, 2.5);
      double w2 = uniform(gen, 0.0, 2.5);
      if (w1 > w2) std::swap(w1, w2);
      const Eigen::MatrixXd t1 = threshold(m, w1).values();
      const Eigen::MatrixXd t2 = threshold(m, w2).values();
      for (Eigen::Index q = 0; q < t2.size(); ++q)
        if (t2(q) != 0.0) REQUIRE(t1(q) != 0.0);
    });
  }

  TEST_CASE("squared spectral norm is bounded by the product of the l1 and l-infinity norms") {
    for_instances(404, [](auto& gen, int) {
      const Eigen::MatrixXd u =
          random_matrix(gen, static_cast<Eigen::Index>(uniform_int(gen, 1, 9)), static_cast<Eigen::Index>(uniform_int(gen, 1, 9)));
      const double l2 = operator_norm(u, NormType::l2);
      const double l1 = operator_norm(u, NormType::l1);
      const double linf = operator_norm(u, NormType::linf);
      REQUIRE(l2 * l2 <= l1 * linf * (1.0 + 1e-10));
    });
  }

  TEST_CASE("symmetric matrices: l1 equals l-infinity and bounds l2") {
    for_instances(405, [](auto& gen, int) {
      const Eigen::MatrixXd u = random_symmetric(gen, static_cast<Eigen::Index>(uniform_int(gen, 1, 10)));
      const double l1 = operator_norm(u, NormType::l1);
      REQUIRE(l1 == doctest::Approx(operator_norm(u, NormType::linf)).epsilon(1e-14));
      REQUIRE(operator_norm(u, NormType::l2) <= l1 * (1.0 + 1e-12));
    });
  }
}

TEST_SUITE("simulate") {
  TEST_CASE("kappa driver increments have variance dt") {
    for_instances(501, [](auto& gen, int inst) {
      const long L = 100000;
      DrivingIncrements inc;
      inc.L = L;
      inc.dt = 1.0 / static_cast<double>(L);
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 4));
      std::mt19937_64 draws(derive_seed(static_cast<std::uint64_t>(inst), 0, StreamPurpose::price, 0));
      std::normal_distribution<double> z(0.0, std::sqrt(inc.dt));
      inc.w0.resize(static_cast<std::size_t>(L));
      for (auto& w : inc.w0) w = z(draws);
      inc.dB.resize(p, L);
      for (Eigen::Index q = 0; q < inc.dB.size(); ++q) inc.dB(q) = z(draws);
      const auto dw = kappa_driver_increments(inc);
      double ss = 0.0;
      for (double v : dw) ss += v * v;
      REQUIRE(std::abs(ss / static_cast<double>(L) / inc.dt - 1.0) < 0.03);
    });
  }

  TEST_CASE("leverage increments correlate with the price driver at rho") {
    for_instances(502, [](auto& gen, int) {
      const long L = 100000;
      const double rho = uniform(gen, -1.0, 1.0);
      std::normal_distribution<double> z;
      Eigen::MatrixXd dB(1, L);
      Eigen::MatrixXd dU(1, L);
      for (long l = 0; l < L; ++l) {
        dB(0, l) = z(gen);
        dU(0, l) = z(gen);
      }
      const std::vector<double> r{rho};
      const Eigen::MatrixXd w = leverage_increments(r, dB, dU);
      const double mb = dB.mean();
      const double mw = w.mean();
      const double cov = ((dB.array() - mb) * (w.array() - mw)).sum();
      const double corr = cov / std::sqrt((dB.array() - mb).square().sum() * (w.array() - mw).square().sum());
      REQUIRE(std::abs(corr - rho) <= 0.02);
    });
  }

  TEST_CASE("build_gamma is positive definite and factors cleanly") {
    for_instances(503, [](auto& gen, int) {
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 12));
      Eigen::VectorXd d(p);
      for (Eigen::Index i = 0; i < p; ++i) d(i) = std::exp(uniform(gen, -5.0, 3.0));
      const double kappa = uniform(gen, -0.995, 0.995);
      const Eigen::MatrixXd g = build_gamma(d, kappa);
      REQUIRE(exactly_symmetric(g));
      REQUIRE(oracle::jacobi_eigenvalues(g).back() > 0.0);
      const Eigen::MatrixXd f = cholesky_factor(g);
      REQUIRE((f * f.transpose() - g).norm() <= 1e-10 * g.norm());
    });
  }

  TEST_CASE("kappa path stays inside (-1, 1)") {
    for_instances(504, [](auto& gen, int) {
      const long L = uniform_int(gen, 1, 3000);
      std::normal_distribution<double> z(0.0, std::sqrt(1.0 / static_cast<double>(L)));
      std::vector<double> drv(static_cast<std::size_t>(L));
      for (auto& v : drv) v = z(gen);
      const KappaPath k = simulate_kappa_path(uniform(gen, -0.999, 0.999), L, drv);
      for (double v : k.kappa) REQUIRE(std::abs(v) < 1.0);
    });
  }

  TEST_CASE("streaming truth equals the batch mean of stored matrices") {
    for_instances(505, [](auto& gen, int inst) {
      SimConfig cfg;
      cfg.p = static_cast<std::size_t>(uniform_int(gen, 1, 6));
      cfg.vol_model_override = static_cast<VolModel>(uniform_int(gen, 0, 3));
      cfg.kappa0 = uniform(gen, -0.95, 0.95);
      cfg.seed = static_cast<std::uint64_t>(inst);
      const long stride = uniform_int(gen, 1, 3);
      const long L = stride * uniform_int(gen, 1, 20);
      cfg.n = std::max(2L, L);
      const SimConfig r = cfg.resolved();
      const auto inc = draw_increments(r, L);
      const KappaPath kp = simulate_kappa_path(r.kappa0, L, kappa_driver_increments(inc));
      const Eigen::MatrixXd vol = simulate_diag_vols(r, inc);
      TruthAccumulator acc(static_cast<Eigen::Index>(r.p));
      simulate_prices(vol, kp.kappa, inc.dB, &acc, stride);
      std::vector<Eigen::MatrixXd> stored;
      for (long l = stride; l <= L; l += stride) stored.push_back(build_gamma(vol.col(l), kp.kappa[static_cast<std::size_t>(l)]));
      Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.p), static_cast<Eigen::Index>(r.p));
      for (const auto& g : stored) batch += g;
      batch /= static_cast<double>(stored.size());
      REQUIRE(acc.count() == static_cast<long>(stored.size()));
      const VolMatrix t = integrated_truth(acc.sum(), acc.count());
      REQUIRE(max_abs(t.values() - batch) <= 1e-12 * max_abs(batch));
    });
  }

  TEST_CASE("identical configs give bit-identical scenarios") {
    for_instances(506, [](auto& gen, int) {
      SimConfig cfg;
      cfg.p = static_cast<std::size_t>(4 * uniform_int(gen, 1, 2));
      cfg.n = uniform_int(gen, 2, 30);
      cfg.kappa0 = uniform(gen, -0.9, 0.99);
      cfg.noise_level = static_cast<NoiseLevel>(uniform_int(gen, 0, 2));
      cfg.sync_mode = static_cast<SyncMode>(uniform_int(gen, 0, 1));
      cfg.seed = gen();
      cfg.repetition = static_cast<std::uint64_t>(uniform_int(gen, 0, 100));
      const Scenario a = simulate_scenario(cfg);
      const Scenario b = simulate_scenario(cfg);
      REQUIRE(a.panel == b.panel);
      REQUIRE(a.truth.values() == b.truth.values());
      REQUIRE(exactly_symmetric(a.truth.values()));
      for (Eigen::Index i = 0; i < a.truth.dim(); ++i) REQUIRE(a.truth(i, i) > 0.0);
    });
  }
}

TEST_SUITE("harness") {
  TEST_CASE("oracle selections never exceed the unregularized error") {
    for_instances(601, [](auto& gen, int) {
      const auto p = static_cast<Eigen::Index>(uniform_int(gen, 1, 10));
      const VolMatrix est(random_symmetric(gen, p), MatrixKind::arvm);
      const VolMatrix truth(random_symmetric(gen, p), MatrixKind::truth);
      const double base = mse_l2(est, truth);
      std::vector<long> b_grid = default_b_grid(static_cast<std::size_t>(p));
      std::shuffle(b_grid.begin(), b_grid.end(), gen);
      REQUIRE(select_band_oracle(est, truth, b_grid).mse <= base);
      // the smallest level keeps every entry (threshold = min |entry|)
      std::vector<double> a_grid = default_a_grid();
      a_grid.push_back(1e-9);
      REQUIRE(select_threshold_oracle(est, truth, a_grid).mse <= base);
    });
  }

  TEST_CASE("same master seed gives the same MSE table for any worker count") {
    for_instances(602, [](auto& gen, int) {
      ExperimentConfig c;
      c.p = 4;
      c.n = uniform_int(gen, 6, 16);
      c.K_list = {1, uniform_int(gen, 2, 3)};
      c.kappa0_grid = {uniform(gen, -0.5, 0.95)};
      c.noise_levels = {static_cast<NoiseLevel>(uniform_int(gen, 0, 2))};
      c.sync_modes = {static_cast<SyncMode>(uniform_int(gen, 0, 1))};
      c.repetitions = 2;
      c.seed = gen();
      c.workers = 1;
      const MseTable a = run_mse_study(c);
      c.workers = 2;
      const MseTable b = run_mse_study(c);
      REQUIRE(a.cells.size() == b.cells.size());
      for (std::size_t q = 0; q < a.cells.size(); ++q) {
        REQUIRE(a.cells[q].sq_errors == b.cells[q].sq_errors);
        REQUIRE(a.cells[q].median_b == b.cells[q].median_b);
        REQUIRE(a.cells[q].median_a == b.cells[q].median_a);
      }
    });
  }

  TEST_CASE("TARVM error is invariant under a joint asset permutation") {
    for_instances(603, [](auto& gen, int) {
      ExperimentConfig c;
      c.p = static_cast<std::size_t>(4 * uniform_int(gen, 1, 2));
      c.n = uniform_int(gen, 6, 20);
      c.K_list = {uniform_int(gen, 1, 3)};
      c.kappa0_grid = {uniform(gen, 0.0, 0.95)};
      c.noise_levels = {static_cast<NoiseLevel>(uniform_int(gen, 0, 2))};
      c.sync_modes = {static_cast<SyncMode>(uniform_int(gen, 0, 1))};
      c.repetitions = 1;
      c.seed = gen();
      c.workers = 1;
      const auto report = run_permutation_study(c);
      REQUIRE(report.rows.size() == 1);
      REQUIRE(report.rows[0].reps_ok == 1);
      REQUIRE(report.rows[0].tarvm_max_rel_diff <= 1e-10);
    });
  }

  TEST_CASE("mean largest eigenvalue decreases along a doubling sequence of n") {
    for_instances(604, [](auto& gen, int) {
      const long p = uniform_int(gen, 4, 10);
      const std::uint64_t seed = gen();
      double prev = std::numeric_limits<double>::infinity();
      for (long n = 4 * p; n <= 16 * p; n *= 2) {
        const double mean = run_mp_sanity(n, p, 200, seed).mean_largest;
        REQUIRE(mean < prev);
        prev = mean;
      }
    });
  }
}

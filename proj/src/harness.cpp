#include "hfcov/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "hfcov/csv.hpp"
#include "hfcov/rng.hpp"

namespace hfcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// fn(i) must not throw.
template <class Fn>
void parallel_for(long count, unsigned workers, Fn&& fn) {
  unsigned w = workers != 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  if (count <= 1 || w <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  w = static_cast<unsigned>(std::min<long>(w, count));
  std::atomic<long> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(w);
  for (unsigned t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) fn(i);
    });
  }
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct MeanSe {
  double mean = kNaN;
  double se = kNaN;
  long count = 0;
};

MeanSe mean_se(std::span<const double> v) {
  MeanSe out;
  double s = 0.0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++out.count;
  }
  if (out.count == 0) return out;
  out.mean = s / static_cast<double>(out.count);
  double ss = 0.0;
  for (double x : v) {
    if (!std::isnan(x)) ss += (x - out.mean) * (x - out.mean);
  }
  out.se = out.count > 1 ? std::sqrt(ss / static_cast<double>(out.count - 1) / static_cast<double>(out.count)) : 0.0;
  return out;
}

SimConfig cell_config(const ExperimentConfig& cfg, double kappa0, NoiseLevel noise, SyncMode sync, long rep) {
  SimConfig sim;
  sim.p = cfg.p;
  sim.n = cfg.n;
  sim.kappa0 = kappa0;
  sim.noise_level = noise;
  sim.theta = cfg.theta;
  sim.sync_mode = sync;
  sim.seed = cfg.seed;
  sim.repetition = static_cast<std::uint64_t>(rep);
  return sim;
}

bool same_level(double a, double b) { return std::abs(a - b) <= 1e-12; }

}  // namespace

double mse_l2(const VolMatrix& estimate, const VolMatrix& truth) {
  if (estimate.dim() != truth.dim()) throw std::invalid_argument("mse_l2: dimension mismatch");
  const double norm = operator_norm(estimate.values() - truth.values(), NormType::l2);
  return norm * norm;
}

BandSelection select_band_oracle(const VolMatrix& estimate, const VolMatrix& truth, std::span<const long> b_grid) {
  if (b_grid.empty()) throw std::invalid_argument("band grid is empty");
  BandSelection best{-1, std::numeric_limits<double>::infinity()};
  for (long b : b_grid) {
    const double mse = mse_l2(band(estimate, b), truth);
    if (mse < best.mse || (mse == best.mse && b < best.b)) best = {b, mse};
  }
  return best;
}

ThresholdSelection select_threshold_oracle(const VolMatrix& estimate, const VolMatrix& truth,
                                           std::span<const double> a_grid, ThresholdOptions options) {
  if (a_grid.empty()) throw std::invalid_argument("quantile grid is empty");
  ThresholdSelection best{0.0, -1.0, std::numeric_limits<double>::infinity()};
  for (double a : a_grid) {
    const double w = quantile_threshold(estimate, a);
    const double mse = mse_l2(threshold(estimate, w, options), truth);
    if (mse < best.mse || (mse == best.mse && a > best.a)) best = {w, a, mse};
  }
  return best;
}

std::vector<long> default_b_grid(std::size_t p) {
  const long last = static_cast<long>(p) - 1;
  std::vector<long> grid{0};
  for (long b = 1; b < last; b *= 2) grid.push_back(b);
  if (last > 0) grid.push_back(last);
  return grid;
}

std::vector<double> default_a_grid() {
  std::vector<double> grid;
  for (int q = 50; q <= 95; q += 5) grid.push_back(q / 100.0);
  grid.push_back(0.99);
  return grid;
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::arvm: return "arvm";
    case Estimator::barvm: return "barvm";
    case Estimator::tarvm: return "tarvm";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view s) {
  if (s == "arvm") return Estimator::arvm;
  if (s == "barvm") return Estimator::barvm;
  if (s == "tarvm") return Estimator::tarvm;
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (kappa0_grid.empty() || noise_levels.empty() || K_list.empty() || sync_modes.empty() || estimators.empty()) {
    throw std::invalid_argument("experiment grids must be nonempty");
  }
  if (p == 0 || p % 4 != 0) throw std::invalid_argument("p must be a positive multiple of 4");
  for (long K : K_list) {
    if (K < 1 || K > n) throw std::invalid_argument("K must lie in [1, n]");
  }
  for (double k0 : kappa0_grid) {
    if (!(std::abs(k0) < 1.0)) throw std::invalid_argument("kappa0 must lie in (-1,1)");
  }
  for (long b : resolved_b_grid()) {
    if (b < 0) throw std::invalid_argument("band widths must be nonnegative");
  }
  for (double a : resolved_a_grid()) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("quantile levels must lie in (0,1)");
  }
}

std::vector<long> ExperimentConfig::resolved_b_grid() const { return b_grid.empty() ? default_b_grid(p) : b_grid; }
std::vector<double> ExperimentConfig::resolved_a_grid() const { return a_grid.empty() ? default_a_grid() : a_grid; }

const MseCell& MseTable::find(NoiseLevel noise, SyncMode sync, Estimator est, long K, double kappa0) const {
  for (const auto& c : cells) {
    if (c.noise == noise && c.sync == sync && c.estimator == est && c.K == K && same_level(c.kappa0, kappa0)) return c;
  }
  throw std::out_of_range("no such MSE cell");
}

MseTable run_mse_study(const ExperimentConfig& config) {
  config.validate();
  const auto b_grid = config.resolved_b_grid();
  const auto a_grid = config.resolved_a_grid();
  const long R = config.repetitions;
  MseTable table;
  std::mutex failure_mutex;

  for (SyncMode sync : config.sync_modes) {
    for (NoiseLevel noise : config.noise_levels) {
      for (long K : config.K_list) {
        const long m = grid_size_for_classes(config.n, K);
        for (double kappa0 : config.kappa0_grid) {
          std::vector<double> sq_arvm(static_cast<std::size_t>(R), kNaN);
          std::vector<double> sq_barvm(sq_arvm.size(), kNaN);
          std::vector<double> sq_tarvm(sq_arvm.size(), kNaN);
          std::vector<double> b_star(sq_arvm.size(), kNaN);
          std::vector<double> w_star(sq_arvm.size(), kNaN);
          std::vector<double> a_star(sq_arvm.size(), kNaN);

          parallel_for(R, config.workers, [&](long rep) {
            const auto r = static_cast<std::size_t>(rep);
            try {
              const Scenario sc = simulate_scenario(cell_config(config, kappa0, noise, sync, rep));
              const ArvmEstimate est = arvm_estimate(sc.panel, m);
              sq_arvm[r] = mse_l2(est.matrix, sc.truth);
              const BandSelection bs = select_band_oracle(est.matrix, sc.truth, b_grid);
              sq_barvm[r] = bs.mse;
              b_star[r] = static_cast<double>(bs.b);
              const ThresholdSelection ts = select_threshold_oracle(est.matrix, sc.truth, a_grid);
              sq_tarvm[r] = ts.mse;
              w_star[r] = ts.threshold;
              a_star[r] = ts.a;
            } catch (const std::exception& e) {
              std::lock_guard lock(failure_mutex);
              table.failures.push_back("rep " + std::to_string(rep) + " kappa0=" + csv::format(kappa0) + ": " + e.what());
            }
          });

          for (Estimator est : config.estimators) {
            MseCell cell;
            cell.noise = noise;
            cell.sync = sync;
            cell.estimator = est;
            cell.K = K;
            cell.m = m;
            cell.kappa0 = kappa0;
            cell.sq_errors = est == Estimator::arvm ? sq_arvm : est == Estimator::barvm ? sq_barvm : sq_tarvm;
            const MeanSe ms = mean_se(cell.sq_errors);
            cell.mse = ms.mean;
            cell.mse_se = ms.se;
            cell.reps_ok = ms.count;
            cell.reps_failed = R - ms.count;
            std::vector<double> l2(cell.sq_errors.size());
            std::transform(cell.sq_errors.begin(), cell.sq_errors.end(), l2.begin(),
                           [](double x) { return std::sqrt(x); });
            cell.mean_l2 = mean_se(l2).mean;
            if (est == Estimator::barvm) cell.median_b = median(b_star);
            if (est == Estimator::tarvm) {
              cell.median_threshold = median(w_star);
              cell.median_a = median(a_star);
            }
            table.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return table;
}

std::vector<std::size_t> draw_permutation(std::size_t p, std::uint64_t seed, std::uint64_t repetition) {
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto gen = make_stream(seed, repetition, StreamPurpose::permutation);
  std::shuffle(perm.begin(), perm.end(), gen);
  return perm;
}

const PermutationRow& PermutationReport::find(double kappa0, NoiseLevel noise, SyncMode sync, long K) const {
  for (const auto& r : rows) {
    if (same_level(r.kappa0, kappa0) && r.noise == noise && r.sync == sync && r.K == K) return r;
  }
  throw std::out_of_range("no such permutation row");
}

PermutationReport run_permutation_study(const ExperimentConfig& config, bool identity_permutation) {
  config.validate();
  const auto b_grid = config.resolved_b_grid();
  const auto a_grid = config.resolved_a_grid();
  const long R = config.repetitions;
  PermutationReport report;

  for (SyncMode sync : config.sync_modes) {
    for (NoiseLevel noise : config.noise_levels) {
      for (long K : config.K_list) {
        const long m = grid_size_for_classes(config.n, K);
        for (double kappa0 : config.kappa0_grid) {
          // columns: arvm, barvm, tarvm for base then permuted
          std::vector<std::array<double, 6>> res(static_cast<std::size_t>(R));
          for (auto& r : res) r.fill(kNaN);

          parallel_for(R, config.workers, [&](long rep) {
            try {
              const Scenario sc = simulate_scenario(cell_config(config, kappa0, noise, sync, rep));
              std::vector<std::size_t> perm(config.p);
              if (identity_permutation) {
                std::iota(perm.begin(), perm.end(), std::size_t{0});
              } else {
                perm = draw_permutation(config.p, config.seed, static_cast<std::uint64_t>(rep));
              }
              const Panel panel_perm = sc.panel.permuted(perm);
              const VolMatrix truth_perm = sc.truth.permuted(perm);

              auto& out = res[static_cast<std::size_t>(rep)];
              const auto evaluate = [&](const Panel& panel, const VolMatrix& truth, std::size_t col) {
                const ArvmEstimate est = arvm_estimate(panel, m);
                out[col] = mse_l2(est.matrix, truth);
                out[col + 1] = select_band_oracle(est.matrix, truth, b_grid).mse;
                out[col + 2] = select_threshold_oracle(est.matrix, truth, a_grid).mse;
              };
              evaluate(sc.panel, sc.truth, 0);
              evaluate(panel_perm, truth_perm, 3);
            } catch (const std::exception&) {
              res[static_cast<std::size_t>(rep)].fill(kNaN);
            }
          });

          PermutationRow row;
          row.kappa0 = kappa0;
          row.noise = noise;
          row.sync = sync;
          row.K = K;
          std::array<std::vector<double>, 6> cols;
          for (const auto& r : res) {
            const bool ok = std::none_of(r.begin(), r.end(), [](double x) { return std::isnan(x); });
            if (!ok) {
              ++row.reps_failed;
              continue;
            }
            ++row.reps_ok;
            for (std::size_t c = 0; c < 6; ++c) cols[c].push_back(r[c]);
            const double rel = r[2] == 0.0 ? std::abs(r[5]) : std::abs(r[5] - r[2]) / r[2];
            row.tarvm_max_rel_diff = std::max(row.tarvm_max_rel_diff, rel);
          }
          row.arvm_base = mean_se(cols[0]).mean;
          row.barvm_base = mean_se(cols[1]).mean;
          row.tarvm_base = mean_se(cols[2]).mean;
          row.arvm_perm = mean_se(cols[3]).mean;
          row.barvm_perm = mean_se(cols[4]).mean;
          row.tarvm_perm = mean_se(cols[5]).mean;
          row.barvm_ratio = row.barvm_perm / row.barvm_base;
          row.tarvm_ratio = row.tarvm_perm / row.tarvm_base;
          report.rows.push_back(row);
        }
      }
    }
  }
  return report;
}

long classes_for_rule(long n, KRule rule) {
  const double exponent = rule == KRule::n_two_thirds ? 2.0 / 3.0 : 1.0 / 3.0;
  return std::max(1L, std::lround(std::pow(static_cast<double>(n), exponent)));
}

void ConvergenceSpec::validate() const {
  if (n_list.size() < 4) throw std::invalid_argument("convergence study needs at least 4 sample sizes");
  for (std::size_t q = 1; q < n_list.size(); ++q) {
    if (n_list[q] < 2 * n_list[q - 1]) throw std::invalid_argument("sample sizes must grow by factors of at least 2");
  }
  if (n_list.front() < 2) throw std::invalid_argument("sample sizes must be at least 2");
  if (reps_per_n < 1) throw std::invalid_argument("reps_per_n must be at least 1");
}

std::pair<double, double> fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs >= 2 paired points");
  const auto N = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    if (!(x[q] > 0.0) || !(y[q] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
    mx += std::log(x[q]);
    my += std::log(y[q]);
  }
  mx /= N;
  my /= N;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double dx = std::log(x[q]) - mx;
    sxy += dx * (std::log(y[q]) - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ConvergenceResult run_convergence_study(const ConvergenceSpec& spec) {
  spec.validate();
  ConvergenceResult result;
  std::vector<double> xs;
  for (long n : spec.n_list) {
    const long K = classes_for_rule(n, spec.K_rule);
    const long m = grid_size_for_classes(n, K);
    std::vector<double> err(static_cast<std::size_t>(spec.reps_per_n), kNaN);
    parallel_for(spec.reps_per_n, spec.workers, [&](long rep) {
      try {
        SimConfig sim;
        sim.p = 1;
        sim.n = n;
        sim.vol_model_override = spec.model;
        sim.noise_level = spec.noise;
        if (spec.noiseless) sim.noise_multiplier_override = 0.0;
        sim.seed = splitmix64(spec.seed ^ static_cast<std::uint64_t>(n));
        sim.repetition = static_cast<std::uint64_t>(rep);
        const Scenario sc = simulate_scenario(sim);
        const ArvmEstimate est = arvm_estimate(sc.panel, m);
        err[static_cast<std::size_t>(rep)] = std::abs(est.matrix(0, 0) - sc.truth(0, 0));
      } catch (const std::exception&) {
        // counted below
      }
    });
    result.failures += std::count_if(err.begin(), err.end(), [](double e) { return std::isnan(e); });
    result.n.push_back(n);
    result.K.push_back(K);
    result.m.push_back(m);
    result.median_error.push_back(median(err));
    xs.push_back(static_cast<double>(n));
  }
  std::tie(result.slope, result.intercept) = fit_loglog_slope(xs, result.median_error);
  return result;
}

MpResult run_mp_sanity(long n, long p, long reps, std::uint64_t seed) {
  if (n < 1 || p < 1 || reps < 1) throw std::invalid_argument("random-matrix sanity check needs positive sizes");
  MpResult out;
  out.n = n;
  out.p = p;
  out.reps = reps;
  const double c = static_cast<double>(p) / static_cast<double>(n);
  out.reference = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  out.largest.assign(static_cast<std::size_t>(reps), kNaN);
  for (long rep = 0; rep < reps; ++rep) {
    auto gen = make_stream(seed, static_cast<std::uint64_t>(rep), StreamPurpose::random_matrix);
    std::normal_distribution<double> z;
    Eigen::MatrixXd Z(p, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < p; ++i) Z(i, j) = z(gen);
    }
    const Eigen::MatrixXd gram = (Z * Z.transpose()) / static_cast<double>(n);
    const VolMatrix g = VolMatrix::from_upper(gram, MatrixKind::averaged);
    out.largest[static_cast<std::size_t>(rep)] = eigen_diagnostics(g).eigenvalues.front();
  }
  const MeanSe ms = mean_se(out.largest);
  out.mean_largest = ms.mean;
  out.se = ms.se;
  return out;
}

CalibrationDemo run_calibration_demo(std::span<const Panel> panels, long m, std::span<const double> a_grid) {
  if (panels.size() < 2) throw std::invalid_argument("need >= 2 days for threshold calibration");
  CalibrationDemo demo;
  demo.daily.reserve(panels.size());
  for (const auto& panel : panels) demo.daily.push_back(arvm_estimate(panel, m).matrix);
  demo.calibration = calibrate_threshold_lambda(demo.daily, a_grid);
  for (std::size_t d = 0; d < demo.daily.size(); ++d) {
    const auto& day = demo.daily[d];
    CalibrationDay row;
    row.day = static_cast<long>(d) + 1;
    row.threshold = quantile_threshold(day, demo.calibration.a_star);
    row.raw_largest = eigen_diagnostics(day).largest;
    row.thresholded_largest = eigen_diagnostics(threshold(day, row.threshold)).largest;
    demo.days.push_back(row);
  }
  return demo;
}

std::vector<Panel> simulate_daily_panels(const SimConfig& base, long days) {
  if (days < 1) throw std::invalid_argument("days must be positive");
  std::vector<Panel> panels;
  panels.reserve(static_cast<std::size_t>(days));
  for (long d = 0; d < days; ++d) {
    SimConfig cfg = base;
    cfg.repetition = static_cast<std::uint64_t>(d);
    panels.push_back(simulate_scenario(cfg).panel);
  }
  return panels;
}

void write_mse_csv(const MseTable& table, std::ostream& out) {
  out << "noise_level,sync_mode,estimator,K,m,kappa0,mse,mse_se,mean_l2,reps_ok,reps_failed,median_b,"
         "median_threshold,median_a\n";
  for (const auto& c : table.cells) {
    out << to_string(c.noise) << ',' << to_string(c.sync) << ',' << to_string(c.estimator) << ',' << c.K << ','
        << c.m << ',' << csv::format(c.kappa0) << ',' << csv::format(c.mse) << ',' << csv::format(c.mse_se) << ','
        << csv::format(c.mean_l2) << ',' << c.reps_ok << ',' << c.reps_failed << ',';
    if (c.estimator == Estimator::barvm) out << csv::format(c.median_b);
    out << ',';
    if (c.estimator == Estimator::tarvm) out << csv::format(c.median_threshold) << ',' << csv::format(c.median_a);
    else out << ',';
    out << '\n';
  }
}

void write_mse_summary(const MseTable& table, std::ostream& out) {
  out << std::left << std::setw(8) << "noise" << std::setw(17) << "sync" << std::setw(7) << "est" << std::right
      << std::setw(4) << "K" << std::setw(9) << "kappa0" << std::setw(14) << "mse" << std::setw(12) << "se"
      << std::setw(12) << "mean_l2" << std::setw(7) << "fail" << '\n';
  out << std::fixed;
  for (const auto& c : table.cells) {
    out << std::left << std::setw(8) << to_string(c.noise) << std::setw(17) << to_string(c.sync) << std::setw(7)
        << to_string(c.estimator) << std::right << std::setw(4) << c.K << std::setw(9) << std::setprecision(3)
        << c.kappa0 << std::setw(14) << std::setprecision(6) << c.mse << std::setw(12) << c.mse_se << std::setw(12)
        << c.mean_l2 << std::setw(7) << c.reps_failed << '\n';
  }
  out << std::defaultfloat;
}

void write_permutation_csv(const PermutationReport& report, std::ostream& out) {
  out << "noise_level,sync_mode,K,kappa0,arvm_base,arvm_perm,barvm_base,barvm_perm,barvm_ratio,tarvm_base,"
         "tarvm_perm,tarvm_ratio,tarvm_max_rel_diff,reps_ok,reps_failed\n";
  for (const auto& r : report.rows) {
    out << to_string(r.noise) << ',' << to_string(r.sync) << ',' << r.K << ',' << csv::format(r.kappa0) << ','
        << csv::format(r.arvm_base) << ',' << csv::format(r.arvm_perm) << ',' << csv::format(r.barvm_base) << ','
        << csv::format(r.barvm_perm) << ',' << csv::format(r.barvm_ratio) << ',' << csv::format(r.tarvm_base) << ','
        << csv::format(r.tarvm_perm) << ',' << csv::format(r.tarvm_ratio) << ',' << csv::format(r.tarvm_max_rel_diff)
        << ',' << r.reps_ok << ',' << r.reps_failed << '\n';
  }
}

void write_convergence_csv(const ConvergenceResult& result, std::ostream& out) {
  out << "# slope=" << csv::format(result.slope) << " intercept=" << csv::format(result.intercept)
      << " failures=" << result.failures << '\n';
  out << "n,K,m,median_abs_error\n";
  for (std::size_t q = 0; q < result.n.size(); ++q) {
    out << result.n[q] << ',' << result.K[q] << ',' << result.m[q] << ',' << csv::format(result.median_error[q])
        << '\n';
  }
}

void write_mp_csv(const MpResult& result, std::ostream& out) {
  out << "n,p,reps,mean_largest,se,reference\n";
  out << result.n << ',' << result.p << ',' << result.reps << ',' << csv::format(result.mean_largest) << ','
      << csv::format(result.se) << ',' << csv::format(result.reference) << '\n';
}

void write_calibration_days_csv(const CalibrationDemo& demo, std::ostream& out) {
  out << "# a_star=" << csv::format(demo.calibration.a_star) << '\n';
  out << "day,threshold,raw_largest,thresholded_largest\n";
  for (const auto& d : demo.days) {
    out << d.day << ',' << csv::format(d.threshold) << ',' << csv::format(d.raw_largest) << ','
        << csv::format(d.thresholded_largest) << '\n';
  }
}

}  // namespace hfcov

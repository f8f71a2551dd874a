#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfcov/arvm.hpp"
#include "hfcov/regularize.hpp"
#include "hfcov/simulate.hpp"
#include "hfcov/vol_matrix.hpp"

namespace hfcov {

/// Squared spectral norm of estimate - truth.
double mse_l2(const VolMatrix& estimate, const VolMatrix& truth);

struct BandSelection {
  long b = 0;
  double mse = 0.0;
};

/// Exhaustive search over b_grid; ties go to the smaller b.
BandSelection select_band_oracle(const VolMatrix& estimate, const VolMatrix& truth, std::span<const long> b_grid);

struct ThresholdSelection {
  double threshold = 0.0;
  double a = 0.0;
  double mse = 0.0;
};

/// Exhaustive search over thresholds quantile_threshold(estimate, a), a in a_grid; ties go to the larger a.
ThresholdSelection select_threshold_oracle(const VolMatrix& estimate, const VolMatrix& truth,
                                           std::span<const double> a_grid, ThresholdOptions options = {});

/// {0, 1, 2, 4, 8, ..., p-1}
std::vector<long> default_b_grid(std::size_t p);
/// {0.50, 0.55, ..., 0.95, 0.99}
std::vector<double> default_a_grid();

enum class Estimator { arvm, barvm, tarvm };
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view s);

struct ExperimentConfig {
  std::size_t p = 64;
  long n = 200;
  std::vector<double> kappa0_grid{0.537};
  std::vector<NoiseLevel> noise_levels{NoiseLevel::low};
  std::vector<long> K_list{1, 5};
  std::vector<SyncMode> sync_modes{SyncMode::synchronized};
  long repetitions = 50;
  std::vector<Estimator> estimators{Estimator::arvm, Estimator::barvm, Estimator::tarvm};
  std::vector<long> b_grid;   // empty: default_b_grid(p)
  std::vector<double> a_grid;  // empty: default_a_grid()
  std::vector<double> theta;   // empty: default_theta(p)
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const;
  std::vector<long> resolved_b_grid() const;
  std::vector<double> resolved_a_grid() const;
};

/// One factor cell of an MSE table.
struct MseCell {
  NoiseLevel noise = NoiseLevel::low;
  SyncMode sync = SyncMode::synchronized;
  Estimator estimator = Estimator::arvm;
  long K = 1;
  long m = 0;
  double kappa0 = 0.0;
  double mse = 0.0;      // mean squared l2 error
  double mse_se = 0.0;   // Monte Carlo standard error of mse
  double mean_l2 = 0.0;  // mean unsquared l2 error
  long reps_ok = 0;
  long reps_failed = 0;
  double median_b = 0.0;          // barvm cells
  double median_threshold = 0.0;  // tarvm cells
  double median_a = 0.0;          // tarvm cells
  std::vector<double> sq_errors;  // by repetition index, NaN where a repetition failed
};

struct MseTable {
  std::vector<MseCell> cells;
  std::vector<std::string> failures;  // one message per failed repetition

  const MseCell& find(NoiseLevel noise, SyncMode sync, Estimator est, long K, double kappa0) const;
};

/// Simulate, estimate and oracle-regularize every factor cell. Repetitions run
/// concurrently on derived streams; the table is the same for any worker count.
MseTable run_mse_study(const ExperimentConfig& config);

struct PermutationRow {
  double kappa0 = 0.0;
  NoiseLevel noise = NoiseLevel::low;
  SyncMode sync = SyncMode::synchronized;
  long K = 1;
  double arvm_base = 0.0;
  double arvm_perm = 0.0;
  double barvm_base = 0.0;
  double barvm_perm = 0.0;
  double tarvm_base = 0.0;
  double tarvm_perm = 0.0;
  double barvm_ratio = 0.0;
  double tarvm_ratio = 0.0;
  double tarvm_max_rel_diff = 0.0;  // over repetitions, |perm - base| / base
  long reps_ok = 0;
  long reps_failed = 0;
};

struct PermutationReport {
  std::vector<PermutationRow> rows;
  const PermutationRow& find(double kappa0, NoiseLevel noise, SyncMode sync, long K) const;
};

/// Each repetition is estimated twice: as simulated, and after one random asset
/// permutation applied jointly to panel and truth (same draws).
PermutationReport run_permutation_study(const ExperimentConfig& config, bool identity_permutation = false);

/// Random permutation of 0..p-1 for one repetition.
std::vector<std::size_t> draw_permutation(std::size_t p, std::uint64_t seed, std::uint64_t repetition);

enum class KRule { n_two_thirds, n_one_third };
long classes_for_rule(long n, KRule rule);

struct ConvergenceSpec {
  std::vector<long> n_list{256, 512, 1024, 2048, 4096};
  KRule K_rule = KRule::n_two_thirds;
  long reps_per_n = 200;
  double target_slope = -1.0 / 6.0;
  NoiseLevel noise = NoiseLevel::medium;
  bool noiseless = false;
  VolModel model = VolModel::garch_diffusion;
  std::uint64_t seed = 1;
  unsigned workers = 0;

  void validate() const;
};

struct ConvergenceResult {
  std::vector<long> n;
  std::vector<long> K;
  std::vector<long> m;
  std::vector<double> median_error;
  double slope = 0.0;
  double intercept = 0.0;
  long failures = 0;
};

/// Single-asset study of |estimated - true| integrated volatility against n.
ConvergenceResult run_convergence_study(const ConvergenceSpec& spec);

/// Least-squares slope and intercept of log(y) on log(x).
std::pair<double, double> fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct MpResult {
  long n = 0;
  long p = 0;
  long reps = 0;
  double mean_largest = 0.0;
  double se = 0.0;
  double reference = 0.0;  // (1 + sqrt(p/n))^2
  std::vector<double> largest;
};

/// Largest eigenvalue of Z Z^T / n for i.i.d. N(0,1) Z (p x n), averaged over reps.
MpResult run_mp_sanity(long n, long p, long reps, std::uint64_t seed = 1);

struct CalibrationDay {
  long day = 0;
  double threshold = 0.0;            // quantile threshold at a*
  double raw_largest = 0.0;          // largest truncated eigenvalue of the daily estimate
  double thresholded_largest = 0.0;  // same after thresholding at a*
};

struct CalibrationDemo {
  CalibrationResult calibration;
  std::vector<VolMatrix> daily;
  std::vector<CalibrationDay> days;
};

/// Daily ARVM estimates, Lambda(a) calibration, and the per-day largest
/// eigenvalue before/after thresholding at a*.
CalibrationDemo run_calibration_demo(std::span<const Panel> panels, long m, std::span<const double> a_grid);

/// Independent simulated days: day d uses repetition d of `base`.
std::vector<Panel> simulate_daily_panels(const SimConfig& base, long days);

void write_mse_csv(const MseTable& table, std::ostream& out);
void write_mse_summary(const MseTable& table, std::ostream& out);
void write_permutation_csv(const PermutationReport& report, std::ostream& out);
void write_convergence_csv(const ConvergenceResult& result, std::ostream& out);
void write_mp_csv(const MpResult& result, std::ostream& out);
void write_calibration_days_csv(const CalibrationDemo& demo, std::ostream& out);

}  // namespace hfcov

#include "hfcov/arvm.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace hfcov {

namespace {

void check_sync(const Panel& panel, const SyncTable& sync) {
  if (sync.num_assets() != panel.num_assets()) throw std::invalid_argument("sync table does not match panel");
}

// Column i holds the m previous-tick increments of asset i on class k.
Eigen::MatrixXd class_increments(const Panel& panel, const SyncTable& sync, long k) {
  const auto p = static_cast<Eigen::Index>(panel.num_assets());
  Eigen::MatrixXd inc(sync.m(), p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto y = panel.asset(static_cast<std::size_t>(i)).log_prices();
    const auto row = static_cast<std::size_t>(i);
    for (long r = 1; r <= sync.m(); ++r) {
      inc(r - 1, i) = y[sync.index(row, k, r)] - y[sync.index(row, k, r - 1)];
    }
  }
  return inc;
}

// Explicit r-ordered sums keep every entry independent of evaluation order,
// which makes the result exactly equivariant under asset permutations.
Eigen::MatrixXd class_matrix(const Eigen::MatrixXd& inc) {
  const auto p = inc.cols();
  const auto m = inc.rows();
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) s += inc(r, i) * inc(r, j);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

}  // namespace

double realized_covol(const Panel& panel, std::size_t i, std::size_t j, const SyncTable& sync, long k) {
  check_sync(panel, sync);
  if (i >= panel.num_assets() || j >= panel.num_assets()) throw std::out_of_range("asset index out of range");
  if (k < 0 || k >= sync.K()) throw std::out_of_range("grid class out of range");
  const auto yi = panel.asset(i).log_prices();
  const auto yj = panel.asset(j).log_prices();
  double s = 0.0;
  for (long r = 1; r <= sync.m(); ++r) {
    const double di = yi[sync.index(i, k, r)] - yi[sync.index(i, k, r - 1)];
    const double dj = yj[sync.index(j, k, r)] - yj[sync.index(j, k, r - 1)];
    s += di * dj;
  }
  return s;
}

VolMatrix realized_matrix(const Panel& panel, const SyncTable& sync, long k) {
  check_sync(panel, sync);
  if (k < 0 || k >= sync.K()) throw std::out_of_range("grid class out of range");
  return VolMatrix(class_matrix(class_increments(panel, sync, k)), MatrixKind::per_grid, panel.asset_ids(),
                   {{"m", static_cast<double>(sync.m())}, {"grid_class", static_cast<double>(k + 1)}});
}

VolMatrix avg_realized_matrix(const Panel& panel, const SyncTable& sync) {
  check_sync(panel, sync);
  const auto p = static_cast<Eigen::Index>(panel.num_assets());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  for (long k = 0; k < sync.K(); ++k) sum += class_matrix(class_increments(panel, sync, k));
  sum /= static_cast<double>(sync.K());
  return VolMatrix(std::move(sum), MatrixKind::averaged, panel.asset_ids(),
                   {{"m", static_cast<double>(sync.m())}, {"K", static_cast<double>(sync.K())}});
}

VolMatrix avg_realized_matrix(const Panel& panel, const GridSpec& grid) {
  return avg_realized_matrix(panel, resolve_previous_ticks(panel, grid));
}

double noise_variance(const TickSeries& series) {
  const auto y = series.log_prices();
  if (y.size() < 2) throw std::invalid_argument("noise variance needs at least 2 observations");
  double s = 0.0;
  for (std::size_t l = 1; l < y.size(); ++l) {
    const double d = y[l] - y[l - 1];
    s += d * d;
  }
  return s / (2.0 * static_cast<double>(y.size() - 1));
}

NoiseVarianceVector noise_variances(const Panel& panel) {
  Eigen::VectorXd eta(static_cast<Eigen::Index>(panel.num_assets()));
  for (std::size_t i = 0; i < panel.num_assets(); ++i) eta(static_cast<Eigen::Index>(i)) = noise_variance(panel.asset(i));
  return NoiseVarianceVector(panel.asset_ids(), std::move(eta));
}

ArvmEstimate arvm_estimate(const Panel& panel, long m) {
  const GridSpec grid = make_grids(panel.avg_sample_size(), m);
  const VolMatrix avg = avg_realized_matrix(panel, grid);
  NoiseVarianceVector eta = noise_variances(panel);

  Eigen::MatrixXd values = avg.values();
  const double two_m = 2.0 * static_cast<double>(m);
  for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, i) -= two_m * eta.eta_hat()(i);

  VolMatrix est(std::move(values), MatrixKind::arvm, panel.asset_ids(),
                {{"m", static_cast<double>(grid.m())},
                 {"K", static_cast<double>(grid.K())},
                 {"n", static_cast<double>(grid.n())}});
  return {std::move(est), std::move(eta)};
}

}  // namespace hfcov

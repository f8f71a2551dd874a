#pragma once

#include <cstddef>

#include "hfcov/grid.hpp"
#include "hfcov/panel.hpp"
#include "hfcov/sampling.hpp"
#include "hfcov/vol_matrix.hpp"

namespace hfcov {

/// Realized co-volatility of assets i and j on grid class k (0-based):
/// sum over r = 1..m of the products of previous-tick increments. A repeated
/// previous-tick index contributes a zero increment.
double realized_covol(const Panel& panel, std::size_t i, std::size_t j, const SyncTable& sync, long k);

/// All pairs on grid class k; upper triangle computed and mirrored.
VolMatrix realized_matrix(const Panel& panel, const SyncTable& sync, long k);

/// Entrywise mean of the K per-grid realized matrices.
VolMatrix avg_realized_matrix(const Panel& panel, const SyncTable& sync);
VolMatrix avg_realized_matrix(const Panel& panel, const GridSpec& grid);

/// Noise variance from all N-1 consecutive differences: sum(dY^2) / (2(N-1)).
double noise_variance(const TickSeries& series);
NoiseVarianceVector noise_variances(const Panel& panel);

struct ArvmEstimate {
  VolMatrix matrix;  // kind arvm, meta {m, K, n}
  NoiseVarianceVector noise;
};

/// Averaged realized matrix with 2*m*eta_i subtracted from diagonal entry i.
/// No positivity repair is applied.
ArvmEstimate arvm_estimate(const Panel& panel, long m);

}  // namespace hfcov

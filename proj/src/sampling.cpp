#include "hfcov/sampling.hpp"

#include <algorithm>

#include "hfcov/csv.hpp"

namespace hfcov {

SyncTable::SyncTable(std::size_t num_assets, long K, long m)
    : p_(num_assets),
      K_(K),
      m_(m),
      indices_(num_assets * static_cast<std::size_t>(K) * static_cast<std::size_t>(m + 1), 0),
      flags_(indices_.size(), 0) {}

SyncTable resolve_previous_ticks(const Panel& panel, const GridSpec& grid) {
  SyncTable table(panel.num_assets(), grid.K(), grid.m());
  for (std::size_t i = 0; i < panel.num_assets(); ++i) {
    const auto& series = panel.asset(i);
    const auto times = series.times();
    for (long k = 0; k < grid.K(); ++k) {
      // grid points increase in r, so the search can resume from the last hit
      auto from = times.begin();
      for (long r = 0; r <= grid.m(); ++r) {
        const double t = grid.point(k, r);
        const auto it = std::upper_bound(from, times.end(), t);
        if (it == times.begin()) {
          table.set(i, k, r, {0, true});
        } else {
          table.set(i, k, r, {static_cast<std::size_t>(it - times.begin()) - 1, false});
          from = it - 1;
        }
      }
    }
  }
  return table;
}

void write_sync_table_csv(const SyncTable& table, const Panel& panel, const GridSpec& grid, std::ostream& out) {
  out << "asset_id,grid_class,r,grid_time,index,tick_time,flagged\n";
  for (std::size_t i = 0; i < table.num_assets(); ++i) {
    const auto& series = panel.asset(i);
    for (long k = 0; k < table.K(); ++k) {
      for (long r = 0; r <= table.m(); ++r) {
        const auto idx = table.index(i, k, r);
        out << series.asset_id() << ',' << k + 1 << ',' << r << ',' << csv::format(grid.point(k, r)) << ',' << idx
            << ',' << csv::format(series.times()[idx]) << ',' << (table.flagged(i, k, r) ? 1 : 0) << '\n';
      }
    }
  }
}

}  // namespace hfcov

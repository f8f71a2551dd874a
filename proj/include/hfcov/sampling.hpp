#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "hfcov/grid.hpp"
#include "hfcov/panel.hpp"

namespace hfcov {

/// Previous-tick observation indices of every asset on every grid point,
/// laid out as [asset][class][r] with r = 0..m.
class SyncTable {
 public:
  SyncTable(std::size_t num_assets, long K, long m);

  std::size_t num_assets() const { return p_; }
  long K() const { return K_; }
  long m() const { return m_; }

  std::size_t index(std::size_t i, long k, long r) const { return indices_[offset(i, k, r)]; }
  bool flagged(std::size_t i, long k, long r) const { return flags_[offset(i, k, r)] != 0; }

  void set(std::size_t i, long k, long r, PreviousTick tick) {
    indices_[offset(i, k, r)] = tick.index;
    flags_[offset(i, k, r)] = tick.before_first ? 1 : 0;
  }

 private:
  std::size_t offset(std::size_t i, long k, long r) const {
    return (i * static_cast<std::size_t>(K_) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(m_ + 1) +
           static_cast<std::size_t>(r);
  }

  std::size_t p_;
  long K_;
  long m_;
  std::vector<std::size_t> indices_;
  std::vector<std::uint8_t> flags_;
};

SyncTable resolve_previous_ticks(const Panel& panel, const GridSpec& grid);

/// Debug dump: asset_id,grid_class,r,grid_time,index,tick_time,flagged
void write_sync_table_csv(const SyncTable& table, const Panel& panel, const GridSpec& grid, std::ostream& out);

}  // namespace hfcov

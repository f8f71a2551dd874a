#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfcov/grid.hpp"

namespace hfcov {

/// Irregular noisy log-price observations of one asset on [0,1].
///
/// Invariants (checked at construction): at least two observations, times
/// strictly increasing and inside [0,1], all prices finite.
class TickSeries {
 public:
  TickSeries(std::string asset_id, std::vector<double> times, std::vector<double> log_prices);

  const std::string& asset_id() const { return asset_id_; }
  std::span<const double> times() const { return times_; }
  std::span<const double> log_prices() const { return log_prices_; }
  std::size_t size() const { return times_.size(); }

  friend bool operator==(const TickSeries&, const TickSeries&) = default;

 private:
  std::string asset_id_;
  std::vector<double> times_;
  std::vector<double> log_prices_;
};

/// Linear map from raw session timestamps onto [0,1].
struct SessionMapping {
  double open;
  double close;

  double to_unit(double raw) const { return (raw - open) / (close - open); }
  friend bool operator==(const SessionMapping&, const SessionMapping&) = default;
};

/// A p-asset panel. Asset ids are unique; avg_sample_size() is round(mean n_i).
class Panel {
 public:
  explicit Panel(std::vector<TickSeries> assets, std::optional<SessionMapping> mapping = std::nullopt);

  std::size_t num_assets() const { return assets_.size(); }
  const TickSeries& asset(std::size_t i) const { return assets_.at(i); }
  const std::vector<TickSeries>& assets() const { return assets_; }
  long avg_sample_size() const { return avg_sample_size_; }
  const std::optional<SessionMapping>& session_mapping() const { return mapping_; }
  std::vector<std::string> asset_ids() const;

  /// Panel whose asset slot q holds this panel's asset perm[q].
  Panel permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const Panel& a, const Panel& b) { return a.assets_ == b.assets_; }

 private:
  std::vector<TickSeries> assets_;
  long avg_sample_size_;
  std::optional<SessionMapping> mapping_;
};

/// Parse error carrying the 1-based line and column of the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

enum class PanelFormat { long_csv };

struct LoadOptions {
  PanelFormat format = PanelFormat::long_csv;
  // When set, the time column holds raw timestamps that are mapped to [0,1].
  std::optional<SessionMapping> session;
};

/// Reads `asset_id,time,log_price` rows. Assets appear in order of first
/// occurrence; rows of an asset may come in any order and are sorted by time.
Panel load_panel(const std::filesystem::path& path, const LoadOptions& options = {});
Panel read_panel(std::istream& in, const LoadOptions& options = {});

/// Writes the long CSV form with shortest round-trip decimal formatting.
void write_panel(const Panel& panel, const std::filesystem::path& path);
void write_panel(const Panel& panel, std::ostream& out);

struct PreviousTick {
  std::size_t index;
  bool before_first;  // t precedes the first observation; index is 0
};

/// Latest observation with time <= t. Past the last tick the last index is returned.
PreviousTick previous_tick(const TickSeries& series, double t);

struct AssetDiagnostics {
  std::string asset_id;
  std::size_t num_obs = 0;
  double size_ratio = 0.0;  // n_i / n
  double max_gap = 0.0;
  std::vector<long> empty_intervals;  // per grid class
};

struct PanelDiagnostics {
  long n = 0;
  long m = 0;
  long K = 0;
  double min_size_ratio = 0.0;
  double max_size_ratio = 0.0;
  double max_gap = 0.0;
  long total_empty_intervals = 0;
  std::optional<SessionMapping> mapping;
  std::vector<AssetDiagnostics> assets;
};

/// Counts grid intervals (tau_{r-1}, tau_r] without an observation, per asset
/// and class, plus the sample-size ratios and the largest gap between ticks.
PanelDiagnostics validate_panel(const Panel& panel, const GridSpec& grid);

void write_diagnostics_csv(const PanelDiagnostics& diag, std::ostream& out);

}  // namespace hfcov

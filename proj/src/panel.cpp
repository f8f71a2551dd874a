#include "hfcov/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hfcov/csv.hpp"

namespace hfcov {

TickSeries::TickSeries(std::string asset_id, std::vector<double> times, std::vector<double> log_prices)
    : asset_id_(std::move(asset_id)), times_(std::move(times)), log_prices_(std::move(log_prices)) {
  if (times_.size() != log_prices_.size()) {
    throw std::invalid_argument("asset " + asset_id_ + ": times and log_prices differ in length");
  }
  if (times_.size() < 2) throw std::invalid_argument("asset " + asset_id_ + ": need at least 2 observations");
  for (std::size_t l = 0; l < times_.size(); ++l) {
    if (!(times_[l] >= 0.0 && times_[l] <= 1.0)) {
      throw std::invalid_argument("asset " + asset_id_ + ": time outside unit interval");
    }
    if (!std::isfinite(log_prices_[l])) throw std::invalid_argument("asset " + asset_id_ + ": non-finite log price");
    if (l > 0 && !(times_[l] > times_[l - 1])) {
      throw std::invalid_argument("asset " + asset_id_ + ": times not strictly increasing");
    }
  }
}

Panel::Panel(std::vector<TickSeries> assets, std::optional<SessionMapping> mapping)
    : assets_(std::move(assets)), avg_sample_size_(0), mapping_(mapping) {
  if (assets_.empty()) throw std::invalid_argument("panel needs at least one asset");
  std::set<std::string_view> ids;
  std::size_t total = 0;
  for (const auto& a : assets_) {
    if (!ids.insert(a.asset_id()).second) throw std::invalid_argument("duplicate asset id " + a.asset_id());
    total += a.size();
  }
  avg_sample_size_ = std::lround(static_cast<double>(total) / static_cast<double>(assets_.size()));
}

std::vector<std::string> Panel::asset_ids() const {
  std::vector<std::string> ids;
  ids.reserve(assets_.size());
  for (const auto& a : assets_) ids.push_back(a.asset_id());
  return ids;
}

Panel Panel::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != assets_.size()) throw std::invalid_argument("permutation length differs from panel size");
  std::vector<TickSeries> out;
  out.reserve(perm.size());
  for (std::size_t q : perm) out.push_back(assets_.at(q));
  return Panel(std::move(out), mapping_);
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

Panel read_panel(std::istream& in, const LoadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty input, expected header", 1, 1);
  ++line_no;
  {
    const auto header = csv::split(line);
    if (header.size() != 3 || header[0] != "asset_id" || header[1] != "time" || header[2] != "log_price") {
      throw ParseError("expected header asset_id,time,log_price", 1, 1);
    }
  }

  struct Row {
    double time;
    double price;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), line_no, 1);
    }
    if (fields[0].empty()) throw ParseError("empty asset_id", line_no, 1);
    double t = 0.0;
    double y = 0.0;
    if (!csv::parse(fields[1], t)) throw ParseError("cannot parse time '" + std::string(fields[1]) + "'", line_no, 2);
    if (!csv::parse(fields[2], y) || !std::isfinite(y)) {
      throw ParseError("cannot parse log_price '" + std::string(fields[2]) + "'", line_no, 3);
    }
    if (options.session) t = options.session->to_unit(t);
    if (!(t >= 0.0 && t <= 1.0)) throw ParseError("time outside unit interval", line_no, 2);

    std::string id(fields[0]);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({t, y, line_no});
  }
  if (order.empty()) throw ParseError("no data rows", line_no, 1);

  std::vector<TickSeries> assets;
  assets.reserve(order.size());
  for (const auto& id : order) {
    auto& r = rows[id];
    std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
    std::vector<double> times;
    std::vector<double> prices;
    times.reserve(r.size());
    prices.reserve(r.size());
    for (std::size_t l = 0; l < r.size(); ++l) {
      if (l > 0 && r[l].time == r[l - 1].time) {
        throw ParseError("duplicate (asset, time) pair for asset " + id, r[l].line, 2);
      }
      times.push_back(r[l].time);
      prices.push_back(r[l].price);
    }
    if (times.size() < 2) throw ParseError("asset " + id + " has fewer than 2 observations", r.front().line, 1);
    assets.emplace_back(id, std::move(times), std::move(prices));
  }
  return Panel(std::move(assets), options.session);
}

Panel load_panel(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel file " + path.string());
  return read_panel(in, options);
}

void write_panel(const Panel& panel, std::ostream& out) {
  out << "asset_id,time,log_price\n";
  for (const auto& a : panel.assets()) {
    const auto t = a.times();
    const auto y = a.log_prices();
    for (std::size_t l = 0; l < a.size(); ++l) {
      out << a.asset_id() << ',' << csv::format(t[l]) << ',' << csv::format(y[l]) << '\n';
    }
  }
}

void write_panel(const Panel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_panel(panel, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

PreviousTick previous_tick(const TickSeries& series, double t) {
  const auto times = series.times();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return {0, true};
  return {static_cast<std::size_t>(it - times.begin()) - 1, false};
}

PanelDiagnostics validate_panel(const Panel& panel, const GridSpec& grid) {
  PanelDiagnostics diag;
  diag.n = panel.avg_sample_size();
  diag.m = grid.m();
  diag.K = grid.K();
  diag.mapping = panel.session_mapping();
  diag.min_size_ratio = std::numeric_limits<double>::infinity();
  diag.max_size_ratio = 0.0;

  for (const auto& a : panel.assets()) {
    AssetDiagnostics ad;
    ad.asset_id = a.asset_id();
    ad.num_obs = a.size();
    ad.size_ratio = static_cast<double>(a.size()) / static_cast<double>(diag.n);
    const auto times = a.times();
    for (std::size_t l = 1; l < times.size(); ++l) ad.max_gap = std::max(ad.max_gap, times[l] - times[l - 1]);

    ad.empty_intervals.assign(static_cast<std::size_t>(grid.K()), 0);
    for (long k = 0; k < grid.K(); ++k) {
      for (long r = 1; r <= grid.m(); ++r) {
        const double lo = grid.point(k, r - 1);
        const double hi = grid.point(k, r);
        // any tick in (lo, hi]?
        const auto first_after = std::upper_bound(times.begin(), times.end(), lo);
        if (first_after == times.end() || *first_after > hi) ++ad.empty_intervals[static_cast<std::size_t>(k)];
      }
      diag.total_empty_intervals += ad.empty_intervals[static_cast<std::size_t>(k)];
    }
    diag.min_size_ratio = std::min(diag.min_size_ratio, ad.size_ratio);
    diag.max_size_ratio = std::max(diag.max_size_ratio, ad.size_ratio);
    diag.max_gap = std::max(diag.max_gap, ad.max_gap);
    diag.assets.push_back(std::move(ad));
  }
  return diag;
}

void write_diagnostics_csv(const PanelDiagnostics& diag, std::ostream& out) {
  out << "# n=" << diag.n << " m=" << diag.m << " K=" << diag.K << " min_ratio=" << csv::format(diag.min_size_ratio)
      << " max_ratio=" << csv::format(diag.max_size_ratio) << " max_gap=" << csv::format(diag.max_gap)
      << " empty_intervals=" << diag.total_empty_intervals << '\n';
  if (diag.mapping) {
    out << "# session_open=" << csv::format(diag.mapping->open) << " session_close=" << csv::format(diag.mapping->close)
        << " time=(raw-open)/(close-open)\n";
  }
  out << "asset_id,num_obs,size_ratio,max_gap,grid_class,empty_intervals\n";
  for (const auto& a : diag.assets) {
    for (std::size_t k = 0; k < a.empty_intervals.size(); ++k) {
      out << a.asset_id << ',' << a.num_obs << ',' << csv::format(a.size_ratio) << ',' << csv::format(a.max_gap) << ','
          << k + 1 << ',' << a.empty_intervals[k] << '\n';
    }
  }
}

}  // namespace hfcov

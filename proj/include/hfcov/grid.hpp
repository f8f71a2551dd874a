#pragma once

#include <cstddef>

namespace hfcov {

// K = floor(n/m) shifted regular grids on [0,1]. Class k (0-based) holds the
// points r/m + k/n for r = 0..m, so class 0 starts at 0 and class k at k/n.
// Points of classes k > 0 near r = m exceed 1; lookups clamp them to the last
// tick of each series.
class GridSpec {
 public:
  GridSpec(long n, long m);

  long n() const { return n_; }
  long m() const { return m_; }
  long K() const { return K_; }

  // Evaluated as one correctly rounded division of exact integers, so a grid
  // point equal to an observation time l/n (or l/(3n)) compares equal to it.
  double point(long k, long r) const;

 private:
  long n_;
  long m_;
  long K_;
};

/// Builds the K = floor(n/m) grid classes; throws std::invalid_argument unless 1 <= m <= n.
GridSpec make_grids(long n, long m);

/// m = floor(n/K), the grid size used when the caller fixes K instead of m.
long grid_size_for_classes(long n, long K);

}  // namespace hfcov

#include "hfcov/grid.hpp"

#include <stdexcept>
#include <string>

namespace hfcov {

GridSpec::GridSpec(long n, long m) : n_(n), m_(m), K_(0) {
  if (m <= 0) throw std::invalid_argument("grid size m must be positive, got " + std::to_string(m));
  if (m > n) {
    throw std::invalid_argument("grid size m=" + std::to_string(m) + " exceeds average sample size n=" +
                                std::to_string(n));
  }
  K_ = n / m;
}

double GridSpec::point(long k, long r) const {
  // r/m + k/n = (r*n + k*m) / (m*n)
  const long long num = static_cast<long long>(r) * n_ + static_cast<long long>(k) * m_;
  const long long den = static_cast<long long>(m_) * n_;
  return static_cast<double>(num) / static_cast<double>(den);
}

GridSpec make_grids(long n, long m) { return GridSpec(n, m); }

long grid_size_for_classes(long n, long K) {
  if (K <= 0) throw std::invalid_argument("number of grid classes K must be positive");
  if (K > n) throw std::invalid_argument("K=" + std::to_string(K) + " exceeds n=" + std::to_string(n));
  return n / K;
}

}  // namespace hfcov

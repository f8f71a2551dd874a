#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "hfcov/vol_matrix.hpp"

namespace hfcov {

/// Keeps entries with |i - j| <= b. b >= p-1 returns the input values.
VolMatrix band(const VolMatrix& matrix, long b);

struct ThresholdOptions {
  bool keep_diagonal = false;  // exempt the diagonal from thresholding
};

/// Keeps entries with |value| >= threshold (inclusive), diagonal included unless exempted.
VolMatrix threshold(const VolMatrix& matrix, double threshold, ThresholdOptions options = {});

/// Lower empirical a-quantile of the p^2 absolute entries: the smallest |entry|
/// v such that the fraction of entries <= v is at least a.
double quantile_threshold(const VolMatrix& matrix, double a);

struct BandSpec {
  long b;
};
struct ThresholdSpec {
  double threshold;
};
struct QuantileSpec {
  double a;
};

/// Exactly one regularization mode.
using RegSpec = std::variant<BandSpec, ThresholdSpec, QuantileSpec>;

void validate(const RegSpec& spec);
VolMatrix regularize(const VolMatrix& matrix, const RegSpec& spec, ThresholdOptions options = {});

enum class NormType { l1, l2, linf };

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// l1: max absolute column sum; linf: max absolute row sum; l2: largest
/// singular value (largest |eigenvalue| for exactly symmetric input).
double operator_norm(const Eigen::MatrixXd& matrix, NormType type);

struct EigenDiagnostics {
  std::vector<double> eigenvalues;  // descending
  std::vector<double> truncated;    // max(lambda, 0), same order
  double largest = 0.0;             // largest truncated eigenvalue
};

EigenDiagnostics eigen_diagnostics(const VolMatrix& matrix);

struct CalibrationResult {
  double a_star = 0.0;
  std::vector<std::pair<double, double>> lambda_values;  // (a, Lambda(a)) in a_grid order

  double lambda_at(double a) const;
};

/// Lambda(a) = sum_i || M_{i+1} - T_{w(i,a)}[M_i] ||_2^2 with w(i,a) the
/// a-quantile of |M_i|; minimized over a_grid, ties resolved toward larger a.
CalibrationResult calibrate_threshold_lambda(std::span<const VolMatrix> sequence, std::span<const double> a_grid,
                                             ThresholdOptions options = {});

void write_calibration_csv(const CalibrationResult& result, std::ostream& out);

}  // namespace hfcov

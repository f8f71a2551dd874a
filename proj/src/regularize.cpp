#include "hfcov/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "hfcov/csv.hpp"

namespace hfcov {

VolMatrix band(const VolMatrix& matrix, long b) {
  if (b < 0) throw std::invalid_argument("band width must be nonnegative");
  const auto p = matrix.dim();
  Eigen::MatrixXd out = matrix.values();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(i - j) > b) out(i, j) = 0.0;
    }
  }
  return matrix.derive(std::move(out), MatrixKind::banded, {{"b", static_cast<double>(b)}});
}

VolMatrix threshold(const VolMatrix& matrix, double threshold, ThresholdOptions options) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be nonnegative");
  const auto p = matrix.dim();
  Eigen::MatrixXd out = matrix.values();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (options.keep_diagonal && i == j) continue;
      if (!(std::abs(out(i, j)) >= threshold)) out(i, j) = 0.0;
    }
  }
  return matrix.derive(std::move(out), MatrixKind::thresholded, {{"threshold", threshold}});
}

double quantile_threshold(const VolMatrix& matrix, double a) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
  std::vector<double> abs_entries(static_cast<std::size_t>(matrix.values().size()));
  const double* data = matrix.values().data();
  for (std::size_t q = 0; q < abs_entries.size(); ++q) abs_entries[q] = std::abs(data[q]);
  // smallest order statistic x_(k) with k/N >= a, i.e. k = ceil(a N)
  const auto N = abs_entries.size();
  const auto frac = [N](std::size_t k) { return static_cast<double>(k) / static_cast<double>(N); };
  auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(a * static_cast<double>(N))), 1, N);
  // a*N can round across an integer; settle on the fraction test itself
  while (k > 1 && frac(k - 1) >= a) --k;
  while (k < N && frac(k) < a) ++k;
  std::nth_element(abs_entries.begin(), abs_entries.begin() + static_cast<std::ptrdiff_t>(k - 1), abs_entries.end());
  return abs_entries[k - 1];
}

void validate(const RegSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BandSpec>) {
          if (s.b < 0) throw std::invalid_argument("band width must be nonnegative");
        } else if constexpr (std::is_same_v<T, ThresholdSpec>) {
          if (!(s.threshold >= 0.0)) throw std::invalid_argument("threshold must be nonnegative");
        } else {
          if (!(s.a > 0.0 && s.a < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
        }
      },
      spec);
}

VolMatrix regularize(const VolMatrix& matrix, const RegSpec& spec, ThresholdOptions options) {
  validate(spec);
  if (const auto* b = std::get_if<BandSpec>(&spec)) return band(matrix, b->b);
  if (const auto* t = std::get_if<ThresholdSpec>(&spec)) return threshold(matrix, t->threshold, options);
  const double a = std::get<QuantileSpec>(spec).a;
  auto out = threshold(matrix, quantile_threshold(matrix, a), options);
  return out.derive(out.values(), MatrixKind::thresholded, {{"a", a}});
}

double operator_norm(const Eigen::MatrixXd& matrix, NormType type) {
  if (!matrix.allFinite()) throw std::invalid_argument("operator norm of a matrix with non-finite entries");
  if (matrix.size() == 0) return 0.0;
  switch (type) {
    case NormType::l1: return matrix.cwiseAbs().colwise().sum().maxCoeff();
    case NormType::linf: return matrix.cwiseAbs().rowwise().sum().maxCoeff();
    case NormType::l2: break;
  }
  if (matrix.rows() == matrix.cols() && matrix == matrix.transpose()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw EigenSolverError("symmetric eigensolver did not converge within " +
                             std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) + "*" +
                             std::to_string(matrix.rows()) + " QR iterations");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
  if (svd.info() != Eigen::Success) throw EigenSolverError("Jacobi SVD did not converge");
  return svd.singularValues()(0);
}

EigenDiagnostics eigen_diagnostics(const VolMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix.values(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw EigenSolverError("symmetric eigensolver did not converge for a " + std::to_string(matrix.dim()) + "x" +
                           std::to_string(matrix.dim()) + " matrix");
  }
  EigenDiagnostics out;
  const auto& ev = solver.eigenvalues();  // ascending
  for (Eigen::Index q = ev.size(); q-- > 0;) {
    out.eigenvalues.push_back(ev(q));
    out.truncated.push_back(std::max(ev(q), 0.0));
  }
  out.largest = out.truncated.front();
  return out;
}

double CalibrationResult::lambda_at(double a) const {
  for (const auto& [level, value] : lambda_values) {
    if (level == a) return value;
  }
  throw std::out_of_range("quantile level not in calibration grid");
}

CalibrationResult calibrate_threshold_lambda(std::span<const VolMatrix> sequence, std::span<const double> a_grid,
                                             ThresholdOptions options) {
  if (sequence.size() < 2) throw std::invalid_argument("calibration needs at least 2 matrices");
  if (a_grid.empty()) throw std::invalid_argument("calibration grid is empty");
  const auto p = sequence.front().dim();
  for (const auto& m : sequence) {
    if (m.dim() != p) throw std::invalid_argument("calibration matrices differ in dimension");
  }
  for (double a : a_grid) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
  }

  CalibrationResult result;
  result.lambda_values.reserve(a_grid.size());
  for (double a : a_grid) {
    double lambda = 0.0;
    for (std::size_t i = 0; i + 1 < sequence.size(); ++i) {
      const auto& today = sequence[i];
      const VolMatrix predicted = threshold(today, quantile_threshold(today, a), options);
      const double err = operator_norm(sequence[i + 1].values() - predicted.values(), NormType::l2);
      lambda += err * err;
    }
    result.lambda_values.emplace_back(a, lambda);
  }

  auto best = result.lambda_values.front();
  for (const auto& cand : result.lambda_values) {
    if (cand.second < best.second || (cand.second == best.second && cand.first > best.first)) best = cand;
  }
  result.a_star = best.first;
  return result;
}

void write_calibration_csv(const CalibrationResult& result, std::ostream& out) {
  out << "a,lambda\n";
  for (const auto& [a, lambda] : result.lambda_values) out << csv::format(a) << ',' << csv::format(lambda) << '\n';
}

}  // namespace hfcov

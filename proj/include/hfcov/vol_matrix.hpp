#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hfcov {

enum class MatrixKind { per_grid, averaged, arvm, banded, thresholded, truth };

std::string_view to_string(MatrixKind kind);

/// Estimation parameters attached to a matrix ("m", "K", "b", "threshold", ...).
using MatrixMeta = std::map<std::string, double>;

/// Symmetric p x p volatility matrix with provenance.
///
/// The constructor rejects matrices that are not exactly symmetric or carry
/// non-finite entries; from_upper() mirrors the upper triangle instead.
class VolMatrix {
 public:
  VolMatrix(Eigen::MatrixXd values, MatrixKind kind, std::vector<std::string> asset_ids = {}, MatrixMeta meta = {});

  static VolMatrix from_upper(const Eigen::MatrixXd& values, MatrixKind kind, std::vector<std::string> asset_ids = {},
                              MatrixMeta meta = {});

  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  Eigen::Index dim() const { return values_.rows(); }
  MatrixKind kind() const { return kind_; }
  const std::vector<std::string>& asset_ids() const { return asset_ids_; }
  const MatrixMeta& meta() const { return meta_; }

  /// Copy with different values/kind; ids carried over, meta merged with `extra`.
  VolMatrix derive(Eigen::MatrixXd values, MatrixKind kind, const MatrixMeta& extra = {}) const;

  /// Rows and columns reordered so that slot q holds entry perm[q].
  VolMatrix permuted(std::span<const std::size_t> perm) const;

 private:
  Eigen::MatrixXd values_;
  MatrixKind kind_;
  std::vector<std::string> asset_ids_;
  MatrixMeta meta_;
};

/// Per-asset noise variance estimates, all >= 0.
class NoiseVarianceVector {
 public:
  NoiseVarianceVector(std::vector<std::string> asset_ids, Eigen::VectorXd eta_hat);

  const Eigen::VectorXd& eta_hat() const { return eta_hat_; }
  const std::vector<std::string>& asset_ids() const { return asset_ids_; }
  Eigen::Index size() const { return eta_hat_.size(); }

 private:
  std::vector<std::string> asset_ids_;
  Eigen::VectorXd eta_hat_;
};

// Dense form: one header line of asset ids, then p rows of p values.
void write_dense_csv(const VolMatrix& m, std::ostream& out);
void write_dense_csv(const VolMatrix& m, const std::filesystem::path& path);
VolMatrix read_dense_csv(std::istream& in, MatrixKind kind);
VolMatrix read_dense_csv(const std::filesystem::path& path, MatrixKind kind);

// Sparse form: "# p=<p>" line, header "i,j,value", then the nonzero entries
// with 0-based indices (both triangles).
void write_sparse_triplets(const VolMatrix& m, std::ostream& out);
VolMatrix read_sparse_triplets(std::istream& in, MatrixKind kind);

// Two columns: asset_id,eta_hat
void write_noise_csv(const NoiseVarianceVector& eta, std::ostream& out);

}  // namespace hfcov

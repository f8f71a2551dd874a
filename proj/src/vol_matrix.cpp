#include "hfcov/vol_matrix.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "hfcov/csv.hpp"
#include "hfcov/panel.hpp"

namespace hfcov {

std::string_view to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::per_grid: return "per_grid";
    case MatrixKind::averaged: return "averaged";
    case MatrixKind::arvm: return "arvm";
    case MatrixKind::banded: return "banded";
    case MatrixKind::thresholded: return "thresholded";
    case MatrixKind::truth: return "truth";
  }
  return "unknown";
}

namespace {

std::vector<std::string> default_ids(Eigen::Index p) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) ids.push_back("asset_" + std::to_string(i));
  return ids;
}

}  // namespace

VolMatrix::VolMatrix(Eigen::MatrixXd values, MatrixKind kind, std::vector<std::string> asset_ids, MatrixMeta meta)
    : values_(std::move(values)), kind_(kind), asset_ids_(std::move(asset_ids)), meta_(std::move(meta)) {
  if (values_.rows() != values_.cols()) throw std::invalid_argument("volatility matrix must be square");
  if (values_.rows() == 0) throw std::invalid_argument("volatility matrix must be nonempty");
  if (!values_.allFinite()) throw std::invalid_argument("volatility matrix has non-finite entries");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < values_.cols(); ++j) {
      if (values_(i, j) != values_(j, i)) throw std::invalid_argument("volatility matrix is not symmetric");
    }
  }
  if (asset_ids_.empty()) asset_ids_ = default_ids(values_.rows());
  if (static_cast<Eigen::Index>(asset_ids_.size()) != values_.rows()) {
    throw std::invalid_argument("asset id count does not match matrix dimension");
  }
}

VolMatrix VolMatrix::from_upper(const Eigen::MatrixXd& values, MatrixKind kind, std::vector<std::string> asset_ids,
                                MatrixMeta meta) {
  Eigen::MatrixXd sym = values.triangularView<Eigen::Upper>();
  sym.triangularView<Eigen::StrictlyLower>() = values.triangularView<Eigen::StrictlyUpper>().transpose();
  return VolMatrix(std::move(sym), kind, std::move(asset_ids), std::move(meta));
}

VolMatrix VolMatrix::derive(Eigen::MatrixXd values, MatrixKind kind, const MatrixMeta& extra) const {
  MatrixMeta meta = meta_;
  for (const auto& [k, v] : extra) meta[k] = v;
  return VolMatrix(std::move(values), kind, asset_ids_, std::move(meta));
}

VolMatrix VolMatrix::permuted(std::span<const std::size_t> perm) const {
  const auto p = dim();
  if (static_cast<Eigen::Index>(perm.size()) != p) throw std::invalid_argument("permutation length mismatch");
  Eigen::MatrixXd out(p, p);
  std::vector<std::string> ids(perm.size());
  for (Eigen::Index a = 0; a < p; ++a) {
    ids[static_cast<std::size_t>(a)] = asset_ids_.at(perm[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < p; ++b) {
      out(a, b) = values_(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(a)]),
                          static_cast<Eigen::Index>(perm[static_cast<std::size_t>(b)]));
    }
  }
  return VolMatrix(std::move(out), kind_, std::move(ids), meta_);
}

NoiseVarianceVector::NoiseVarianceVector(std::vector<std::string> asset_ids, Eigen::VectorXd eta_hat)
    : asset_ids_(std::move(asset_ids)), eta_hat_(std::move(eta_hat)) {
  if (static_cast<Eigen::Index>(asset_ids_.size()) != eta_hat_.size()) {
    throw std::invalid_argument("noise variance vector: id count mismatch");
  }
  for (Eigen::Index i = 0; i < eta_hat_.size(); ++i) {
    if (!(eta_hat_(i) >= 0.0)) throw std::invalid_argument("noise variance estimates must be nonnegative");
  }
}

void write_dense_csv(const VolMatrix& m, std::ostream& out) {
  const auto& ids = m.asset_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
  out << '\n';
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) out << (j ? "," : "") << csv::format(m(i, j));
    out << '\n';
  }
}

void write_dense_csv(const VolMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dense_csv(m, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

VolMatrix read_dense_csv(std::istream& in, MatrixKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty matrix file", 1, 1);
  std::vector<std::string> ids;
  for (auto f : csv::split(line)) ids.emplace_back(f);
  const auto p = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd values(p, p);
  Eigen::Index row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    if (row >= p) throw ParseError("more rows than header columns", line_no, 1);
    const auto fields = csv::split(line);
    if (static_cast<Eigen::Index>(fields.size()) != p) {
      throw ParseError("expected " + std::to_string(p) + " values", line_no, 1);
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      double v = 0.0;
      if (!csv::parse(fields[static_cast<std::size_t>(j)], v)) {
        throw ParseError("cannot parse matrix entry", line_no, static_cast<std::size_t>(j) + 1);
      }
      values(row, j) = v;
    }
    ++row;
  }
  if (row != p) throw ParseError("expected " + std::to_string(p) + " matrix rows", line_no, 1);
  return VolMatrix(std::move(values), kind, std::move(ids));
}

VolMatrix read_dense_csv(const std::filesystem::path& path, MatrixKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file " + path.string());
  return read_dense_csv(in, kind);
}

void write_sparse_triplets(const VolMatrix& m, std::ostream& out) {
  out << "# p=" << m.dim() << '\n' << "i,j,value\n";
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) {
      if (m(i, j) != 0.0) out << i << ',' << j << ',' << csv::format(m(i, j)) << '\n';
    }
  }
}

VolMatrix read_sparse_triplets(std::istream& in, MatrixKind kind) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# p=", 0) != 0) throw ParseError("expected '# p=<dim>' line", 1, 1);
  long p = 0;
  if (!csv::parse(std::string_view(line).substr(4), p) || p <= 0) throw ParseError("bad dimension", 1, 5);
  if (!std::getline(in, line) || csv::trim(line) != "i,j,value") throw ParseError("expected header i,j,value", 2, 1);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(p, p);
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    long i = 0;
    long j = 0;
    double v = 0.0;
    if (f.size() != 3) throw ParseError("expected 3 fields", line_no, 1);
    if (!csv::parse(f[0], i) || i < 0 || i >= p) throw ParseError("bad row index", line_no, 1);
    if (!csv::parse(f[1], j) || j < 0 || j >= p) throw ParseError("bad column index", line_no, 2);
    if (!csv::parse(f[2], v)) throw ParseError("bad value", line_no, 3);
    values(i, j) = v;
  }
  return VolMatrix(std::move(values), kind);
}

void write_noise_csv(const NoiseVarianceVector& eta, std::ostream& out) {
  out << "asset_id,eta_hat\n";
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    out << eta.asset_ids()[static_cast<std::size_t>(i)] << ',' << csv::format(eta.eta_hat()(i)) << '\n';
  }
}

}  // namespace hfcov

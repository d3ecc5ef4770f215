#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "textclust/collation.hpp"

// Sparse reading-by-witness matrix with row/column labels and per-row
// weights (uniform or IDF).

namespace textclust {

class CollationMatrix {
 public:
  CollationMatrix(std::size_t m, std::size_t n,
                  std::vector<Eigen::Triplet<double>> triplets,
                  std::vector<ReadingId> row_labels,
                  std::vector<std::string> col_labels)
      : mat_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)),
        row_labels_(std::move(row_labels)),
        col_labels_(std::move(col_labels)),
        row_weights_(m, 1.0) {
    if (row_labels_.size() != m || col_labels_.size() != n)
      throw std::invalid_argument("label count does not match matrix shape");
    for (const auto& t : triplets) {
      if (t.value() < 0 || !std::isfinite(t.value()))
        throw std::invalid_argument("matrix values must be non-negative and finite");
    }
    mat_.setFromTriplets(triplets.begin(), triplets.end());
    mat_.makeCompressed();
  }

  std::size_t rows() const { return static_cast<std::size_t>(mat_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(mat_.cols()); }
  std::size_t nonzeros() const { return static_cast<std::size_t>(mat_.nonZeros()); }

  const Eigen::SparseMatrix<double, Eigen::RowMajor>& sparse() const { return mat_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(mat_); }

  const std::vector<ReadingId>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }
  const std::vector<double>& row_weights() const { return row_weights_; }

  const std::string& unit_of_row(std::size_t i) const {
    return row_labels_.at(i).unit;
  }

  double squared_frobenius() const {
    double s = 0;
    for (int k = 0; k < mat_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(mat_, k); it; ++it)
        s += it.value() * it.value();
    return s;
  }

  // Column count of nonzeros per row (attestation counts for a binary matrix).
  std::vector<std::size_t> row_counts() const {
    std::vector<std::size_t> counts(rows(), 0);
    for (int k = 0; k < mat_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(mat_, k); it; ++it)
        ++counts[static_cast<std::size_t>(it.row())];
    return counts;
  }

  void set_row_weights(std::vector<double> w) { row_weights_ = std::move(w); }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> mat_;
  std::vector<ReadingId> row_labels_;
  std::vector<std::string> col_labels_;
  std::vector<double> row_weights_;
};

// Binary matrix over primary witnesses; row order follows the retained
// readings, column order the primary witnesses.
inline CollationMatrix build_matrix(const FilteredCollation& f) {
  if (f.empty())
    throw std::invalid_argument(
        "empty matrix: filtered collation has no retained readings or no "
        "primary witnesses");
  std::map<std::pair<std::string, std::string>, std::size_t> row_of;
  for (std::size_t i = 0; i < f.readings.size(); ++i)
    row_of[{f.readings[i].unit, f.readings[i].reading}] = i;

  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t j = 0; j < f.primary_witnesses.size(); ++j) {
    auto it = f.cells.find(f.primary_witnesses[j]);
    if (it == f.cells.end()) continue;
    for (const auto& r : it->second) {
      auto row = row_of.find({r.unit, r.reading});
      if (row == row_of.end()) continue;  // reading was dropped
      trips.emplace_back(static_cast<int>(row->second), static_cast<int>(j), 1.0);
    }
  }
  return CollationMatrix(f.readings.size(), f.primary_witnesses.size(),
                         std::move(trips), f.readings, f.primary_witnesses);
}

// IDF weight of row t is ln(n / n_t), n_t = witnesses attesting reading t.
inline std::vector<double> idf_weights(const CollationMatrix& x) {
  const double n = static_cast<double>(x.cols());
  auto counts = x.row_counts();
  std::vector<double> w(x.rows());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0)
      throw std::invalid_argument("row " + std::to_string(i) +
                                  " has no attestations; cannot weight");
    w[i] = std::log(n / static_cast<double>(counts[i]));
  }
  return w;
}

inline CollationMatrix apply_weights(const CollationMatrix& x,
                                     const std::vector<double>& w) {
  if (w.size() != x.rows())
    throw std::invalid_argument("weight vector length " + std::to_string(w.size()) +
                                " does not match row count " +
                                std::to_string(x.rows()));
  for (double v : w)
    if (v < 0 || !std::isfinite(v))
      throw std::invalid_argument("row weights must be non-negative and finite");
  std::vector<Eigen::Triplet<double>> trips;
  const auto& s = x.sparse();
  for (int k = 0; k < s.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s, k); it; ++it) {
      double v = it.value() * w[static_cast<std::size_t>(it.row())];
      if (v != 0.0)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), v);
    }
  CollationMatrix out(x.rows(), x.cols(), std::move(trips), x.row_labels(),
                      x.col_labels());
  out.set_row_weights(w);
  return out;
}

// Export: header `m n nnz`, then one `row col value` triple per line
// (0-indexed); labels and weights go to a sidecar JSON.
inline void save_matrix(const CollationMatrix& x, std::ostream& mtx,
                        nlohmann::json& sidecar) {
  mtx << x.rows() << ' ' << x.cols() << ' ' << x.nonzeros() << '\n';
  char buf[64];
  const auto& s = x.sparse();
  for (int k = 0; k < s.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(s, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      mtx << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
  sidecar["rows"] = nlohmann::json::array();
  for (const auto& r : x.row_labels())
    sidecar["rows"].push_back({{"unit", r.unit}, {"reading", r.reading}});
  sidecar["cols"] = x.col_labels();
  sidecar["row_weights"] = x.row_weights();
}

inline CollationMatrix load_matrix(std::istream& mtx,
                                   const nlohmann::json& sidecar) {
  std::size_t m, n, nnz;
  if (!(mtx >> m >> n >> nnz)) throw ParseError("bad matrix header");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (std::size_t i = 0; i < nnz; ++i) {
    long r, c;
    double v;
    if (!(mtx >> r >> c >> v))
      throw ParseError("bad matrix triple at entry " + std::to_string(i));
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  std::vector<ReadingId> rows;
  for (const auto& e : sidecar.at("rows"))
    rows.push_back({e.at("unit").get<std::string>(),
                    e.at("reading").get<std::string>()});
  std::vector<std::string> cols = sidecar.at("cols").get<std::vector<std::string>>();
  CollationMatrix out(m, n, std::move(trips), std::move(rows), std::move(cols));
  if (sidecar.contains("row_weights"))
    out.set_row_weights(sidecar["row_weights"].get<std::vector<double>>());
  return out;
}

}  // namespace textclust

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "textclust/matrix.hpp"

namespace testutil {

// The toy collation from the worked example: 4 witnesses, 3 units,
// 7 distinct readings, one attested reading per witness per unit.
inline std::string fig1_tsv() {
  return
      "witness\tunit\treading\tstate\n"
      "ms.1\tunit.1\treading.1\tattested\n"
      "ms.2\tunit.1\treading.1\tattested\n"
      "ms.3\tunit.1\treading.2\tattested\n"
      "ms.4\tunit.1\treading.2\tattested\n"
      "ms.1\tunit.2\treading.1\tattested\n"
      "ms.3\tunit.2\treading.1\tattested\n"
      "ms.2\tunit.2\treading.2\tattested\n"
      "ms.4\tunit.2\treading.3\tattested\n"
      "ms.1\tunit.3\treading.1\tattested\n"
      "ms.2\tunit.3\treading.1\tattested\n"
      "ms.3\tunit.3\treading.1\tattested\n"
      "ms.4\tunit.3\treading.2\tattested\n";
}

inline Eigen::MatrixXd fig1_dense() {
  Eigen::MatrixXd x(7, 4);
  x << 1, 1, 0, 0,
       0, 0, 1, 1,
       1, 0, 1, 0,
       0, 1, 0, 0,
       0, 0, 0, 1,
       1, 1, 1, 0,
       0, 0, 0, 1;
  return x;
}

inline textclust::CollationMatrix matrix_from_dense(const Eigen::MatrixXd& d) {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<textclust::ReadingId> rows;
  std::vector<std::string> cols;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    rows.push_back({"u" + std::to_string(i + 1), "r1"});
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    cols.push_back("w" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), d(i, j));
  return textclust::CollationMatrix(static_cast<std::size_t>(d.rows()),
                                    static_cast<std::size_t>(d.cols()),
                                    std::move(trips), std::move(rows),
                                    std::move(cols));
}

// Random binary matrix with no all-zero row or column.
inline textclust::CollationMatrix random_binary_matrix(std::size_t m,
                                                       std::size_t n,
                                                       double density,
                                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                            static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (unif(rng) < density) d(i, j) = 1;
  std::uniform_int_distribution<Eigen::Index> col(0, d.cols() - 1);
  std::uniform_int_distribution<Eigen::Index> row(0, d.rows() - 1);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    if (d.row(i).sum() == 0) d(i, col(rng)) = 1;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    if (d.col(j).sum() == 0) d(row(rng), j) = 1;
  return matrix_from_dense(d);
}

// Accuracy of assigned cluster labels against planted labels, maximized
// over all permutations of the k cluster indices.
inline double label_recovery(
    std::size_t k, const std::vector<std::size_t>& planted,
    const std::vector<std::optional<std::size_t>>& assigned) {
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < planted.size(); ++i)
      if (assigned[i] && perm[planted[i]] == *assigned[i]) ++hits;
    best = std::max(best, static_cast<double>(hits) / planted.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace testutil

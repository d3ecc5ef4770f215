#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "textclust/collation.hpp"
#include "textclust/factorize.hpp"
#include "textclust/matrix.hpp"

// Analytical outputs over a factorization: cluster assignments, mixture
// proportions, ranked witness/reading profiles, divided-reading verdicts
// and NNLS classification of fragmentary witnesses.

namespace textclust {

struct MixtureVector {
  std::string witness;
  Eigen::VectorXd coefficients;
  std::optional<Eigen::VectorXd> normalized;

  bool unclassifiable() const { return coefficients.sum() <= 0; }
};

inline MixtureVector normalize_mixture(MixtureVector v) {
  const double sum = v.coefficients.sum();
  if (sum <= 0) {
    v.normalized.reset();
    return v;
  }
  v.normalized = v.coefficients / sum;
  return v;
}

struct ClusterAssignment {
  // One entry per witness column; nullopt marks an all-zero column.
  std::vector<std::optional<std::size_t>> labels;
  std::vector<std::size_t> sizes;
  std::size_t unassigned = 0;
};

// Dominant-coefficient membership; ties go to the lowest cluster index.
inline ClusterAssignment assign_clusters(const Eigen::MatrixXd& h) {
  ClusterAssignment out;
  out.sizes.assign(static_cast<std::size_t>(h.rows()), 0);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    double best = 0;
    std::optional<std::size_t> label;
    for (Eigen::Index c = 0; c < h.rows(); ++c) {
      if (h(c, j) > best) {
        best = h(c, j);
        label = static_cast<std::size_t>(c);
      }
    }
    out.labels.push_back(label);
    if (label)
      ++out.sizes[*label];
    else
      ++out.unassigned;
  }
  return out;
}

struct RankedWitness {
  std::string witness;
  double coefficient;
  bool member;  // argmax membership in the queried cluster
};

struct RankedReading {
  ReadingId reading;
  double coefficient;
};

// Ranking is over all witnesses (the top of a mixed cluster's table can
// include non-members); tie-break is by identifier.
inline std::vector<RankedWitness> top_witnesses(
    const Eigen::MatrixXd& h, const std::vector<std::string>& col_labels,
    std::size_t cluster, std::size_t limit) {
  if (cluster >= static_cast<std::size_t>(h.rows()))
    throw std::invalid_argument("cluster index out of range");
  auto assignment = assign_clusters(h);
  std::vector<RankedWitness> out;
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    out.push_back({col_labels[static_cast<std::size_t>(j)],
                   h(static_cast<Eigen::Index>(cluster), j),
                   assignment.labels[static_cast<std::size_t>(j)] == cluster});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.coefficient != b.coefficient) return a.coefficient > b.coefficient;
    return a.witness < b.witness;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

struct ReadingRanking {
  std::vector<RankedReading> readings;
  bool empty_cluster = false;  // all-zero basis column
};

inline ReadingRanking top_readings(const Eigen::MatrixXd& w,
                                   const std::vector<ReadingId>& row_labels,
                                   std::size_t cluster, std::size_t limit) {
  if (cluster >= static_cast<std::size_t>(w.cols()))
    throw std::invalid_argument("cluster index out of range");
  ReadingRanking out;
  if (w.col(static_cast<Eigen::Index>(cluster)).maxCoeff() <= 0) {
    out.empty_cluster = true;
    return out;
  }
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    out.readings.push_back({row_labels[static_cast<std::size_t>(i)],
                            w(i, static_cast<Eigen::Index>(cluster))});
  std::stable_sort(out.readings.begin(), out.readings.end(),
                   [](const auto& a, const auto& b) {
                     if (a.coefficient != b.coefficient)
                       return a.coefficient > b.coefficient;
                     return a.reading < b.reading;
                   });
  if (out.readings.size() > limit) out.readings.resize(limit);
  return out;
}

struct ReadingGroup {
  std::string label;
  std::vector<std::string> readings;  // reading ids within the queried unit
};

struct DividedVerdict {
  std::string unit;
  // One label per cluster: the winning group, or "Split".
  std::vector<std::string> per_cluster;
};

// A group wins a cluster when its summed basis coefficient is at least
// twice every alternative's; otherwise the cluster is Split.
inline DividedVerdict divided_reading_support(
    const Eigen::MatrixXd& w, const std::vector<ReadingId>& row_labels,
    const std::string& unit, std::vector<ReadingGroup> grouping) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < row_labels.size(); ++i)
    if (row_labels[i].unit == unit) row_of[row_labels[i].reading] = i;
  if (row_of.empty())
    throw std::invalid_argument("unknown unit: " + unit);

  std::set<std::string> grouped;
  for (const auto& g : grouping)
    for (const auto& r : g.readings) {
      if (!row_of.count(r))
        throw std::invalid_argument("unknown reading '" + r + "' at unit " + unit);
      if (!grouped.insert(r).second)
        throw std::invalid_argument("reading '" + r +
                                    "' appears in more than one group");
    }
  // Ungrouped retained readings become singleton groups.
  for (const auto& [r, i] : row_of)
    if (!grouped.count(r)) grouping.push_back({r, {r}});

  if (grouping.size() < 2)
    throw std::invalid_argument("not a contested unit: " + unit +
                                " has fewer than 2 reading groups");

  DividedVerdict out;
  out.unit = unit;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    std::vector<double> scores;
    for (const auto& g : grouping) {
      double s = 0;
      for (const auto& r : g.readings)
        s += w(static_cast<Eigen::Index>(row_of.at(r)), c);
      scores.push_back(s);
    }
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[argmax]) argmax = i;
    bool wins = scores[argmax] > 0;
    for (std::size_t i = 0; i < scores.size() && wins; ++i)
      if (i != argmax && scores[argmax] < 2.0 * scores[i]) wins = false;
    out.per_cluster.push_back(wins ? grouping[argmax].label : "Split");
  }
  return out;
}

struct ReadingVector {
  std::string witness;
  // Weighted attestations at retained rows, and the rows of units where
  // the witness is extant (has a surviving attested cell).
  Eigen::VectorXd values;
  std::vector<std::size_t> extant_rows;
};

// Builds the x-vector for one witness against the primary run's matrix;
// x must carry the same weighting as the run that produced W.
inline ReadingVector build_reading_vector(const FilteredCollation& f,
                                          const CollationMatrix& x,
                                          const std::string& witness) {
  std::map<std::pair<std::string, std::string>, std::size_t> row_of;
  for (std::size_t i = 0; i < x.rows(); ++i)
    row_of[{x.row_labels()[i].unit, x.row_labels()[i].reading}] = i;

  ReadingVector out;
  out.witness = witness;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.rows()));
  auto it = f.cells.find(witness);
  if (it == f.cells.end()) return out;

  std::set<std::string> extant_units;
  for (const auto& r : it->second) {
    extant_units.insert(r.unit);
    auto row = row_of.find({r.unit, r.reading});
    if (row != row_of.end())
      out.values(static_cast<Eigen::Index>(row->second)) =
          x.row_weights()[row->second];
  }
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (extant_units.count(x.row_labels()[i].unit)) out.extant_rows.push_back(i);
  return out;
}

// Restricts x and W to the witness's extant units and solves the
// non-negative least-squares system for its mixture coefficients.
inline MixtureVector classify_secondary(const Eigen::MatrixXd& w,
                                        const ReadingVector& rv,
                                        double tol = 1e-10) {
  MixtureVector out;
  out.witness = rv.witness;
  out.coefficients = Eigen::VectorXd::Zero(w.cols());
  if (rv.extant_rows.empty()) return out;  // unclassifiable

  const auto p = static_cast<Eigen::Index>(rv.extant_rows.size());
  Eigen::MatrixXd wr(p, w.cols());
  Eigen::VectorXd xr(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto row = static_cast<Eigen::Index>(rv.extant_rows[i]);
    wr.row(i) = w.row(row);
    xr(i) = rv.values(row);
  }
  out.coefficients = nnls(wr, xr, tol);
  return out;
}

}  // namespace textclust

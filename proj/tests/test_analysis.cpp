#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "textclust/analysis.hpp"
#include "textclust/synth.hpp"

using namespace textclust;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("mixture normalization matches the published rounding") {
  MixtureVector v{"01", vec({2.3008, 0.4431, 0, 0, 0, 0, 0.0971, 0.1185}), {}};
  v = normalize_mixture(std::move(v));
  REQUIRE(v.normalized);
  const Eigen::VectorXd& p = *v.normalized;
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p(0) == doctest::Approx(0.777).epsilon(1e-3));
  CHECK(p(1) == doctest::Approx(0.150).epsilon(1e-2));
  CHECK(p(6) == doctest::Approx(0.033).epsilon(1e-1));
  CHECK(p(7) == doctest::Approx(0.040).epsilon(1e-1));
  // printed percentages: 78 / 15 / 4 (c8) / 3 (c7), each within 0.5pp
  CHECK(std::abs(p(0) * 100 - 78) <= 0.5);
  CHECK(std::abs(p(1) * 100 - 15) <= 0.5);
  CHECK(std::abs(p(7) * 100 - 4) <= 0.5);
  CHECK(std::abs(p(6) * 100 - 3) <= 0.5);
}

TEST_CASE("one-hot coefficients normalize to themselves") {
  MixtureVector v{"w", vec({0, 1, 0}), {}};
  v = normalize_mixture(std::move(v));
  REQUIRE(v.normalized);
  CHECK(*v.normalized == vec({0, 1, 0}));
}

TEST_CASE("all-zero vector is unclassifiable") {
  MixtureVector v{"w", Eigen::VectorXd::Zero(4), {}};
  v = normalize_mixture(std::move(v));
  CHECK_FALSE(v.normalized);
  CHECK(v.unclassifiable());
}

TEST_CASE("normalization preserves the argmax") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd c(5);
    for (int i = 0; i < 5; ++i) c(i) = unif(rng);
    MixtureVector v{"w", c, {}};
    v = normalize_mixture(std::move(v));
    REQUIRE(v.normalized);
    Eigen::Index a, b;
    v.coefficients.maxCoeff(&a);
    v.normalized->maxCoeff(&b);
    CHECK(a == b);
    CHECK(v.normalized->sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("cluster assignment by dominant coefficient") {
  Eigen::MatrixXd h(8, 1);
  h << 2.76, 0, 0, 0, 0.1153, 0, 0, 0;  // P72's printed column
  auto a = assign_clusters(h);
  REQUIRE(a.labels[0]);
  CHECK(*a.labels[0] == 0);  // cluster 1
}

TEST_CASE("assignment ties break to the lowest cluster index") {
  Eigen::MatrixXd h(2, 1);
  h << 0.5, 0.5;
  auto a = assign_clusters(h);
  CHECK(*a.labels[0] == 0);
}

TEST_CASE("a zero column is unassigned and sizes are conserved") {
  Eigen::MatrixXd h(2, 3);
  h << 1, 0, 0,
       0, 2, 0;
  auto a = assign_clusters(h);
  CHECK_FALSE(a.labels[2]);
  CHECK(a.unassigned == 1);
  std::size_t total = a.unassigned;
  for (auto s : a.sizes) total += s;
  CHECK(total == 3);
}

TEST_CASE("assignment is invariant to increasing per-column transforms") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd h(4, 6);
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = unif(rng);
  auto base = assign_clusters(h);
  Eigen::MatrixXd scaled = h;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j)
    scaled.col(j) = (2.0 * scaled.col(j)).array() + 0.25 * (j + 1);
  auto after = assign_clusters(scaled);
  CHECK(base.labels == after.labels);
}

TEST_CASE("top_witnesses ranks all witnesses with membership flags") {
  Eigen::MatrixXd h(2, 4);
  h << 2.0, 0.5, 1.0, 0.0,
       0.1, 0.9, 1.5, 0.0;
  std::vector<std::string> cols{"a", "b", "c", "d"};
  auto top = top_witnesses(h, cols, 0, 10);
  REQUIRE(top.size() == 4);
  CHECK(top[0].witness == "a");
  CHECK(top[0].member);
  CHECK(top[1].witness == "c");
  CHECK_FALSE(top[1].member);  // c's argmax is cluster 2
  CHECK(top[3].witness == "d");

  auto limited = top_witnesses(h, cols, 0, 2);
  CHECK(limited.size() == 2);
}

TEST_CASE("equal witness coefficients order by identifier") {
  Eigen::MatrixXd h(1, 3);
  h << 1.0, 1.0, 1.0;
  auto top = top_witnesses(h, {"zeta", "alpha", "mid"}, 0, 3);
  CHECK(top[0].witness == "alpha");
  CHECK(top[1].witness == "mid");
  CHECK(top[2].witness == "zeta");
}

TEST_CASE("top_readings ranks by basis column") {
  Eigen::MatrixXd w(3, 2);
  w << 0.1, 0.0,
       0.9, 0.0,
       0.5, 0.0;
  std::vector<ReadingId> rows{{"u1", "r1"}, {"u2", "r1"}, {"u3", "r1"}};
  auto r = top_readings(w, rows, 0, 15);
  REQUIRE(r.readings.size() == 3);
  CHECK(r.readings[0].reading.unit == "u2");
  CHECK_FALSE(r.empty_cluster);

  CHECK(top_readings(w, rows, 0, 0).readings.empty());
  CHECK(top_readings(w, rows, 1, 15).empty_cluster);
}

TEST_CASE("divided-reading rule on two singleton groups") {
  Eigen::MatrixXd w(2, 2);
  // cluster 1: scores (0.8, 0.3) -> first wins; cluster 2: (0.5, 0.3) -> split
  w << 0.8, 0.5,
       0.3, 0.3;
  std::vector<ReadingId> rows{{"u1", "a"}, {"u1", "b"}};
  auto v = divided_reading_support(w, rows, "u1", {});
  CHECK(v.per_cluster[0] == "a");
  CHECK(v.per_cluster[1] == "Split");
}

TEST_CASE("grouped readings sum their coefficients") {
  // {a1:0.4, a2:0.3} vs {b:0.34}: 0.7 >= 0.68 = 2*0.34, group A wins.
  Eigen::MatrixXd w(3, 1);
  w << 0.4, 0.3, 0.34;
  std::vector<ReadingId> rows{{"u1", "a1"}, {"u1", "a2"}, {"u1", "b"}};
  auto v = divided_reading_support(w, rows, "u1", {{"A", {"a1", "a2"}}});
  REQUIRE(v.per_cluster.size() == 1);
  CHECK(v.per_cluster[0] == "A");
}

TEST_CASE("verdicts are scale-free per cluster") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<ReadingId> rows{{"u1", "a"}, {"u1", "b"}, {"u1", "c"}};
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd w(3, 2);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unif(rng);
    auto before = divided_reading_support(w, rows, "u1", {});
    Eigen::MatrixXd scaled = w;
    scaled.col(0) *= 17.0;
    scaled.col(1) *= 0.004;
    auto after = divided_reading_support(scaled, rows, "u1", {});
    CHECK(before.per_cluster == after.per_cluster);
  }
}

TEST_CASE("a unit with fewer than two groups is not contested") {
  Eigen::MatrixXd w(1, 1);
  w << 1.0;
  std::vector<ReadingId> rows{{"u1", "a"}};
  CHECK_THROWS_WITH_AS(divided_reading_support(w, rows, "u1", {}),
                       doctest::Contains("not a contested unit"),
                       std::invalid_argument);
  CHECK_THROWS_AS(divided_reading_support(w, rows, "nope", {}),
                  std::invalid_argument);
}

TEST_CASE("classify_secondary recovers a pure basis column") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd w(6, 2);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = unif(rng);
  ReadingVector rv;
  rv.witness = "frag";
  rv.values = w.col(1);
  for (std::size_t i = 0; i < 6; ++i) rv.extant_rows.push_back(i);
  MixtureVector v = classify_secondary(w, rv);
  CHECK(std::abs(v.coefficients(1) - 1.0) <= 1e-6);
  CHECK(std::abs(v.coefficients(0)) <= 1e-6);

  // grid-search oracle at step 1e-3 cannot beat the solver
  const double f_solver = (rv.values - w * v.coefficients).squaredNorm();
  double f_grid = std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd g = w.transpose() * rv.values;
  const Eigen::MatrixXd q = w.transpose() * w;
  const double c0 = rv.values.squaredNorm();
  for (int i = 0; i <= 3000; ++i)
    for (int j = 0; j <= 3000; ++j) {
      const double h1 = i * 1e-3, h2 = j * 1e-3;
      const double f = c0 - 2 * (h1 * g(0) + h2 * g(1)) + h1 * h1 * q(0, 0) +
                       2 * h1 * h2 * q(0, 1) + h2 * h2 * q(1, 1);
      f_grid = std::min(f_grid, f);
    }
  CHECK(f_solver <= f_grid + 1e-4);
}

TEST_CASE("a vector orthogonal to the basis classifies to zero") {
  Eigen::MatrixXd w(2, 1);
  w << 1, 0;
  ReadingVector rv;
  rv.witness = "frag";
  rv.values = vec({0, 1});
  rv.extant_rows = {0, 1};
  MixtureVector v = classify_secondary(w, rv);
  CHECK(v.coefficients(0) == 0.0);
}

TEST_CASE("zero extant units is unclassifiable") {
  Eigen::MatrixXd w(2, 1);
  w << 1, 1;
  ReadingVector rv;
  rv.witness = "frag";
  rv.values = Eigen::VectorXd::Zero(2);
  MixtureVector v = classify_secondary(w, rv);
  CHECK(v.unclassifiable());
}

TEST_CASE("post-hoc NNLS agrees with the joint factorization") {
  // planted clusters; classify each primary witness's own column and
  // compare the argmax with its H column.
  SynthConfig sc;
  sc.clusters = 4;
  sc.witnesses_per_cluster = 12;
  sc.exclusive_units = 25;
  sc.contamination = 0.08;
  sc.seed = 99;
  SynthData data = make_synthetic(sc);
  ExclusionPolicy policy;
  policy.min_extant_readings = 1;
  FilteredCollation f = apply_exclusions(parse_collation(data.tsv), policy);
  CollationMatrix x = build_matrix(f);
  FactorConfig cfg;
  cfg.k = 4;
  Factorization fac = factorize(x, cfg);
  auto assignment = assign_clusters(fac.h);

  std::size_t agreements = 0, total = 0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (!assignment.labels[j]) continue;
    ReadingVector rv = build_reading_vector(f, x, x.col_labels()[j]);
    MixtureVector v = classify_secondary(fac.w, rv);
    Eigen::Index arg;
    v.coefficients.maxCoeff(&arg);
    ++total;
    if (static_cast<std::size_t>(arg) == *assignment.labels[j]) ++agreements;
  }
  CHECK(total > 0);
  CHECK(static_cast<double>(agreements) / total >= 0.9);
}

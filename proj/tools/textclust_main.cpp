// Command-line front end: collation ingestion, weighting, factorization,
// cluster profiles, divided-reading verdicts, secondary-witness
// classification and a synthetic-data generator.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "textclust/analysis.hpp"
#include "textclust/collation.hpp"
#include "textclust/factorize.hpp"
#include "textclust/io.hpp"
#include "textclust/matrix.hpp"
#include "textclust/synth.hpp"

namespace fs = std::filesystem;
using namespace textclust;

namespace {

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

struct FactorArgs {
  std::string input;
  std::string weighting = "uniform";
  std::size_t k = 8;
  std::string k_range;
  std::size_t max_iter = 8000;
  double tol = 1e-5;
  std::string init = "nndsvd";
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  std::size_t min_extant = 300;
  bool keep_singular = false;
  std::string out_dir = ".";
};

Manifest make_manifest(const FactorArgs& a, std::size_t k,
                       const std::string& out_dir) {
  Manifest m;
  m.input = a.input;
  m.weighting = a.weighting;
  m.policy.min_extant_readings = a.min_extant;
  m.policy.drop_singular_readings = !a.keep_singular;
  m.config.k = k;
  m.config.max_iter = a.max_iter;
  m.config.tol = a.tol;
  m.config.init = a.init == "random" ? InitMethod::Random : InitMethod::Nndsvd;
  m.config.runs = a.runs;
  m.config.seed = a.seed;
  m.out_dir = out_dir;
  m.created_at = now_iso8601();
  return m;
}

int cmd_factor(const FactorArgs& a) {
  std::vector<std::size_t> ks;
  if (!a.k_range.empty()) {
    auto colon = a.k_range.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("--k-range expects A:B");
    std::size_t lo = std::stoul(a.k_range.substr(0, colon));
    std::size_t hi = std::stoul(a.k_range.substr(colon + 1));
    if (lo < 1 || hi < lo) throw std::invalid_argument("--k-range expects 1 <= A <= B");
    for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  } else {
    ks.push_back(a.k);
  }
  for (std::size_t k : ks) {
    std::string dir = ks.size() == 1
                          ? a.out_dir
                          : (fs::path(a.out_dir) / ("k" + std::to_string(k))).string();
    Manifest m = make_manifest(a, k, dir);
    Factorization f = run_manifest(m);
    std::cout << "k=" << k << " n_iter=" << f.stats.n_iter
              << " dist=" << f.stats.dist << " evar=" << f.stats.evar
              << " converged=" << (f.stats.converged ? "true" : "false")
              << " -> " << dir << '\n';
  }
  return 0;
}

int cmd_replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  nlohmann::json j;
  in >> j;
  Manifest m = Manifest::from_json(j);
  Factorization f = run_manifest(m);
  std::cout << "replayed k=" << m.config.k << " dist=" << f.stats.dist
            << " -> " << m.out_dir << '\n';
  return 0;
}

std::string witness_table_csv(const Eigen::MatrixXd& h,
                              const std::vector<std::string>& cols,
                              std::size_t cluster, std::size_t limit) {
  std::ostringstream out;
  out << "witness,coefficient,member\n";
  for (const auto& r : top_witnesses(h, cols, cluster, limit))
    out << r.witness << ',' << format_double(r.coefficient) << ','
        << (r.member ? "true" : "false") << '\n';
  return out.str();
}

std::string reading_table_csv(const Eigen::MatrixXd& w,
                              const std::vector<ReadingId>& rows,
                              std::size_t cluster, std::size_t limit) {
  std::ostringstream out;
  out << "unit,reading,coefficient\n";
  auto ranking = top_readings(w, rows, cluster, limit);
  for (const auto& r : ranking.readings)
    out << r.reading.unit << ',' << r.reading.reading << ','
        << format_double(r.coefficient) << '\n';
  return out.str();
}

int cmd_profile(const std::string& artifacts, const std::string& out_dir,
                std::size_t limit, int cluster, const std::string& witness) {
  FactorArtifacts art = load_factor_artifacts(artifacts);
  const auto k = static_cast<std::size_t>(art.h.rows());
  fs::create_directories(out_dir);

  if (!witness.empty()) {
    auto it = std::find(art.col_labels.begin(), art.col_labels.end(), witness);
    if (it == art.col_labels.end())
      throw std::invalid_argument("unknown witness: " + witness);
    const auto j = static_cast<Eigen::Index>(it - art.col_labels.begin());
    MixtureVector v{witness, art.h.col(j), std::nullopt};
    v = normalize_mixture(std::move(v));
    std::ostringstream out;
    out << "witness";
    for (std::size_t c = 1; c <= k; ++c) out << ",c" << c;
    for (std::size_t c = 1; c <= k; ++c) out << ",p" << c;
    out << '\n' << witness;
    for (Eigen::Index c = 0; c < v.coefficients.size(); ++c)
      out << ',' << format_double(v.coefficients(c));
    for (Eigen::Index c = 0; c < v.coefficients.size(); ++c)
      out << ',' << (v.normalized ? format_double((*v.normalized)(c)) : "unclassifiable");
    out << '\n';
    write_file_atomic(fs::path(out_dir) / ("mixture_" + witness + ".csv"),
                      out.str());
    std::cout << out.str();
    return 0;
  }

  std::vector<std::size_t> clusters;
  if (cluster >= 0)
    clusters.push_back(static_cast<std::size_t>(cluster));
  else
    for (std::size_t c = 0; c < k; ++c) clusters.push_back(c);

  for (std::size_t c : clusters) {
    write_file_atomic(
        fs::path(out_dir) / ("witnesses_c" + std::to_string(c + 1) + ".csv"),
        witness_table_csv(art.h, art.col_labels, c, limit));
    write_file_atomic(
        fs::path(out_dir) / ("readings_c" + std::to_string(c + 1) + ".csv"),
        reading_table_csv(art.w, art.row_labels, c, limit));
  }
  std::cout << "wrote profiles for " << clusters.size() << " cluster(s) to "
            << out_dir << '\n';
  return 0;
}

int cmd_classify(const std::string& artifacts, const std::string& out_path) {
  std::ifstream min(fs::path(artifacts) / "manifest.json");
  if (!min)
    throw std::runtime_error("missing manifest.json in " + artifacts);
  nlohmann::json mj;
  min >> mj;
  Manifest m = Manifest::from_json(mj);
  PreparedRun run = prepare_matrix(m);
  FactorArtifacts art = load_factor_artifacts(artifacts);

  std::ostringstream out;
  out << "witness";
  for (Eigen::Index c = 0; c < art.w.cols(); ++c) out << ",c" << c + 1;
  out << ",status\n";
  for (const auto& w : run.filtered.secondary_witnesses) {
    ReadingVector rv = build_reading_vector(run.filtered, run.matrix, w);
    MixtureVector v = classify_secondary(art.w, rv);
    out << w;
    for (Eigen::Index c = 0; c < v.coefficients.size(); ++c)
      out << ',' << format_double(v.coefficients(c));
    out << ',' << (rv.extant_rows.empty() ? "unclassifiable" : "ok") << '\n';
  }
  write_file_atomic(out_path, out.str());
  std::cout << "classified " << run.filtered.secondary_witnesses.size()
            << " secondary witness(es) -> " << out_path << '\n';
  return 0;
}

int cmd_divided(const std::string& artifacts, const std::string& query_path,
                const std::string& unit_flag, const std::string& out_path) {
  FactorArtifacts art = load_factor_artifacts(artifacts);
  const auto k = static_cast<std::size_t>(art.h.rows());

  // Query rows: unit -> named groups of reading ids; ungrouped retained
  // readings become singleton groups.
  std::vector<std::pair<std::string, std::vector<ReadingGroup>>> queries;
  if (!unit_flag.empty()) queries.push_back({unit_flag, {}});
  if (!query_path.empty()) {
    std::ifstream qf(query_path);
    if (!qf) throw std::runtime_error("cannot open query file: " + query_path);
    std::string line;
    std::map<std::string, std::size_t> index;
    while (std::getline(qf, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string unit, label, readings;
      std::getline(ls, unit, '\t');
      std::getline(ls, label, '\t');
      std::getline(ls, readings, '\t');
      if (!index.count(unit)) {
        index[unit] = queries.size();
        queries.push_back({unit, {}});
      }
      ReadingGroup g{label, {}};
      std::istringstream rs(readings);
      std::string r;
      while (std::getline(rs, r, ',')) g.readings.push_back(r);
      queries[index[unit]].second.push_back(std::move(g));
    }
  }

  std::ostringstream out;
  out << "unit";
  for (std::size_t c = 1; c <= k; ++c) out << ",c" << c;
  out << '\n';
  for (const auto& [unit, groups] : queries) {
    try {
      DividedVerdict v =
          divided_reading_support(art.w, art.row_labels, unit, groups);
      out << unit;
      for (const auto& g : v.per_cluster) out << ',' << g;
      out << '\n';
    } catch (const std::exception& e) {
      out << unit << ",error:" << e.what() << '\n';
    }
  }
  write_file_atomic(out_path, out.str());
  std::cout << "wrote verdicts for " << queries.size() << " unit(s) -> "
            << out_path << '\n';
  return 0;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_path,
              const std::string& labels_path) {
  SynthData data = make_synthetic(cfg);
  write_file_atomic(out_path, data.tsv);
  std::ostringstream lbl;
  lbl << "witness\tcluster\n";
  for (const auto& [w, c] : data.labels) lbl << w << '\t' << c + 1 << '\n';
  write_file_atomic(labels_path, lbl.str());
  std::cout << "wrote " << data.labels.size() << " witnesses -> " << out_path
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NMF biclustering of textual collations"};
  app.require_subcommand(1);

  FactorArgs fa;
  auto* factor = app.add_subcommand("factor", "factorize a collation");
  factor->add_option("--input", fa.input, "collation TSV or JSON")->required();
  factor->add_option("--weighting", fa.weighting, "uniform|idf")
      ->check(CLI::IsMember({"uniform", "idf"}));
  factor->add_option("--k", fa.k, "cluster count");
  factor->add_option("--k-range", fa.k_range, "sweep A:B");
  factor->add_option("--max-iter", fa.max_iter, "outer iteration cap");
  factor->add_option("--tol", fa.tol, "relative projected-gradient tolerance");
  factor->add_option("--init", fa.init, "nndsvd|random")
      ->check(CLI::IsMember({"nndsvd", "random"}));
  factor->add_option("--runs", fa.runs, "restarts for random init");
  factor->add_option("--seed", fa.seed, "seed for random init");
  factor->add_option("--min-extant-readings", fa.min_extant,
                     "secondary-witness threshold");
  factor->add_flag("--keep-singular-readings", fa.keep_singular,
                   "retain singular readings");
  factor->add_option("--out-dir", fa.out_dir, "artifact directory");

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "re-run a saved manifest");
  replay->add_option("manifest", manifest_path, "manifest.json path")->required();

  std::string artifacts, prof_out, witness;
  std::size_t limit = 15;
  int cluster = -1;
  auto* profile = app.add_subcommand("profile", "cluster profile tables");
  profile->add_option("--artifacts", artifacts, "factor output dir")->required();
  profile->add_option("--out-dir", prof_out, "table output dir");
  profile->add_option("--limit", limit, "rows per table");
  profile->add_option("--cluster", cluster, "restrict to one cluster (1-based)");
  profile->add_option("--witness", witness, "single witness mixture row");

  std::string cls_artifacts, cls_out = "secondary.csv";
  auto* classify = app.add_subcommand("classify", "classify secondary witnesses");
  classify->add_option("--artifacts", cls_artifacts, "factor output dir")->required();
  classify->add_option("--out", cls_out, "output CSV path");

  std::string div_artifacts, div_query, div_unit, div_out = "divided.csv";
  auto* divided = app.add_subcommand("divided", "divided-reading verdicts");
  divided->add_option("--artifacts", div_artifacts, "factor output dir")->required();
  divided->add_option("--query", div_query, "TSV: unit<TAB>group<TAB>r1,r2,...");
  divided->add_option("--unit", div_unit, "single unit, singleton groups");
  divided->add_option("--out", div_out, "output CSV path");

  SynthConfig sc;
  std::string synth_out = "synthetic.tsv", synth_labels = "labels.tsv";
  auto* synth = app.add_subcommand("synth", "generate a synthetic collation");
  synth->add_option("--clusters", sc.clusters, "planted cluster count");
  synth->add_option("--witnesses-per-cluster", sc.witnesses_per_cluster,
                    "witnesses per cluster");
  synth->add_option("--readings-per-cluster", sc.exclusive_units,
                    "exclusive readings per cluster");
  synth->add_option("--shared-readings", sc.shared_units,
                    "units where all witnesses agree");
  synth->add_option("--contamination", sc.contamination, "flip rate in [0,1]");
  synth->add_option("--lacunae", sc.lacunae, "lacuna rate in [0,1]");
  synth->add_option("--seed", sc.seed, "generator seed");
  synth->add_option("--out", synth_out, "collation TSV path");
  synth->add_option("--labels", synth_labels, "ground-truth labels path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*factor) return cmd_factor(fa);
    if (*replay) return cmd_replay(manifest_path);
    if (*profile)
      return cmd_profile(artifacts, prof_out.empty() ? artifacts : prof_out,
                         limit, cluster > 0 ? cluster - 1 : -1, witness);
    if (*classify) return cmd_classify(cls_artifacts, cls_out);
    if (*divided) return cmd_divided(div_artifacts, div_query, div_unit, div_out);
    if (*synth) return cmd_synth(sc, synth_out, synth_labels);
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}

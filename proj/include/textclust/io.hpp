#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "textclust/analysis.hpp"
#include "textclust/collation.hpp"
#include "textclust/factorize.hpp"
#include "textclust/matrix.hpp"

// Run manifests and factorization artifacts (W.csv, H.csv, stats.json,
// manifest.json). All files are written write-then-rename so failures
// never leave partial artifacts behind.

namespace textclust {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

struct Manifest {
  std::string input;
  std::string weighting = "uniform";  // uniform | idf
  ExclusionPolicy policy;
  FactorConfig config;
  std::string out_dir;
  std::string created_at;  // informational only, excluded from replay checks

  nlohmann::json to_json() const {
    std::vector<std::string> drop;
    for (auto s : policy.drop_states) drop.push_back(to_string(s));
    return {
        {"tool_version", kToolVersion},
        {"created_at", created_at},
        {"input", input},
        {"weighting", weighting},
        {"policy",
         {{"drop_states", drop},
          {"drop_singular_readings", policy.drop_singular_readings},
          {"min_extant_readings", policy.min_extant_readings}}},
        {"factor",
         {{"k", config.k},
          {"max_iter", config.max_iter},
          {"tol", config.tol},
          {"init", config.init == InitMethod::Nndsvd ? "nndsvd" : "random"},
          {"runs", config.runs},
          {"seed", config.seed}}},
        {"out_dir", out_dir},
    };
  }

  static Manifest from_json(const nlohmann::json& j) {
    Manifest m;
    m.input = j.at("input").get<std::string>();
    m.weighting = j.at("weighting").get<std::string>();
    m.created_at = j.value("created_at", "");
    const auto& p = j.at("policy");
    m.policy.drop_states.clear();
    for (const auto& s : p.at("drop_states")) {
      auto st = parse_state(s.get<std::string>());
      if (!st) throw ParseError("manifest: unknown state " + s.get<std::string>());
      m.policy.drop_states.insert(*st);
    }
    m.policy.drop_singular_readings = p.at("drop_singular_readings").get<bool>();
    m.policy.min_extant_readings = p.at("min_extant_readings").get<std::size_t>();
    const auto& f = j.at("factor");
    m.config.k = f.at("k").get<std::size_t>();
    m.config.max_iter = f.at("max_iter").get<std::size_t>();
    m.config.tol = f.at("tol").get<double>();
    m.config.init = f.at("init").get<std::string>() == "random"
                        ? InitMethod::Random
                        : InitMethod::Nndsvd;
    m.config.runs = f.at("runs").get<std::size_t>();
    m.config.seed = f.at("seed").get<std::uint64_t>();
    m.out_dir = j.at("out_dir").get<std::string>();
    return m;
  }
};

inline std::string w_csv(const CollationMatrix& x, const Eigen::MatrixXd& w) {
  std::ostringstream out;
  out << "unit,reading";
  for (Eigen::Index c = 0; c < w.cols(); ++c) out << ",c" << c + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const auto& r = x.row_labels()[static_cast<std::size_t>(i)];
    out << r.unit << ',' << r.reading;
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      out << ',' << format_double(w(i, c));
    out << '\n';
  }
  return out.str();
}

inline std::string h_csv(const CollationMatrix& x, const Eigen::MatrixXd& h) {
  std::ostringstream out;
  out << "cluster";
  for (const auto& w : x.col_labels()) out << ',' << w;
  out << '\n';
  for (Eigen::Index c = 0; c < h.rows(); ++c) {
    out << 'c' << c + 1;
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      out << ',' << format_double(h(c, j));
    out << '\n';
  }
  return out.str();
}

inline std::string stats_json(const Factorization& f, std::size_t k) {
  nlohmann::json j{{"k", k},
                   {"n_iter", f.stats.n_iter},
                   {"dist", f.stats.dist},
                   {"evar", f.stats.evar},
                   {"w_sparseness", f.stats.w_sparseness},
                   {"h_sparseness", f.stats.h_sparseness},
                   {"converged", f.stats.converged},
                   {"objective_trace", f.stats.objective_trace}};
  return j.dump(2) + "\n";
}

struct FactorArtifacts {
  Eigen::MatrixXd w;
  Eigen::MatrixXd h;
  std::vector<ReadingId> row_labels;
  std::vector<std::string> col_labels;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(
        start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline FactorArtifacts load_factor_artifacts(const std::filesystem::path& dir) {
  FactorArtifacts out;
  std::ifstream wf(dir / "W.csv");
  if (!wf) throw std::runtime_error("missing artifact: " + (dir / "W.csv").string());
  std::string line;
  std::getline(wf, line);
  const auto wk = split_csv_line(line).size() - 2;
  std::vector<std::vector<double>> wrows;
  while (std::getline(wf, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != wk + 2) throw ParseError("malformed W.csv row");
    out.row_labels.push_back({f[0], f[1]});
    std::vector<double> vals;
    for (std::size_t c = 2; c < f.size(); ++c) vals.push_back(std::stod(f[c]));
    wrows.push_back(std::move(vals));
  }
  out.w.resize(static_cast<Eigen::Index>(wrows.size()),
               static_cast<Eigen::Index>(wk));
  for (std::size_t i = 0; i < wrows.size(); ++i)
    for (std::size_t c = 0; c < wk; ++c)
      out.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          wrows[i][c];

  std::ifstream hf(dir / "H.csv");
  if (!hf) throw std::runtime_error("missing artifact: " + (dir / "H.csv").string());
  std::getline(hf, line);
  {
    auto f = split_csv_line(line);
    out.col_labels.assign(f.begin() + 1, f.end());
  }
  std::vector<std::vector<double>> hrows;
  while (std::getline(hf, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != out.col_labels.size() + 1) throw ParseError("malformed H.csv row");
    std::vector<double> vals;
    for (std::size_t c = 1; c < f.size(); ++c) vals.push_back(std::stod(f[c]));
    hrows.push_back(std::move(vals));
  }
  out.h.resize(static_cast<Eigen::Index>(hrows.size()),
               static_cast<Eigen::Index>(out.col_labels.size()));
  for (std::size_t c = 0; c < hrows.size(); ++c)
    for (std::size_t j = 0; j < out.col_labels.size(); ++j)
      out.h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
          hrows[c][j];
  return out;
}

// Ingestion -> weighting pipeline shared by the CLI commands.
struct PreparedRun {
  FilteredCollation filtered;
  CollationMatrix matrix;
};

inline PreparedRun prepare_matrix(const Manifest& m) {
  Collation coll = load_collation(m.input);
  FilteredCollation filtered = apply_exclusions(coll, m.policy);
  CollationMatrix x = build_matrix(filtered);
  if (m.weighting == "idf") {
    x = apply_weights(x, idf_weights(x));
  } else if (m.weighting != "uniform") {
    throw std::invalid_argument("unknown weighting scheme: " + m.weighting);
  }
  return {std::move(filtered), std::move(x)};
}

// Executes a manifest: factorize and write W.csv, H.csv, stats.json and
// manifest.json into out_dir. Replaying the same manifest is bit-for-bit
// reproducible.
inline Factorization run_manifest(const Manifest& m) {
  PreparedRun run = prepare_matrix(m);
  Factorization f = factorize(run.matrix, m.config);
  std::filesystem::create_directories(m.out_dir);
  const std::filesystem::path dir(m.out_dir);
  write_file_atomic(dir / "W.csv", w_csv(run.matrix, f.w));
  write_file_atomic(dir / "H.csv", h_csv(run.matrix, f.h));
  write_file_atomic(dir / "stats.json", stats_json(f, m.config.k));
  write_file_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
  return f;
}

}  // namespace textclust

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "textclust/collation.hpp"

// Synthetic collation generator with planted cluster structure, for
// acceptance testing and benchmarks.

namespace textclust {

struct SynthConfig {
  std::size_t clusters = 4;
  std::size_t witnesses_per_cluster = 20;
  std::size_t exclusive_units = 30;  // one exclusive reading per cluster each
  std::size_t shared_units = 0;      // units where everyone agrees
  double contamination = 0.0;        // chance a cell flips to another cluster
  double lacunae = 0.0;              // chance a cell is lacunose
  std::uint64_t seed = 0;

  void validate() const {
    if (clusters < 1) throw std::invalid_argument("clusters must be >= 1");
    if (witnesses_per_cluster < 1)
      throw std::invalid_argument("witnesses-per-cluster must be >= 1");
    if (contamination < 0 || contamination > 1)
      throw std::invalid_argument("contamination rate must be in [0, 1]");
    if (lacunae < 0 || lacunae > 1)
      throw std::invalid_argument("lacuna rate must be in [0, 1]");
  }
};

struct SynthData {
  std::string tsv;                          // collation, ready to parse
  std::map<std::string, std::size_t> labels;  // witness -> planted cluster
};

// Each witness draws its cluster's exclusive reading at every unit,
// flips to a random other cluster's reading at the contamination rate,
// and goes lacunose at the lacuna rate.
inline SynthData make_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SynthData out;
  std::ostringstream tsv;
  tsv << "witness\tunit\treading\tstate\n";

  std::vector<std::string> witnesses;
  for (std::size_t c = 0; c < cfg.clusters; ++c)
    for (std::size_t i = 0; i < cfg.witnesses_per_cluster; ++i) {
      std::string w = "w" + std::to_string(c + 1) + "-" + std::to_string(i + 1);
      out.labels[w] = c;
      witnesses.push_back(w);
    }

  for (const auto& w : witnesses) {
    const std::size_t own = out.labels[w];
    for (std::size_t t = 0; t < cfg.exclusive_units; ++t) {
      const std::string unit = "u" + std::to_string(t + 1);
      if (unif(rng) < cfg.lacunae) {
        tsv << w << '\t' << unit << "\t1\tlacunose\n";
        continue;
      }
      std::size_t cluster = own;
      if (cfg.clusters > 1 && unif(rng) < cfg.contamination) {
        std::uniform_int_distribution<std::size_t> other(0, cfg.clusters - 2);
        std::size_t pick = other(rng);
        cluster = pick >= own ? pick + 1 : pick;
      }
      tsv << w << '\t' << unit << '\t' << cluster + 1 << "\tattested\n";
    }
    for (std::size_t t = 0; t < cfg.shared_units; ++t) {
      const std::string unit = "s" + std::to_string(t + 1);
      if (unif(rng) < cfg.lacunae) {
        tsv << w << '\t' << unit << "\t1\tlacunose\n";
      } else {
        tsv << w << '\t' << unit << "\t1\tattested\n";
      }
    }
  }
  out.tsv = tsv.str();
  return out;
}

}  // namespace textclust

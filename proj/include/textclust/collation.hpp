#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

// Collation ingestion and the exclusion pipeline: parse a tabular
// collation, drop unwanted cell states and singular readings, and
// partition witnesses into primary (continuous-text) and secondary
// (fragmentary) sets.

namespace textclust {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CellState { Attested, Lacunose, Uncertain, Corrector, Overlapped };

inline const char* to_string(CellState s) {
  switch (s) {
    case CellState::Attested: return "attested";
    case CellState::Lacunose: return "lacunose";
    case CellState::Uncertain: return "uncertain";
    case CellState::Corrector: return "corrector";
    case CellState::Overlapped: return "overlapped";
  }
  return "?";
}

inline std::optional<CellState> parse_state(const std::string& tok) {
  if (tok.empty() || tok == "attested") return CellState::Attested;
  if (tok == "lacunose") return CellState::Lacunose;
  if (tok == "uncertain") return CellState::Uncertain;
  if (tok == "corrector") return CellState::Corrector;
  if (tok == "overlapped") return CellState::Overlapped;
  return std::nullopt;
}

// A reading is scoped to its unit: (unit, reading-id) is the key.
struct ReadingId {
  std::string unit;
  std::string reading;
  auto operator<=>(const ReadingId&) const = default;
};

struct Cell {
  std::string witness;
  std::string unit;
  std::string reading;
  CellState state = CellState::Attested;
};

class Collation {
 public:
  // Adds one cell; witness/unit ordering is first-appearance order.
  // Identical duplicate rows are tolerated; conflicting duplicates throw.
  void add_cell(const Cell& c) {
    auto key = std::make_pair(c.witness, c.unit);
    auto it = cell_index_.find(key);
    if (it != cell_index_.end()) {
      const Cell& prev = cells_[it->second];
      if (prev.reading == c.reading && prev.state == c.state) return;
      throw ParseError("duplicate cell with conflicting content for witness '" +
                       c.witness + "' at unit '" + c.unit + "': reading '" +
                       prev.reading + "' vs '" + c.reading + "'");
    }
    if (!witness_index_.count(c.witness)) {
      witness_index_[c.witness] = witnesses_.size();
      witnesses_.push_back(c.witness);
    }
    if (!unit_index_.count(c.unit)) {
      unit_index_[c.unit] = units_.size();
      units_.push_back(c.unit);
    }
    cell_index_[key] = cells_.size();
    cells_.push_back(c);
  }

  // Registers a witness that may have no surviving cells.
  void add_witness(const std::string& w) {
    if (!witness_index_.count(w)) {
      witness_index_[w] = witnesses_.size();
      witnesses_.push_back(w);
    }
  }

  const std::vector<std::string>& witnesses() const { return witnesses_; }
  const std::vector<std::string>& units() const { return units_; }
  const std::vector<Cell>& cells() const { return cells_; }

  // Distinct (unit, reading) pairs in first-appearance order.
  std::vector<ReadingId> readings() const {
    std::vector<ReadingId> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& c : cells_) {
      if (seen.insert({c.unit, c.reading}).second)
        out.push_back({c.unit, c.reading});
    }
    return out;
  }

 private:
  std::vector<std::string> witnesses_;
  std::vector<std::string> units_;
  std::vector<Cell> cells_;
  std::map<std::pair<std::string, std::string>, std::size_t> cell_index_;
  std::unordered_map<std::string, std::size_t> witness_index_;
  std::unordered_map<std::string, std::size_t> unit_index_;
};

struct ExclusionPolicy {
  std::set<CellState> drop_states = {CellState::Lacunose, CellState::Uncertain,
                                     CellState::Corrector,
                                     CellState::Overlapped};
  bool drop_singular_readings = true;
  std::size_t min_extant_readings = 300;

  void validate() const {
    if (drop_states.count(CellState::Attested))
      throw std::invalid_argument("exclusion policy may not drop attested cells");
  }
};

struct DropRecord {
  std::string what;  // "reading" or "witness" or "cell"
  std::string id;
  std::string rule;
};

// Output of the exclusion pipeline. Retained readings are in original
// row order; primary witnesses in original column order.
struct FilteredCollation {
  std::vector<ReadingId> readings;
  std::vector<std::string> primary_witnesses;
  std::vector<std::string> secondary_witnesses;
  // Surviving attested cells, for both primary and secondary witnesses.
  // Keyed by witness; values are (unit, reading) pairs that passed the
  // state filter (secondary cells may reference dropped readings).
  std::map<std::string, std::vector<ReadingId>> cells;
  std::vector<DropRecord> dropped;
  bool empty() const { return readings.empty() || primary_witnesses.empty(); }
};

// Parses tab-separated collation text. Header line
// `witness<TAB>unit<TAB>reading<TAB>state` is optional and detected by
// its literal column names; the state column defaults to attested.
inline Collation parse_collation(std::istream& in) {
  Collation out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos
                                         ? std::string::npos
                                         : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (lineno == 1 && f.size() >= 3 && f[0] == "witness" && f[1] == "unit")
      continue;  // header
    if (f.size() < 3)
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected at least 3 tab-separated fields");
    Cell c;
    c.witness = f[0];
    c.unit = f[1];
    c.reading = f[2];
    if (f.size() >= 4) {
      auto st = parse_state(f[3]);
      if (!st)
        throw ParseError("line " + std::to_string(lineno) +
                         ": unknown state token '" + f[3] + "'");
      c.state = *st;
    }
    out.add_cell(c);
  }
  return out;
}

inline Collation parse_collation(const std::string& text) {
  std::istringstream in(text);
  return parse_collation(in);
}

// JSON rendering with the same fields: an array of objects
// {"witness":..., "unit":..., "reading":..., "state":...}.
inline Collation parse_collation_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("collation JSON must be an array of cells");
  Collation out;
  for (const auto& e : j) {
    Cell c;
    c.witness = e.at("witness").get<std::string>();
    c.unit = e.at("unit").get<std::string>();
    c.reading = e.at("reading").get<std::string>();
    if (e.contains("state")) {
      auto st = parse_state(e["state"].get<std::string>());
      if (!st)
        throw ParseError("unknown state token '" +
                         e["state"].get<std::string>() + "'");
      c.state = *st;
    }
    out.add_cell(c);
  }
  return out;
}

inline Collation load_collation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open collation file: " + path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    nlohmann::json j;
    in >> j;
    return parse_collation_json(j);
  }
  return parse_collation(in);
}

// Single pass: state filter, then singular readings counted over ALL
// witnesses, then the extant-count threshold partitions witnesses.
inline FilteredCollation apply_exclusions(const Collation& c,
                                          const ExclusionPolicy& p) {
  p.validate();
  FilteredCollation out;

  std::map<std::pair<std::string, std::string>, std::size_t> attestation_count;
  std::vector<const Cell*> surviving;
  for (const auto& cell : c.cells()) {
    if (p.drop_states.count(cell.state)) {
      out.dropped.push_back({"cell", cell.witness + "@" + cell.unit,
                             std::string("state:") + to_string(cell.state)});
      continue;
    }
    surviving.push_back(&cell);
    ++attestation_count[{cell.unit, cell.reading}];
  }

  std::set<std::pair<std::string, std::string>> retained;
  for (const auto& r : c.readings()) {
    auto it = attestation_count.find({r.unit, r.reading});
    std::size_t n = it == attestation_count.end() ? 0 : it->second;
    if (n == 0) {
      out.dropped.push_back({"reading", r.unit + "." + r.reading, "unattested"});
    } else if (p.drop_singular_readings && n == 1) {
      out.dropped.push_back({"reading", r.unit + "." + r.reading, "singular"});
    } else {
      retained.insert({r.unit, r.reading});
      out.readings.push_back(r);
    }
  }

  std::map<std::string, std::size_t> extant;
  for (const Cell* cell : surviving) {
    out.cells[cell->witness].push_back({cell->unit, cell->reading});
    if (retained.count({cell->unit, cell->reading})) ++extant[cell->witness];
  }

  for (const auto& w : c.witnesses()) {
    if (extant[w] >= p.min_extant_readings) {
      out.primary_witnesses.push_back(w);
    } else {
      out.secondary_witnesses.push_back(w);
      out.dropped.push_back({"witness", w,
                             "extant:" + std::to_string(extant[w]) + "<" +
                                 std::to_string(p.min_extant_readings)});
    }
  }
  return out;
}

// Reinterprets a FilteredCollation as a Collation over its surviving
// attested cells (all witnesses), for idempotence checks and re-filtering.
inline Collation to_collation(const FilteredCollation& f) {
  Collation out;
  auto add_all = [&](const std::vector<std::string>& ws) {
    for (const auto& w : ws) {
      out.add_witness(w);  // keep witnesses whose every cell was dropped
      auto it = f.cells.find(w);
      if (it == f.cells.end()) continue;
      for (const auto& r : it->second)
        out.add_cell({w, r.unit, r.reading, CellState::Attested});
    }
  };
  add_all(f.primary_witnesses);
  add_all(f.secondary_witnesses);
  return out;
}

}  // namespace textclust

#pragma once

// Cell records, the per-cell JSON file format, the parametric synthetic cell
// generator and train / primary-test / secondary-test splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cyclelife/error.hpp"
#include "cyclelife/grid.hpp"
#include "cyclelife/random.hpp"

namespace cyclelife {

struct DischargePoint {
  double voltage = 0.0;   // V
  double capacity = 0.0;  // Ah
  bool operator==(const DischargePoint&) const = default;
};

struct CycleCurve {
  int cycle_index = 0;
  std::vector<DischargePoint> points;  // voltage strictly decreasing
  bool operator==(const CycleCurve&) const = default;
};

struct CellRecord {
  std::string cell_id;
  double nominal_capacity = 0.0;  // Ah
  int cycle_life = 0;             // first cycle at 80 % of nominal
  std::vector<CycleCurve> cycles; // strictly increasing cycle_index

  const CycleCurve* find_cycle(int index) const {
    auto it = std::lower_bound(cycles.begin(), cycles.end(), index,
                               [](const CycleCurve& c, int i) { return c.cycle_index < i; });
    return (it != cycles.end() && it->cycle_index == index) ? &*it : nullptr;
  }

  bool has_cycle(int index) const { return find_cycle(index) != nullptr; }

  int max_cycle() const { return cycles.empty() ? 0 : cycles.back().cycle_index; }

  bool operator==(const CellRecord&) const = default;
};

struct SynthParams {
  double nominal_capacity = 1.1;
  int target_life = 1000;
  double fade_exponent = 1.0;
  double curve_midpoint = 3.25;
  double curve_width = 0.1;
  double noise_std = 0.0;
  int cycles_to_emit = 120;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> primary_test;
  std::vector<std::string> secondary_test;
  bool operator==(const DatasetSplit&) const = default;
};

inline constexpr double kEndOfLifeFraction = 0.8;

// ---------------------------------------------------------------------------
// Validation

inline void validate_curve(const CycleCurve& curve, const std::string& cell_id) {
  const std::string where = "cell '" + cell_id + "' cycle " + std::to_string(curve.cycle_index);
  if (curve.cycle_index < 1) fail(ErrorCode::SchemaViolation, "index: must be positive (" + where + ")");
  if (curve.points.size() < 2) fail(ErrorCode::SchemaViolation, "points: fewer than 2 points (" + where + ")");
  for (const auto& p : curve.points) {
    if (!std::isfinite(p.voltage) || p.voltage < 1.5 || p.voltage > 4.0)
      fail(ErrorCode::SchemaViolation, "points: voltage outside [1.5, 4.0] (" + where + ")");
    if (!std::isfinite(p.capacity) || p.capacity < 0.0)
      fail(ErrorCode::SchemaViolation, "points: negative or non-finite capacity (" + where + ")");
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    if (!(curve.points[k].voltage < curve.points[k - 1].voltage))
      fail(ErrorCode::MonotonicityViolation, "voltage not strictly decreasing in " + where);
    if (curve.points[k].capacity < curve.points[k - 1].capacity)
      fail(ErrorCode::MonotonicityViolation, "capacity decreasing in " + where);
  }
}

inline void validate_cell(const CellRecord& cell) {
  if (cell.cell_id.empty()) fail(ErrorCode::SchemaViolation, "cell_id: empty");
  if (!(cell.nominal_capacity > 0.0) || !std::isfinite(cell.nominal_capacity))
    fail(ErrorCode::SchemaViolation, "nominal_capacity_ah: must be positive (cell '" + cell.cell_id + "')");
  if (cell.cycle_life < 1)
    fail(ErrorCode::SchemaViolation, "cycle_life: must be positive (cell '" + cell.cell_id + "')");
  if (cell.cycles.empty()) fail(ErrorCode::SchemaViolation, "cycles: empty (cell '" + cell.cell_id + "')");
  for (std::size_t k = 0; k < cell.cycles.size(); ++k) {
    if (k > 0 && cell.cycles[k].cycle_index <= cell.cycles[k - 1].cycle_index)
      fail(ErrorCode::MonotonicityViolation, "cycle indices not strictly increasing in cell '" + cell.cell_id +
                                                 "' at cycle " + std::to_string(cell.cycles[k].cycle_index));
    validate_curve(cell.cycles[k], cell.cell_id);
  }
}

// ---------------------------------------------------------------------------
// Synthetic cells
//
// Fade law f(C) = 1 - 0.2 (C/L)^gamma, so the end-of-discharge capacity
// crosses 80 % of nominal exactly at C = L. Curve shape
// g(V) = (s(V) - s(3.5)) / (s(2.0) - s(3.5)) with s(V) = tanh((Vmid - V)/w).

inline double fade_factor(int cycle, int life, double gamma) {
  return 1.0 - (1.0 - kEndOfLifeFraction) *
                   std::pow(static_cast<double>(cycle) / static_cast<double>(life), gamma);
}

inline double curve_shape(double voltage, double midpoint, double width) {
  const auto s = [&](double v) { return std::tanh((midpoint - v) / width); };
  return (s(voltage) - s(VoltageGrid::kHigh)) / (s(VoltageGrid::kLow) - s(VoltageGrid::kHigh));
}

inline void validate_synth_params(const SynthParams& p) {
  if (!(p.nominal_capacity > 0.0)) fail(ErrorCode::InvalidParams, "nominal_capacity must be positive");
  if (!(p.fade_exponent > 0.0)) fail(ErrorCode::InvalidParams, "fade_exponent must be positive");
  if (!(p.curve_width > 0.0)) fail(ErrorCode::InvalidParams, "curve_width must be positive");
  if (!(p.noise_std >= 0.0)) fail(ErrorCode::InvalidParams, "noise_std must be non-negative");
  if (!std::isfinite(p.curve_midpoint)) fail(ErrorCode::InvalidParams, "curve_midpoint must be finite");
  if (p.cycles_to_emit < 11) fail(ErrorCode::InvalidParams, "cycles_to_emit must be at least 11");
  if (p.target_life < p.cycles_to_emit) fail(ErrorCode::InvalidParams, "target_life must be >= cycles_to_emit");
}

inline CellRecord synth_cell(const SynthParams& params, std::uint64_t seed, std::string cell_id = {}) {
  validate_synth_params(params);
  const VoltageGrid& grid = default_grid();
  std::vector<double> shape(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    shape[k] = curve_shape(grid[k], params.curve_midpoint, params.curve_width);

  Rng rng(seed);
  CellRecord cell;
  cell.cell_id = cell_id.empty() ? "synth-" + std::to_string(seed) : std::move(cell_id);
  cell.nominal_capacity = params.nominal_capacity;
  cell.cycle_life = params.target_life;
  cell.cycles.reserve(static_cast<std::size_t>(params.cycles_to_emit));
  for (int c = 1; c <= params.cycles_to_emit; ++c) {
    const double scale = fade_factor(c, params.target_life, params.fade_exponent) * params.nominal_capacity;
    CycleCurve curve{c, {}};
    curve.points.reserve(grid.size());
    double floor = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double q = scale * shape[k];
      if (params.noise_std > 0.0) {
        // Truncate so the curve stays non-negative and non-decreasing.
        q = std::max(floor, q + params.noise_std * rng.normal());
        floor = q;
      }
      curve.points.push_back({grid[k], q});
    }
    cell.cycles.push_back(std::move(curve));
  }
  return cell;
}

// Parameter ranges for randomized synthetic cohorts; each cell draws every
// parameter uniformly from its range.
struct SynthRanges {
  int life_min = 150;
  int life_max = 2300;
  double fade_exponent_min = 1.25;
  double fade_exponent_max = 1.75;
  double midpoint_min = 3.2;
  double midpoint_max = 3.3;
  double width_min = 0.05;
  double width_max = 0.15;
  double nominal_min = 1.05;
  double nominal_max = 1.1;
  double noise_std = 1e-4;
  int cycles_to_emit = 120;
};

inline SynthParams draw_synth_params(const SynthRanges& r, Rng& rng) {
  if (r.life_min > r.life_max) fail(ErrorCode::InvalidParams, "life_min exceeds life_max");
  SynthParams p;
  p.target_life = r.life_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(r.life_max - r.life_min + 1)));
  p.fade_exponent = rng.uniform(r.fade_exponent_min, r.fade_exponent_max);
  p.curve_midpoint = rng.uniform(r.midpoint_min, r.midpoint_max);
  p.curve_width = rng.uniform(r.width_min, r.width_max);
  p.nominal_capacity = rng.uniform(r.nominal_min, r.nominal_max);
  p.noise_std = r.noise_std;
  p.cycles_to_emit = std::min(r.cycles_to_emit, p.target_life);
  return p;
}

// Cells named "cell-0000", "cell-0001", ...
inline std::vector<CellRecord> synth_cohort(std::size_t count, const SynthRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CellRecord> cells;
  cells.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const SynthParams p = draw_synth_params(ranges, rng);
    char id[32];
    std::snprintf(id, sizeof id, "cell-%04zu", i);
    cells.push_back(synth_cell(p, derive_seed(seed, i), id));
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Cell file format:
// {"cell_id": str, "nominal_capacity_ah": float, "cycle_life": int,
//  "cycles": [{"index": int, "points": [[voltage, capacity], ...]}, ...]}

inline nlohmann::json cell_to_json(const CellRecord& cell) {
  nlohmann::json cycles = nlohmann::json::array();
  for (const auto& curve : cell.cycles) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : curve.points) pts.push_back({p.voltage, p.capacity});
    cycles.push_back({{"index", curve.cycle_index}, {"points", std::move(pts)}});
  }
  return {{"cell_id", cell.cell_id},
          {"nominal_capacity_ah", cell.nominal_capacity},
          {"cycle_life", cell.cycle_life},
          {"cycles", std::move(cycles)}};
}

namespace detail {

template <typename T>
T require_field(const nlohmann::json& j, const char* field, const std::string& context) {
  if (!j.is_object() || !j.contains(field))
    fail(ErrorCode::SchemaViolation, std::string(field) + ": missing (" + context + ")");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::SchemaViolation, std::string(field) + ": wrong type (" + context + ")");
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace detail

inline CellRecord cell_from_json(const nlohmann::json& j, const std::string& context = "cell") {
  CellRecord cell;
  cell.cell_id = detail::require_field<std::string>(j, "cell_id", context);
  const std::string ctx = "cell '" + cell.cell_id + "'";
  cell.nominal_capacity = detail::require_field<double>(j, "nominal_capacity_ah", ctx);
  if (!j.at("cycle_life").is_number_integer())
    fail(ErrorCode::SchemaViolation, "cycle_life: must be an integer (" + ctx + ")");
  cell.cycle_life = detail::require_field<int>(j, "cycle_life", ctx);
  const auto& cycles = j.at("cycles");
  if (!cycles.is_array()) fail(ErrorCode::SchemaViolation, "cycles: must be an array (" + ctx + ")");
  cell.cycles.reserve(cycles.size());
  for (const auto& jc : cycles) {
    CycleCurve curve;
    curve.cycle_index = detail::require_field<int>(jc, "index", ctx);
    const auto& pts = jc.contains("points") ? jc.at("points") : nlohmann::json();
    if (!pts.is_array()) fail(ErrorCode::SchemaViolation, "points: missing or not an array (" + ctx + ")");
    curve.points.reserve(pts.size());
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        fail(ErrorCode::SchemaViolation, "points: each entry must be [voltage, capacity] (" + ctx + ")");
      curve.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    cell.cycles.push_back(std::move(curve));
  }
  validate_cell(cell);
  return cell;
}

inline void write_cell(const CellRecord& cell, const std::filesystem::path& path) {
  validate_cell(cell);
  detail::write_text_file(path, cell_to_json(cell).dump());
}

inline CellRecord read_cell(const std::filesystem::path& path) {
  return cell_from_json(detail::read_json_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Manifest: {"cells": [relative paths], "splits": {"train": [...], ...}}

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<std::string> cell_files;  // relative to base_dir
  std::optional<DatasetSplit> splits;
};

inline nlohmann::json split_to_json(const DatasetSplit& s) {
  return {{"train", s.train}, {"primary_test", s.primary_test}, {"secondary_test", s.secondary_test}};
}

inline DatasetSplit split_from_json(const nlohmann::json& j) {
  DatasetSplit s;
  const auto list = [&](const char* key) {
    return j.contains(key) ? detail::require_field<std::vector<std::string>>(j, key, "splits")
                           : std::vector<std::string>{};
  };
  s.train = list("train");
  s.primary_test = list("primary_test");
  s.secondary_test = list("secondary_test");
  return s;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  Manifest m;
  m.base_dir = path.parent_path();
  m.cell_files = detail::require_field<std::vector<std::string>>(j, "cells", "manifest " + path.string());
  if (j.contains("splits")) m.splits = split_from_json(j.at("splits"));
  return m;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  nlohmann::json j{{"cells", m.cell_files}};
  if (m.splits) j["splits"] = split_to_json(*m.splits);
  detail::write_text_file(path, j.dump(2) + "\n");
}

// Resolves a directory (with or without manifest.json) or a manifest file.
inline Manifest resolve_manifest(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, path.string());
  if (fs::is_directory(path)) {
    if (fs::exists(path / "manifest.json")) return read_manifest(path / "manifest.json");
    Manifest m;
    m.base_dir = path;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        m.cell_files.push_back(entry.path().filename().string());
    std::sort(m.cell_files.begin(), m.cell_files.end());
    return m;
  }
  return read_manifest(path);
}

inline std::vector<CellRecord> load_cells(const Manifest& manifest) {
  std::vector<CellRecord> cells;
  cells.reserve(manifest.cell_files.size());
  std::set<std::string> ids;
  for (const auto& rel : manifest.cell_files) {
    cells.push_back(read_cell(manifest.base_dir / rel));
    if (!ids.insert(cells.back().cell_id).second)
      fail(ErrorCode::SchemaViolation, "cell_id: duplicate '" + cells.back().cell_id + "'");
  }
  return cells;
}

inline std::vector<CellRecord> load_cells(const std::filesystem::path& path) {
  return load_cells(resolve_manifest(path));
}

// ---------------------------------------------------------------------------
// Splitting

struct ExplicitSplit {
  DatasetSplit lists;
};

struct CountSplit {
  std::size_t train = 0, primary_test = 0, secondary_test = 0;
  std::uint64_t seed = 0;
};

struct FractionSplit {
  double train = 0.0, primary_test = 0.0, secondary_test = 0.0;
  std::uint64_t seed = 0;
};

using SplitSpec = std::variant<ExplicitSplit, CountSplit, FractionSplit>;

// Cell counts proportional to a 41/43/40 cohort, with at least one training cell.
inline CountSplit proportional_counts(std::size_t n, std::uint64_t seed) {
  if (n == 124) return {41, 43, 40, seed};
  CountSplit c{0, 0, 0, seed};
  c.train = std::max<std::size_t>(n > 0 ? 1 : 0, static_cast<std::size_t>(std::lround(n * 41.0 / 124.0)));
  c.train = std::min(c.train, n);
  c.primary_test = std::min(n - c.train, static_cast<std::size_t>(std::lround(n * 43.0 / 124.0)));
  c.secondary_test = n - c.train - c.primary_test;
  return c;
}

inline void check_split(const DatasetSplit& s, const std::set<std::string>& known) {
  std::set<std::string> seen;
  for (const auto* list : {&s.train, &s.primary_test, &s.secondary_test}) {
    for (const auto& id : *list) {
      if (!known.count(id)) fail(ErrorCode::UnknownCellId, id);
      if (!seen.insert(id).second) fail(ErrorCode::OverlappingSplits, id);
    }
  }
}

inline DatasetSplit split_dataset(const std::vector<CellRecord>& cells, const SplitSpec& spec) {
  std::set<std::string> known;
  std::vector<std::string> ids;
  for (const auto& c : cells) {
    known.insert(c.cell_id);
    ids.push_back(c.cell_id);
  }

  const auto by_counts = [&](std::size_t a, std::size_t b, std::size_t c, std::uint64_t seed) {
    if (a + b + c > ids.size()) fail(ErrorCode::InvalidArgument, "split counts exceed the number of cells");
    std::vector<std::string> order = ids;
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(order));
    DatasetSplit s;
    s.train.assign(order.begin(), order.begin() + a);
    s.primary_test.assign(order.begin() + a, order.begin() + a + b);
    s.secondary_test.assign(order.begin() + a + b, order.begin() + a + b + c);
    return s;
  };

  DatasetSplit out;
  if (const auto* e = std::get_if<ExplicitSplit>(&spec)) {
    out = e->lists;
  } else if (const auto* c = std::get_if<CountSplit>(&spec)) {
    out = by_counts(c->train, c->primary_test, c->secondary_test, c->seed);
  } else {
    const auto& f = std::get<FractionSplit>(spec);
    if (f.train < 0 || f.primary_test < 0 || f.secondary_test < 0 ||
        f.train + f.primary_test + f.secondary_test > 1.0 + 1e-12)
      fail(ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to at most 1");
    const auto n = static_cast<double>(ids.size());
    const auto a = static_cast<std::size_t>(std::floor(f.train * n + 1e-9));
    const auto b = static_cast<std::size_t>(std::floor(f.primary_test * n + 1e-9));
    const auto c2 = std::min(ids.size() - a - b, static_cast<std::size_t>(std::floor(f.secondary_test * n + 1e-9)));
    out = by_counts(a, b, c2, f.seed);
  }
  check_split(out, known);
  return out;
}

inline std::map<std::string, const CellRecord*> index_cells(const std::vector<CellRecord>& cells) {
  std::map<std::string, const CellRecord*> index;
  for (const auto& c : cells) index.emplace(c.cell_id, &c);
  return index;
}

inline std::vector<const CellRecord*> select_cells(const std::vector<CellRecord>& cells,
                                                  const std::vector<std::string>& ids) {
  const auto index = index_cells(cells);
  std::vector<const CellRecord*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) fail(ErrorCode::UnknownCellId, id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace cyclelife

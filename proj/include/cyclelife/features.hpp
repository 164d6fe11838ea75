#pragma once

// Delta-Q(V) sequence construction on the fixed voltage grid, per-grid-point
// standardization, shift augmentation and the log-variance feature.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclelife/dataset.hpp"
#include "cyclelife/error.hpp"
#include "cyclelife/grid.hpp"

namespace cyclelife {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SequenceSample {
  std::string cell_id;
  int start_cycle = 0;
  int terminal_cycle = 0;
  std::vector<int> cycles;  // cycle index of each row
  Matrix features;          // T x 151
  double target = 0.0;      // cycles, or scaled cycles once prepared for training
};

// Piecewise-linear Q(V) on the grid; queries outside the curve's voltage range
// clamp to the nearest end point.
inline Vector interpolate_qv(const CycleCurve& curve, const VoltageGrid& grid = default_grid()) {
  const auto& pts = curve.points;
  if (pts.size() < 2 || !(pts.front().voltage > pts.back().voltage))
    fail(ErrorCode::DegenerateCurve, "cycle " + std::to_string(curve.cycle_index) + " has fewer than 2 distinct voltages");

  Vector out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = grid[k];
    double q;
    if (v >= pts.front().voltage) {
      q = pts.front().capacity;
    } else if (v <= pts.back().voltage) {
      q = pts.back().capacity;
    } else {
      // First point with voltage < v; its predecessor has voltage >= v.
      auto it = std::partition_point(pts.begin(), pts.end(), [v](const DischargePoint& p) { return p.voltage >= v; });
      const auto& hi = *(it - 1);
      const auto& lo = *it;
      q = hi.capacity + (lo.capacity - hi.capacity) * (hi.voltage - v) / (hi.voltage - lo.voltage);
    }
    out[static_cast<Eigen::Index>(k)] = q;
  }
  return out;
}

inline SequenceSample build_sequence(const CellRecord& cell, int start_cycle, int terminal_cycle,
                                     const VoltageGrid& grid = default_grid(), int baseline_cycle = 10) {
  if (start_cycle > terminal_cycle)
    fail(ErrorCode::EmptyWindow, "start cycle after terminal cycle for cell '" + cell.cell_id + "'");
  if (terminal_cycle >= cell.cycle_life)
    fail(ErrorCode::WindowExceedsLife, "terminal cycle " + std::to_string(terminal_cycle) + " >= cycle life " +
                                           std::to_string(cell.cycle_life) + " of cell '" + cell.cell_id + "'");
  if (terminal_cycle > cell.max_cycle())
    fail(ErrorCode::WindowExceedsData, "cell '" + cell.cell_id + "' has no data up to cycle " +
                                           std::to_string(terminal_cycle));
  const CycleCurve* base = cell.find_cycle(baseline_cycle);
  if (!base)
    fail(ErrorCode::MissingBaselineCycle, "cell '" + cell.cell_id + "' lacks cycle " + std::to_string(baseline_cycle));

  std::vector<const CycleCurve*> rows;
  for (const auto& c : cell.cycles)
    if (c.cycle_index >= start_cycle && c.cycle_index <= terminal_cycle) rows.push_back(&c);
  if (rows.empty())
    fail(ErrorCode::EmptyWindow, "no cycles of cell '" + cell.cell_id + "' in [" + std::to_string(start_cycle) + ", " +
                                     std::to_string(terminal_cycle) + "]");

  const Vector q_base = interpolate_qv(*base, grid);
  SequenceSample s;
  s.cell_id = cell.cell_id;
  s.start_cycle = start_cycle;
  s.terminal_cycle = terminal_cycle;
  s.target = static_cast<double>(cell.cycle_life);
  s.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    s.cycles.push_back(rows[t]->cycle_index);
    s.features.row(static_cast<Eigen::Index>(t)) = (interpolate_qv(*rows[t], grid) - q_base).transpose();
  }
  return s;
}

// ---------------------------------------------------------------------------

struct Scaler {
  static constexpr double kStdFloor = 1e-8;
  Vector means;
  Vector stds;

  static Scaler identity(Eigen::Index width) {
    return {Vector::Zero(width), Vector::Ones(width)};
  }
};

inline Scaler fit_scaler(std::span<const SequenceSample> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "fit_scaler needs at least one sample");
  const Eigen::Index width = samples.front().features.cols();
  Vector sum = Vector::Zero(width);
  double rows = 0.0;
  for (const auto& s : samples) {
    if (s.features.cols() != width) fail(ErrorCode::ShapeMismatch, "feature widths differ");
    sum += s.features.colwise().sum().transpose();
    rows += static_cast<double>(s.features.rows());
  }
  if (rows == 0.0) fail(ErrorCode::EmptyInput, "fit_scaler needs at least one row");
  Scaler sc;
  sc.means = sum / rows;
  Vector sq = Vector::Zero(width);
  for (const auto& s : samples)
    sq += (s.features.rowwise() - sc.means.transpose()).array().square().colwise().sum().matrix().transpose();
  sc.stds = (sq / rows).array().sqrt().max(Scaler::kStdFloor).matrix();
  return sc;
}

inline SequenceSample apply_scaler(const Scaler& scaler, SequenceSample sample) {
  if (sample.features.cols() != scaler.means.size()) fail(ErrorCode::ShapeMismatch, "scaler width differs from sample");
  sample.features = ((sample.features.rowwise() - scaler.means.transpose()).array().rowwise() /
                     scaler.stds.transpose().array())
                        .matrix();
  return sample;
}

inline Matrix invert_scaler(const Scaler& scaler, const Matrix& standardized) {
  return ((standardized.array().rowwise() * scaler.stds.transpose().array()).rowwise() +
          scaler.means.transpose().array())
      .matrix();
}

// ---------------------------------------------------------------------------

struct WindowDescriptor {
  int start_cycle = 0;
  int terminal_cycle = 0;
  int shift = 0;
  double target = 0.0;
  bool operator==(const WindowDescriptor&) const = default;
};

struct AugmentOptions {
  int shift_step = 3;
  int max_shift = 0;
  double life_threshold = 775.0;
};

// Shifted windows [start+s, terminal+s] labelled cl - s, for s = 0, step, ...
// up to max_shift. Cells at or below the life threshold keep only s = 0.
inline std::vector<WindowDescriptor> augment(const CellRecord& cell, int start_cycle, int terminal_cycle,
                                             const AugmentOptions& opt) {
  if (opt.max_shift < 0) fail(ErrorCode::InvalidArgument, "max_shift must be non-negative");
  if (opt.shift_step < 1) fail(ErrorCode::InvalidArgument, "shift_step must be positive");
  const double life = static_cast<double>(cell.cycle_life);
  std::vector<WindowDescriptor> out{{start_cycle, terminal_cycle, 0, life}};
  if (!(life > opt.life_threshold)) return out;
  for (int s = opt.shift_step; s <= opt.max_shift; s += opt.shift_step) {
    const int terminal = terminal_cycle + s;
    if (terminal >= cell.cycle_life || terminal > cell.max_cycle())
      fail(ErrorCode::ShiftExceedsData, "shift " + std::to_string(s) + " moves the window of cell '" + cell.cell_id +
                                            "' past cycle " + std::to_string(std::min(cell.cycle_life - 1, cell.max_cycle())));
    out.push_back({start_cycle + s, terminal, s, life - s});
  }
  return out;
}

// ---------------------------------------------------------------------------

// log10 of the population variance. Deviations are taken from the first entry
// before the two-pass variance so a constant vector yields exactly zero.
inline double log10_population_variance(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "variance of an empty vector");
  const double pivot = values.front();
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v - pivot;
  mean /= n;
  double ss = 0.0;
  for (double v : values) {
    const double d = (v - pivot) - mean;
    ss += d * d;
  }
  const double var = ss / n;
  if (!(var >= 1e-300)) fail(ErrorCode::DegenerateVariance, "delta-Q is constant across the voltage grid");
  return std::log10(var);
}

inline double variance_feature(const CellRecord& cell, const VoltageGrid& grid = default_grid(), int c_hi = 100,
                               int c_lo = 10) {
  const CycleCurve* hi = cell.find_cycle(c_hi);
  const CycleCurve* lo = cell.find_cycle(c_lo);
  if (!hi || !lo)
    fail(ErrorCode::MissingCycle, "cell '" + cell.cell_id + "' lacks cycle " + std::to_string(hi ? c_lo : c_hi));
  const Vector dq = interpolate_qv(*hi, grid) - interpolate_qv(*lo, grid);
  return log10_population_variance(std::span<const double>(dq.data(), static_cast<std::size_t>(dq.size())));
}

}  // namespace cyclelife

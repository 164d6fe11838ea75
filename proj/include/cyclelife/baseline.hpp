#pragma once

// Single-feature linear "variance" model: ordinary least squares of
// (optionally log10-transformed) cycle life on log10 var(Q_hi(V) - Q_lo(V)).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cyclelife/dataset.hpp"
#include "cyclelife/error.hpp"
#include "cyclelife/features.hpp"

namespace cyclelife {

enum class TargetTransform { identity, log10 };

inline std::string to_string(TargetTransform t) { return t == TargetTransform::log10 ? "log10" : "identity"; }

inline TargetTransform parse_transform(const std::string& s) {
  if (s == "log10") return TargetTransform::log10;
  if (s == "identity") return TargetTransform::identity;
  fail(ErrorCode::SchemaViolation, "target_transform: expected 'log10' or 'identity', got '" + s + "'");
}

struct VarianceModel {
  double slope = 0.0;
  double intercept = 0.0;
  TargetTransform target_transform = TargetTransform::log10;
  bool operator==(const VarianceModel&) const = default;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Closed-form OLS with intercept. Points are sorted first so the result is
// bit-identical for any input order.
inline LinearFit ols_fit(std::vector<std::pair<double, double>> xy) {
  if (xy.size() < 2) fail(ErrorCode::DegenerateDesign, "need at least two points");
  std::sort(xy.begin(), xy.end());
  if (xy.front().first == xy.back().first) fail(ErrorCode::DegenerateDesign, "all feature values are equal");
  const auto n = static_cast<double>(xy.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline double transform_life(double life, TargetTransform t) {
  return t == TargetTransform::log10 ? std::log10(life) : life;
}

inline double untransform_life(double value, TargetTransform t) {
  return t == TargetTransform::log10 ? std::pow(10.0, value) : value;
}

inline VarianceModel fit_variance_model(std::span<const CellRecord* const> cells, const VoltageGrid& grid = default_grid(),
                                        TargetTransform transform = TargetTransform::log10, int c_hi = 100,
                                        int c_lo = 10) {
  std::vector<std::string> missing;
  for (const auto* c : cells)
    if (!c->has_cycle(c_hi) || !c->has_cycle(c_lo)) missing.push_back(c->cell_id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    fail(ErrorCode::MissingCycle, "cells lacking cycle " + std::to_string(c_lo) + " or " + std::to_string(c_hi) + ": " + list);
  }
  std::vector<std::pair<double, double>> xy;
  xy.reserve(cells.size());
  for (const auto* c : cells)
    xy.emplace_back(variance_feature(*c, grid, c_hi, c_lo), transform_life(c->cycle_life, transform));
  const LinearFit fit = ols_fit(std::move(xy));
  return {fit.slope, fit.intercept, transform};
}

inline double predict_from_feature(const VarianceModel& m, double feature) {
  return std::max(1.0, untransform_life(m.slope * feature + m.intercept, m.target_transform));
}

inline double predict_variance_model(const VarianceModel& m, const CellRecord& cell, const VoltageGrid& grid = default_grid(),
                                     int c_hi = 100, int c_lo = 10) {
  return predict_from_feature(m, variance_feature(cell, grid, c_hi, c_lo));
}

inline nlohmann::json to_json(const VarianceModel& m) {
  return {{"slope", m.slope}, {"intercept", m.intercept}, {"target_transform", to_string(m.target_transform)}};
}

inline VarianceModel variance_model_from_json(const nlohmann::json& j) {
  VarianceModel m;
  m.slope = detail::require_field<double>(j, "slope", "variance model");
  m.intercept = detail::require_field<double>(j, "intercept", "variance model");
  m.target_transform = parse_transform(detail::require_field<std::string>(j, "target_transform", "variance model"));
  if (!std::isfinite(m.slope) || !std::isfinite(m.intercept))
    fail(ErrorCode::SchemaViolation, "variance model coefficients must be finite");
  return m;
}

}  // namespace cyclelife

#pragma once

// Glue between cells and the network: window/augmentation settings, sample
// construction, scaler fitting, target scaling, training and prediction.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cyclelife/dataset.hpp"
#include "cyclelife/features.hpp"
#include "cyclelife/model_io.hpp"
#include "cyclelife/nn.hpp"
#include "cyclelife/optim.hpp"

namespace cyclelife {

struct WindowConfig {
  int start_cycle = 11;
  int terminal_cycle = 80;
  int baseline_cycle = 10;
};

struct AugmentConfig {
  bool enabled = false;
  AugmentOptions options{3, 9, 775.0};
};

// Unscaled samples with targets in cycles. With augmentation enabled each
// eligible cell contributes its shifted windows as well.
inline std::vector<SequenceSample> build_samples(std::span<const CellRecord* const> cells, const WindowConfig& window,
                                                 const AugmentConfig& aug = {}) {
  std::vector<SequenceSample> out;
  for (const CellRecord* cell : cells) {
    if (!aug.enabled) {
      out.push_back(build_sequence(*cell, window.start_cycle, window.terminal_cycle, default_grid(), window.baseline_cycle));
      continue;
    }
    for (const auto& d : augment(*cell, window.start_cycle, window.terminal_cycle, aug.options)) {
      SequenceSample s = build_sequence(*cell, d.start_cycle, d.terminal_cycle, default_grid(), window.baseline_cycle);
      s.target = d.target;
      out.push_back(std::move(s));
    }
  }
  return out;
}

// Standardized features, targets divided by target_scale.
inline std::vector<SequenceSample> prepare_samples(std::vector<SequenceSample> raw, const Scaler& scaler,
                                                   double target_scale) {
  for (auto& s : raw) {
    s = apply_scaler(scaler, std::move(s));
    s.target /= target_scale;
  }
  return raw;
}

struct FitOptions {
  Architecture arch;
  TrainConfig train;
  AdamHyper hyper;
  WindowConfig window;
  AugmentConfig augment;
  double target_scale = 1000.0;
  std::uint64_t init_seed = 0;
};

struct FittedModel {
  ModelArtifact artifact;
  std::vector<EpochStats> history;
};

inline FittedModel fit_lstm(std::span<const CellRecord* const> train_cells, const FitOptions& opt) {
  if (!(opt.target_scale > 0.0)) fail(ErrorCode::InvalidArgument, "target scale must be positive");
  if (train_cells.empty()) fail(ErrorCode::EmptyInput, "no training cells");
  std::vector<SequenceSample> raw = build_samples(train_cells, opt.window, opt.augment);
  FittedModel out;
  out.artifact.scaler = fit_scaler(raw);
  out.artifact.target_scale = opt.target_scale;
  out.artifact.start_cycle = opt.window.start_cycle;
  out.artifact.terminal_cycle = opt.window.terminal_cycle;
  out.artifact.baseline_cycle = opt.window.baseline_cycle;
  const auto samples = prepare_samples(std::move(raw), out.artifact.scaler, opt.target_scale);
  Architecture arch = opt.arch;
  arch.input_size = static_cast<int>(samples.front().features.cols());
  TrainResult trained = train(init_network(arch, opt.init_seed), samples, opt.train, opt.hyper);
  out.artifact.net = std::move(trained.net);
  out.history = std::move(trained.history);
  return out;
}

// Predicted cycle life in cycles, floored at one cycle.
inline double predict_life(const ModelArtifact& model, const CellRecord& cell, int start_cycle, int terminal_cycle) {
  SequenceSample s = build_sequence(cell, start_cycle, terminal_cycle, default_grid(), model.baseline_cycle);
  s = apply_scaler(model.scaler, std::move(s));
  return std::max(1.0, predict(model.net, s.features) * model.target_scale);
}

inline double predict_life(const ModelArtifact& model, const CellRecord& cell) {
  return predict_life(model, cell, model.start_cycle, model.terminal_cycle);
}

}  // namespace cyclelife

#pragma once

// RMSE / MAPE, multi-seed repeat experiments and terminal-cycle sweeps with
// their CSV outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cyclelife/dataset.hpp"
#include "cyclelife/error.hpp"
#include "cyclelife/parallel.hpp"
#include "cyclelife/pipeline.hpp"

namespace cyclelife {

struct PredictionSet {
  std::string split;
  std::vector<double> predicted;  // cycles
  std::vector<double> actual;     // cycles
};

namespace detail {
inline void check_prediction_set(const PredictionSet& p) {
  if (p.predicted.size() != p.actual.size()) fail(ErrorCode::LengthMismatch, "prediction/actual length mismatch");
  if (p.predicted.empty()) fail(ErrorCode::EmptyInput, "empty prediction set '" + p.split + "'");
}
}  // namespace detail

inline double rmse(const PredictionSet& p) {
  detail::check_prediction_set(p);
  double ss = 0.0;
  for (std::size_t i = 0; i < p.actual.size(); ++i) {
    const double d = p.actual[i] - p.predicted[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(p.actual.size()));
}

// Percent; the absolute value of each relative error is taken.
inline double mape(const PredictionSet& p) {
  detail::check_prediction_set(p);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.actual.size(); ++i) {
    if (p.actual[i] == 0.0) fail(ErrorCode::ZeroActual, "actual cycle life of zero in split '" + p.split + "'");
    sum += std::abs(p.actual[i] - p.predicted[i]) / p.actual[i];
  }
  return 100.0 * sum / static_cast<double>(p.actual.size());
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample (N - 1) standard deviation, 0 for one value
};

inline Summary summarize(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "nothing to summarize");
  const auto n = static_cast<double>(values.size());
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

// "mean ± std" with one decimal, as in a results table.
inline std::string format_mean_std(const Summary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", s.mean, s.std);
  return buf;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names{"train", "primary_test", "secondary_test"};
  return names;
}

inline const std::vector<std::string>& split_ids(const DatasetSplit& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "primary_test") return s.primary_test;
  return s.secondary_test;
}

template <typename Predictor>
PredictionSet predict_split(const std::vector<CellRecord>& cells, const DatasetSplit& split, const std::string& name,
                            Predictor&& predictor) {
  PredictionSet p;
  p.split = name;
  for (const CellRecord* c : select_cells(cells, split_ids(split, name))) {
    p.predicted.push_back(predictor(*c));
    p.actual.push_back(static_cast<double>(c->cycle_life));
  }
  return p;
}

struct SplitMetrics {
  std::string split;
  double rmse = 0.0;
  double mape = 0.0;
  bool operator==(const SplitMetrics&) const = default;
};

// RMSE and MAPE for every non-empty split.
template <typename Predictor>
std::vector<SplitMetrics> evaluate_splits(const std::vector<CellRecord>& cells, const DatasetSplit& split,
                                          Predictor&& predictor) {
  std::vector<SplitMetrics> out;
  for (const auto& name : split_names()) {
    if (split_ids(split, name).empty()) continue;
    const PredictionSet p = predict_split(cells, split, name, predictor);
    out.push_back({name, rmse(p), mape(p)});
  }
  return out;
}

inline std::vector<SplitMetrics> evaluate_model(const ModelArtifact& model, const std::vector<CellRecord>& cells,
                                                const DatasetSplit& split) {
  return evaluate_splits(cells, split, [&](const CellRecord& c) { return predict_life(model, c); });
}

// RMSE of predicting the mean training life for every cell of `split_name`.
inline double constant_predictor_rmse(const std::vector<CellRecord>& cells, const DatasetSplit& split,
                                      const std::string& split_name) {
  double mean = 0.0;
  const auto train = select_cells(cells, split.train);
  if (train.empty()) fail(ErrorCode::EmptyInput, "no training cells");
  for (const auto* c : train) mean += c->cycle_life;
  mean /= static_cast<double>(train.size());
  return rmse(predict_split(cells, split, split_name, [&](const CellRecord&) { return mean; }));
}

// ---------------------------------------------------------------------------

struct ExperimentConfig {
  FitOptions fit;  // window.terminal_cycle, augment.enabled and seeds are set per run
  int k = 10;
  std::uint64_t base_seed = 0;
  unsigned seed_threads = 1;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<SplitMetrics> metrics;
};

struct SplitSummary {
  std::string split;
  Summary rmse;
  Summary mape;
};

struct EvalReport {
  int terminal_cycle = 0;
  bool augmented = false;
  int k = 0;
  std::vector<SplitSummary> splits;
  std::vector<SeedRun> runs;  // ordered by seed

  std::string label() const {
    return "terminal=" + std::to_string(terminal_cycle) + ";augment=" + (augmented ? "on" : "off");
  }
};

inline FitOptions seeded_options(const ExperimentConfig& cfg, int terminal_cycle, bool augmented, std::uint64_t seed) {
  FitOptions opt = cfg.fit;
  opt.window.terminal_cycle = terminal_cycle;
  opt.augment.enabled = augmented;
  opt.init_seed = derive_seed(seed, 0x494E4954ULL);
  opt.train.seed = derive_seed(seed, 0x5452414EULL);
  return opt;
}

// One training run evaluated on every non-empty split.
inline SeedRun run_single_seed(const std::vector<CellRecord>& cells, const DatasetSplit& split,
                               const ExperimentConfig& cfg, int terminal_cycle, bool augmented, std::uint64_t seed) {
  const FitOptions opt = seeded_options(cfg, terminal_cycle, augmented, seed);
  const auto train_cells = select_cells(cells, split.train);
  FittedModel fitted;
  try {
    fitted = fit_lstm(train_cells, opt);
  } catch (const Error& e) {
    throw Error(e.code(), e.message() + " [seed " + std::to_string(seed) + ", terminal " +
                              std::to_string(terminal_cycle) + ", augment " + (augmented ? "on" : "off") + "]");
  }
  return {seed, evaluate_model(fitted.artifact, cells, split)};
}

inline EvalReport aggregate_runs(int terminal_cycle, bool augmented, std::vector<SeedRun> runs) {
  if (runs.empty()) fail(ErrorCode::EmptyInput, "no runs to aggregate");
  EvalReport r;
  r.terminal_cycle = terminal_cycle;
  r.augmented = augmented;
  r.k = static_cast<int>(runs.size());
  for (std::size_t s = 0; s < runs.front().metrics.size(); ++s) {
    std::vector<double> rm, mp;
    for (const auto& run : runs) {
      rm.push_back(run.metrics.at(s).rmse);
      mp.push_back(run.metrics.at(s).mape);
    }
    r.splits.push_back({runs.front().metrics[s].split, summarize(rm), summarize(mp)});
  }
  r.runs = std::move(runs);
  return r;
}

inline EvalReport run_experiments(const std::vector<CellRecord>& cells, const DatasetSplit& split,
                                  const ExperimentConfig& cfg, int terminal_cycle, bool augmented) {
  if (cfg.k < 1) fail(ErrorCode::InvalidArgument, "K must be at least 1");
  std::vector<SeedRun> runs(static_cast<std::size_t>(cfg.k));
  parallel_for(runs.size(), cfg.seed_threads, [&](std::size_t i) {
    runs[i] = run_single_seed(cells, split, cfg, terminal_cycle, augmented, cfg.base_seed + i);
  });
  return aggregate_runs(terminal_cycle, augmented, std::move(runs));
}

inline std::vector<int> terminal_range(int first, int last, int step) {
  if (step < 1 || first > last) fail(ErrorCode::InvalidArgument, "terminal cycle range must be increasing with a positive step");
  std::vector<int> out;
  for (int t = first; t <= last; t += step) out.push_back(t);
  return out;
}

inline std::vector<EvalReport> sweep_terminal_cycles(const std::vector<CellRecord>& cells, const DatasetSplit& split,
                                                     const ExperimentConfig& cfg, const std::vector<int>& terminals,
                                                     const std::vector<bool>& augment_flags = {false}) {
  if (terminals.empty()) fail(ErrorCode::InvalidArgument, "no terminal cycles to sweep");
  const int max_terminal = *std::max_element(terminals.begin(), terminals.end());
  for (const auto& name : split_names())
    for (const CellRecord* c : select_cells(cells, split_ids(split, name)))
      if (max_terminal >= c->cycle_life)
        fail(ErrorCode::WindowExceedsLife, "cell '" + c->cell_id + "' has cycle life " + std::to_string(c->cycle_life) +
                                               " <= terminal cycle " + std::to_string(max_terminal));
  std::vector<EvalReport> out;
  for (bool aug : augment_flags)
    for (int t : terminals) out.push_back(run_experiments(cells, split, cfg, t, aug));
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string config_comment(const std::string& config_echo) {
  return config_echo.empty() ? std::string() : "# config: " + config_echo + "\n";
}

// Columns: config,split,metric,mean,std,k
inline std::string metrics_csv(std::span<const EvalReport> reports, const std::string& config_echo = {}) {
  std::ostringstream out;
  out << config_comment(config_echo) << "config,split,metric,mean,std,k\n";
  for (const auto& r : reports)
    for (const auto& s : r.splits) {
      out << r.label() << ',' << s.split << ",rmse," << csv_number(s.rmse.mean) << ',' << csv_number(s.rmse.std) << ','
          << r.k << '\n';
      out << r.label() << ',' << s.split << ",mape," << csv_number(s.mape.mean) << ',' << csv_number(s.mape.std) << ','
          << r.k << '\n';
    }
  return out.str();
}

// Columns: terminal_cycle,split,metric,mean,std
inline std::string plot_csv(std::span<const EvalReport> reports, const std::string& config_echo = {}) {
  std::ostringstream out;
  out << config_comment(config_echo) << "terminal_cycle,split,metric,mean,std\n";
  for (const auto& r : reports)
    for (const auto& s : r.splits) {
      out << r.terminal_cycle << ',' << s.split << ",rmse," << csv_number(s.rmse.mean) << ',' << csv_number(s.rmse.std)
          << '\n';
      out << r.terminal_cycle << ',' << s.split << ",mape," << csv_number(s.mape.mean) << ',' << csv_number(s.mape.std)
          << '\n';
    }
  return out.str();
}

// Columns: epoch,mean_loss,lr
inline std::string history_csv(std::span<const EpochStats> history, const std::string& config_echo = {}) {
  std::ostringstream out;
  out << config_comment(config_echo) << "epoch,mean_loss,lr\n";
  for (const auto& h : history) out << h.epoch << ',' << csv_number(h.mean_loss) << ',' << csv_number(h.lr) << '\n';
  return out.str();
}

}  // namespace cyclelife

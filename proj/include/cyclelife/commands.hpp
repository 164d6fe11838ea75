#pragma once

// CLI subcommands as library functions: synth, train, evaluate, baseline,
// gradcheck and predict. Each takes a RunConfig, writes its outputs under
// RunConfig::out only after all inputs validated, and returns an exit status
// (0 success, 1 validation or tolerance failure, 2 I/O or schema error).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclelife/baseline.hpp"
#include "cyclelife/dataset.hpp"
#include "cyclelife/error.hpp"
#include "cyclelife/eval.hpp"
#include "cyclelife/model_io.hpp"
#include "cyclelife/nn.hpp"
#include "cyclelife/optim.hpp"
#include "cyclelife/pipeline.hpp"

namespace cyclelife {

enum class AugmentMode { off, on, both };

struct RunConfig {
  // paths
  std::string data;
  std::string out = "out";
  std::string model;
  std::string cell;
  std::string csv;
  std::string features_csv;

  std::uint64_t seed = 0;

  // synth
  std::size_t count = 124;
  SynthRanges ranges;
  std::optional<std::vector<std::size_t>> split_counts;

  // model and training
  Architecture arch;
  bool dropout_as_keep_prob = false;
  TrainConfig train;
  AdamHyper hyper;
  WindowConfig window;
  AugmentConfig augment;
  double target_scale = 1000.0;

  // evaluation
  int k = 10;
  std::uint64_t base_seed = 0;
  std::vector<int> terminals{40, 50, 60, 70, 80, 90, 100};
  AugmentMode augment_mode = AugmentMode::off;
  unsigned seed_threads = 1;

  // baseline
  TargetTransform target_transform = TargetTransform::log10;
  int c_hi = 100;
  int c_lo = 10;

  // gradcheck
  int gc_input = 5;
  int gc_hidden1 = 4;
  int gc_hidden2 = 6;
  int gc_steps = 3;
  double gc_eps = 1e-5;
  double gc_tolerance = 1e-4;
  bool gc_corrupt_backward = false;

  // Architecture with the dropout reading applied.
  Architecture effective_arch() const {
    Architecture a = arch;
    if (dropout_as_keep_prob) a.dropout_rate = 1.0 - arch.dropout_rate;
    return a;
  }
};

// ---------------------------------------------------------------------------
// JSON config. Keys are flat; unknown keys are rejected.

inline std::string to_string(AugmentMode m) {
  return m == AugmentMode::on ? "on" : m == AugmentMode::both ? "both" : "off";
}

inline std::vector<int> parse_terminals(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<int>>();
  if (j.is_number_integer()) return {j.get<int>()};
  if (j.is_string()) {
    int a = 0, b = 0, s = 1;
    const std::string text = j.get<std::string>();
    const int n = std::sscanf(text.c_str(), "%d:%d:%d", &a, &b, &s);
    if (n == 1) return {a};
    if (n >= 2) return terminal_range(a, b, s);
  }
  fail(ErrorCode::SchemaViolation, "terminals: expected a list, an integer or 'first:last:step'");
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j{
      {"data", c.data}, {"out", c.out}, {"model", c.model}, {"cell", c.cell}, {"csv", c.csv}, {"features_csv", c.features_csv}, {"seed", c.seed},
      {"count", c.count}, {"life_min", c.ranges.life_min}, {"life_max", c.ranges.life_max},
      {"fade_exponent_min", c.ranges.fade_exponent_min}, {"fade_exponent_max", c.ranges.fade_exponent_max},
      {"midpoint_min", c.ranges.midpoint_min}, {"midpoint_max", c.ranges.midpoint_max},
      {"width_min", c.ranges.width_min}, {"width_max", c.ranges.width_max},
      {"nominal_min", c.ranges.nominal_min}, {"nominal_max", c.ranges.nominal_max},
      {"noise_std", c.ranges.noise_std}, {"cycles_to_emit", c.ranges.cycles_to_emit},
      {"hidden1", c.arch.hidden1}, {"hidden2", c.arch.hidden2}, {"dense_units", c.arch.dense_units},
      {"dropout", c.arch.dropout_rate}, {"dropout_as_keep_prob", c.dropout_as_keep_prob},
      {"dropout_after_lstm1", c.arch.dropout_after_lstm1}, {"dropout_after_lstm2", c.arch.dropout_after_lstm2},
      {"dropout_after_dense1", c.arch.dropout_after_dense1},
      {"epochs", c.train.epochs}, {"batch_size", c.train.batch_size}, {"shuffle", c.train.shuffle},
      {"threads", c.train.threads},
      {"lr", c.hyper.lr0}, {"decay", c.hyper.decay},
      {"decay_clock", c.hyper.decay_clock == DecayClock::step ? "step" : "epoch"},
      {"beta1", c.hyper.beta1}, {"beta2", c.hyper.beta2}, {"adam_eps", c.hyper.eps},
      {"start_cycle", c.window.start_cycle}, {"terminal_cycle", c.window.terminal_cycle},
      {"baseline_cycle", c.window.baseline_cycle},
      {"augment", c.augment.enabled}, {"shift_step", c.augment.options.shift_step},
      {"max_shift", c.augment.options.max_shift}, {"life_threshold", c.augment.options.life_threshold},
      {"target_scale", c.target_scale},
      {"k", c.k}, {"base_seed", c.base_seed}, {"terminals", c.terminals}, {"augment_mode", to_string(c.augment_mode)},
      {"seed_threads", c.seed_threads},
      {"target_transform", to_string(c.target_transform)}, {"c_hi", c.c_hi}, {"c_lo", c.c_lo},
      {"gc_input", c.gc_input}, {"gc_hidden1", c.gc_hidden1}, {"gc_hidden2", c.gc_hidden2}, {"gc_steps", c.gc_steps},
      {"gc_eps", c.gc_eps}, {"gc_tolerance", c.gc_tolerance},
  };
  j["split_counts"] = c.split_counts ? nlohmann::json(*c.split_counts) : nlohmann::json(nullptr);
  return j;
}

inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaViolation, "config must be a JSON object");
  const auto get = [&](const std::string& key, auto& dst) {
    using T = std::decay_t<decltype(dst)>;
    try {
      dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::SchemaViolation, "config key '" + key + "' has the wrong type");
    }
  };
  const std::map<std::string, std::function<void(const std::string&)>> setters{
      {"data", [&](const std::string& k) { get(k, c.data); }},
      {"out", [&](const std::string& k) { get(k, c.out); }},
      {"model", [&](const std::string& k) { get(k, c.model); }},
      {"cell", [&](const std::string& k) { get(k, c.cell); }},
      {"csv", [&](const std::string& k) { get(k, c.csv); }},
      {"features_csv", [&](const std::string& k) { get(k, c.features_csv); }},
      {"seed", [&](const std::string& k) { get(k, c.seed); }},
      {"count", [&](const std::string& k) { get(k, c.count); }},
      {"life_min", [&](const std::string& k) { get(k, c.ranges.life_min); }},
      {"life_max", [&](const std::string& k) { get(k, c.ranges.life_max); }},
      {"fade_exponent_min", [&](const std::string& k) { get(k, c.ranges.fade_exponent_min); }},
      {"fade_exponent_max", [&](const std::string& k) { get(k, c.ranges.fade_exponent_max); }},
      {"midpoint_min", [&](const std::string& k) { get(k, c.ranges.midpoint_min); }},
      {"midpoint_max", [&](const std::string& k) { get(k, c.ranges.midpoint_max); }},
      {"width_min", [&](const std::string& k) { get(k, c.ranges.width_min); }},
      {"width_max", [&](const std::string& k) { get(k, c.ranges.width_max); }},
      {"nominal_min", [&](const std::string& k) { get(k, c.ranges.nominal_min); }},
      {"nominal_max", [&](const std::string& k) { get(k, c.ranges.nominal_max); }},
      {"noise_std", [&](const std::string& k) { get(k, c.ranges.noise_std); }},
      {"cycles_to_emit", [&](const std::string& k) { get(k, c.ranges.cycles_to_emit); }},
      {"split_counts", [&](const std::string& k) {
         if (j.at(k).is_null()) c.split_counts.reset();
         else {
           std::vector<std::size_t> v;
           get(k, v);
           if (v.size() != 3) fail(ErrorCode::SchemaViolation, "split_counts must have three entries");
           c.split_counts = v;
         }
       }},
      {"hidden1", [&](const std::string& k) { get(k, c.arch.hidden1); }},
      {"hidden2", [&](const std::string& k) { get(k, c.arch.hidden2); }},
      {"dense_units", [&](const std::string& k) { get(k, c.arch.dense_units); }},
      {"dropout", [&](const std::string& k) { get(k, c.arch.dropout_rate); }},
      {"dropout_as_keep_prob", [&](const std::string& k) { get(k, c.dropout_as_keep_prob); }},
      {"dropout_after_lstm1", [&](const std::string& k) { get(k, c.arch.dropout_after_lstm1); }},
      {"dropout_after_lstm2", [&](const std::string& k) { get(k, c.arch.dropout_after_lstm2); }},
      {"dropout_after_dense1", [&](const std::string& k) { get(k, c.arch.dropout_after_dense1); }},
      {"epochs", [&](const std::string& k) { get(k, c.train.epochs); }},
      {"batch_size", [&](const std::string& k) { get(k, c.train.batch_size); }},
      {"shuffle", [&](const std::string& k) { get(k, c.train.shuffle); }},
      {"threads", [&](const std::string& k) { get(k, c.train.threads); }},
      {"lr", [&](const std::string& k) { get(k, c.hyper.lr0); }},
      {"decay", [&](const std::string& k) { get(k, c.hyper.decay); }},
      {"decay_clock", [&](const std::string& k) {
         std::string v;
         get(k, v);
         if (v != "step" && v != "epoch") fail(ErrorCode::SchemaViolation, "decay_clock must be 'step' or 'epoch'");
         c.hyper.decay_clock = v == "step" ? DecayClock::step : DecayClock::epoch;
       }},
      {"beta1", [&](const std::string& k) { get(k, c.hyper.beta1); }},
      {"beta2", [&](const std::string& k) { get(k, c.hyper.beta2); }},
      {"adam_eps", [&](const std::string& k) { get(k, c.hyper.eps); }},
      {"start_cycle", [&](const std::string& k) { get(k, c.window.start_cycle); }},
      {"terminal_cycle", [&](const std::string& k) { get(k, c.window.terminal_cycle); }},
      {"baseline_cycle", [&](const std::string& k) { get(k, c.window.baseline_cycle); }},
      {"augment", [&](const std::string& k) { get(k, c.augment.enabled); }},
      {"shift_step", [&](const std::string& k) { get(k, c.augment.options.shift_step); }},
      {"max_shift", [&](const std::string& k) { get(k, c.augment.options.max_shift); }},
      {"life_threshold", [&](const std::string& k) { get(k, c.augment.options.life_threshold); }},
      {"target_scale", [&](const std::string& k) { get(k, c.target_scale); }},
      {"k", [&](const std::string& k) { get(k, c.k); }},
      {"base_seed", [&](const std::string& k) { get(k, c.base_seed); }},
      {"terminals", [&](const std::string& k) { c.terminals = parse_terminals(j.at(k)); }},
      {"augment_mode", [&](const std::string& k) {
         std::string v;
         get(k, v);
         if (v == "off") c.augment_mode = AugmentMode::off;
         else if (v == "on") c.augment_mode = AugmentMode::on;
         else if (v == "both") c.augment_mode = AugmentMode::both;
         else fail(ErrorCode::SchemaViolation, "augment_mode must be off, on or both");
       }},
      {"seed_threads", [&](const std::string& k) { get(k, c.seed_threads); }},
      {"target_transform", [&](const std::string& k) {
         std::string v;
         get(k, v);
         c.target_transform = parse_transform(v);
       }},
      {"c_hi", [&](const std::string& k) { get(k, c.c_hi); }},
      {"c_lo", [&](const std::string& k) { get(k, c.c_lo); }},
      {"gc_input", [&](const std::string& k) { get(k, c.gc_input); }},
      {"gc_hidden1", [&](const std::string& k) { get(k, c.gc_hidden1); }},
      {"gc_hidden2", [&](const std::string& k) { get(k, c.gc_hidden2); }},
      {"gc_steps", [&](const std::string& k) { get(k, c.gc_steps); }},
      {"gc_eps", [&](const std::string& k) { get(k, c.gc_eps); }},
      {"gc_tolerance", [&](const std::string& k) { get(k, c.gc_tolerance); }},
      {"gc_corrupt_backward", [&](const std::string& k) { get(k, c.gc_corrupt_backward); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::SchemaViolation, "unknown config key '" + key + "'");
    it->second(key);
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  apply_config_json(c, detail::read_json_file(path));
  return c;
}

inline std::string config_echo(const RunConfig& c) { return config_to_json(c).dump(); }

// ---------------------------------------------------------------------------

namespace detail {

struct LoadedData {
  std::vector<CellRecord> cells;
  DatasetSplit split;
};

inline LoadedData load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) fail(ErrorCode::MissingFile, "no data manifest given (--data)");
  const Manifest manifest = resolve_manifest(cfg.data);
  LoadedData d;
  d.cells = load_cells(manifest);
  if (manifest.splits) {
    d.split = split_dataset(d.cells, ExplicitSplit{*manifest.splits});
  } else {
    const CountSplit counts = proportional_counts(d.cells.size(), cfg.seed);
    d.split = split_dataset(d.cells, counts);
  }
  return d;
}

inline FitOptions fit_options(const RunConfig& cfg) {
  FitOptions opt;
  opt.arch = cfg.effective_arch();
  opt.train = cfg.train;
  opt.hyper = cfg.hyper;
  opt.window = cfg.window;
  opt.augment = cfg.augment;
  opt.target_scale = cfg.target_scale;
  return opt;
}

inline ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig e;
  e.fit = fit_options(cfg);
  e.k = cfg.k;
  e.base_seed = cfg.base_seed;
  e.seed_threads = cfg.seed_threads;
  return e;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out) / name;
}

}  // namespace detail

// Trains one network the same way a single seed of run_experiments does.
inline FittedModel train_from_config(const RunConfig& cfg, const std::vector<CellRecord>& cells,
                                     const DatasetSplit& split) {
  ExperimentConfig e = detail::experiment_config(cfg);
  const FitOptions opt = seeded_options(e, cfg.window.terminal_cycle, cfg.augment.enabled, cfg.seed);
  return fit_lstm(select_cells(cells, split.train), opt);
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.count < 1) fail(ErrorCode::InvalidArgument, "count must be at least 1");
  const std::vector<CellRecord> cells = synth_cohort(cfg.count, cfg.ranges, cfg.seed);
  CountSplit counts = proportional_counts(cells.size(), cfg.seed);
  if (cfg.split_counts) {
    const auto& v = *cfg.split_counts;
    counts = {v[0], v[1], v[2], cfg.seed};
  }
  Manifest m;
  m.splits = split_dataset(cells, counts);
  for (const auto& c : cells) m.cell_files.push_back("cells/" + c.cell_id + ".json");
  for (std::size_t i = 0; i < cells.size(); ++i) write_cell(cells[i], detail::out_path(cfg, m.cell_files[i]));
  write_manifest(m, detail::out_path(cfg, "manifest.json"));
  log << "wrote " << cells.size() << " cells (" << m.splits->train.size() << "/" << m.splits->primary_test.size() << "/"
      << m.splits->secondary_test.size() << ") to " << cfg.out << "\n";
  return 0;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto data = detail::load_data(cfg);
  const FittedModel fitted = train_from_config(cfg, data.cells, data.split);
  save_model(fitted.artifact, detail::out_path(cfg, "model.bin"));
  detail::write_text_file(detail::out_path(cfg, "history.csv"), history_csv(fitted.history, config_echo(cfg)));
  log << "trained on " << data.split.train.size() << " cells for " << fitted.history.size() << " epochs";
  if (!fitted.history.empty()) log << ", final loss " << csv_number(fitted.history.back().mean_loss);
  log << "\nmodel: " << detail::out_path(cfg, "model.bin").string() << "\n";
  return 0;
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto data = detail::load_data(cfg);
  const std::string echo = config_echo(cfg);
  std::vector<EvalReport> reports;
  if (!cfg.model.empty()) {
    const ModelArtifact model = load_model(cfg.model);
    reports.push_back(aggregate_runs(model.terminal_cycle, false, {SeedRun{0, evaluate_model(model, data.cells, data.split)}}));
    detail::write_text_file(detail::out_path(cfg, "metrics.csv"), metrics_csv(reports, echo));
  } else {
    std::vector<bool> flags;
    if (cfg.augment_mode != AugmentMode::on) flags.push_back(false);
    if (cfg.augment_mode != AugmentMode::off) flags.push_back(true);
    reports = sweep_terminal_cycles(data.cells, data.split, detail::experiment_config(cfg), cfg.terminals, flags);
    detail::write_text_file(detail::out_path(cfg, "metrics.csv"), metrics_csv(reports, echo));
    const std::size_t per_flag = cfg.terminals.size();
    for (std::size_t f = 0; f < flags.size(); ++f) {
      const std::span<const EvalReport> part(reports.data() + f * per_flag, per_flag);
      const std::string name = flags.size() == 1 ? "plot.csv" : (flags[f] ? "plot_aug.csv" : "plot_noaug.csv");
      detail::write_text_file(detail::out_path(cfg, name), plot_csv(part, echo));
    }
  }
  for (const auto& r : reports) {
    log << r.label() << " (k=" << r.k << ")";
    for (const auto& s : r.splits)
      log << "  " << s.split << ": RMSE " << format_mean_std(s.rmse) << ", MAPE " << format_mean_std(s.mape) << "%";
    log << "\n";
  }
  return 0;
}

inline int cmd_baseline(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto data = detail::load_data(cfg);
  std::vector<std::string> missing;
  for (const auto& c : data.cells)
    if (!c.has_cycle(cfg.c_hi) || !c.has_cycle(cfg.c_lo)) missing.push_back(c.cell_id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    fail(ErrorCode::MissingCycle, "cells lacking cycle " + std::to_string(cfg.c_lo) + " or " +
                                      std::to_string(cfg.c_hi) + ": " + list);
  }
  const auto train_cells = select_cells(data.cells, data.split.train);
  const VarianceModel model = fit_variance_model(train_cells, default_grid(), cfg.target_transform, cfg.c_hi, cfg.c_lo);
  const auto metrics = evaluate_splits(data.cells, data.split, [&](const CellRecord& c) {
    return predict_variance_model(model, c, default_grid(), cfg.c_hi, cfg.c_lo);
  });
  const EvalReport report = aggregate_runs(cfg.c_hi, false, {SeedRun{0, metrics}});
  detail::write_text_file(detail::out_path(cfg, "baseline.json"), to_json(model).dump(2) + "\n");
  detail::write_text_file(detail::out_path(cfg, "baseline_metrics.csv"),
                          metrics_csv(std::span<const EvalReport>(&report, 1), config_echo(cfg)));
  log << "variance model: slope " << csv_number(model.slope) << ", intercept " << csv_number(model.intercept) << " ("
      << to_string(model.target_transform) << ")\n";
  for (const auto& m : metrics) log << "  " << m.split << ": RMSE " << m.rmse << ", MAPE " << m.mape << "%\n";
  return 0;
}

struct GradCheckRun {
  GradCheckResult result;
  bool passed = false;
};

inline GradCheckRun run_gradcheck(const RunConfig& cfg) {
  Architecture arch;
  arch.input_size = cfg.gc_input;
  arch.hidden1 = cfg.gc_hidden1;
  arch.hidden2 = cfg.gc_hidden2;
  arch.dense_units = cfg.arch.dense_units;
  arch.dropout_rate = cfg.effective_arch().dropout_rate;
  if (cfg.gc_steps < 1) fail(ErrorCode::InvalidArgument, "gc_steps must be positive");
  const Network net = init_network(arch, cfg.seed);
  Rng rng(derive_seed(cfg.seed, 0x4743ULL));
  Matrix x(cfg.gc_steps, cfg.gc_input);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  const double target = rng.normal();
  const DropoutMasks masks = DropoutMasks::sample(arch, x.rows(), rng);
  std::function<void(Gradients&)> tamper;
  if (cfg.gc_corrupt_backward) tamper = [](Gradients& g) { g.lstm1.recurrent_weights.array() += 0.5; };
  GradCheckRun run;
  run.result = grad_check(net, x, target, masks, cfg.gc_eps, tamper);
  run.passed = run.result.max_relative_error < cfg.gc_tolerance;
  return run;
}

inline int cmd_gradcheck(const RunConfig& cfg, std::ostream& log = std::cout) {
  const GradCheckRun run = run_gradcheck(cfg);
  log << "max relative error " << csv_number(run.result.max_relative_error) << " at " << run.result.worst_tensor << "["
      << run.result.worst_index << "] (analytic " << csv_number(run.result.worst_analytic) << ", numeric "
      << csv_number(run.result.worst_numeric) << "), " << run.result.checked << " parameters checked\n";
  log << (run.passed ? "PASS" : "FAIL") << " (tolerance " << cfg.gc_tolerance << ")\n";
  return run.passed ? 0 : 1;
}

// Unscaled ΔQ rows, one per cycle; columns follow the voltage grid.
inline std::string features_csv(const SequenceSample& sample, const VoltageGrid& grid, const std::string& echo = {}) {
  std::ostringstream out;
  out << config_comment(echo) << "cycle";
  for (double v : grid.points) {
    char name[16];
    std::snprintf(name, sizeof name, ",dq_%.2f", v);
    out << name;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < sample.features.rows(); ++r) {
    out << sample.cycles[static_cast<std::size_t>(r)];
    for (Eigen::Index k = 0; k < sample.features.cols(); ++k) out << ',' << csv_number(sample.features(r, k));
    out << '\n';
  }
  return out.str();
}

// Window flags default to the window stored in the artifact.
inline int cmd_predict(const RunConfig& cfg, std::optional<int> start, std::optional<int> terminal,
                       std::ostream& log = std::cout) {
  if (cfg.model.empty()) fail(ErrorCode::MissingFile, "no model artifact given (--model)");
  if (cfg.cell.empty()) fail(ErrorCode::MissingFile, "no cell file given (--cell)");
  const ModelArtifact model = load_model(cfg.model);
  const CellRecord cell = read_cell(cfg.cell);
  const int s = start.value_or(model.start_cycle);
  const int t = terminal.value_or(model.terminal_cycle);
  const double life = predict_life(model, cell, s, t);
  log << csv_number(life) << "\n";
  if (!cfg.csv.empty()) {
    detail::write_text_file(cfg.csv, config_comment(config_echo(cfg)) +
                                         "cell_id,start_cycle,terminal_cycle,predicted_cycle_life\n" + cell.cell_id +
                                         "," + std::to_string(s) + "," + std::to_string(t) + "," + csv_number(life) + "\n");
  }
  if (!cfg.features_csv.empty()) {
    const SequenceSample sample = build_sequence(cell, s, t, default_grid(), model.baseline_cycle);
    detail::write_text_file(cfg.features_csv, features_csv(sample, default_grid(), config_echo(cfg)));
  }
  return 0;
}

// Runs `body`, mapping library errors to exit statuses.
inline int guarded(const std::function<int()>& body, std::ostream& err = std::cerr) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_io() ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cyclelife

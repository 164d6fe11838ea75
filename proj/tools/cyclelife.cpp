// cyclelife: synthetic data generation, training, evaluation sweeps, the
// variance baseline, gradient checking and single-cell prediction.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyclelife/commands.hpp"

namespace {

using cyclelife::RunConfig;

// Flag values are kept as text and merged into the config JSON after parsing,
// so flags and config files share one set of keys and validation rules.
struct Overrides {
  std::map<std::string, std::string> values;  // config key -> raw text
  std::map<std::string, bool> switches;        // config key -> flag given
  std::vector<std::string> sets;               // --set key=value

  void option(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, values[key], help);
  }

  CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    return app->add_flag(flag, switches[key], help);
  }

  static nlohmann::json parse_value(const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      return text;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw cyclelife::Error(cyclelife::ErrorCode::SchemaViolation, "--set expects key=value");
      j[s.substr(0, eq)] = parse_value(s.substr(eq + 1));
    }
    for (const auto& [key, text] : values)
      if (!text.empty()) j[key] = key == "split_counts" ? parse_value("[" + text + "]") : parse_value(text);
    for (const auto& [key, on] : switches)
      if (on) j[key] = true;
    return j;
  }
};

void add_training_flags(CLI::App* sub, Overrides& o) {
  o.option(sub, "--epochs", "epochs", "Training epochs");
  o.option(sub, "--batch-size", "batch_size", "Mini-batch size");
  o.option(sub, "--lr", "lr", "Adam learning rate");
  o.option(sub, "--decay", "decay", "Learning-rate decay per step");
  o.option(sub, "--hidden1", "hidden1", "Units in the first LSTM layer");
  o.option(sub, "--hidden2", "hidden2", "Units in the second LSTM layer");
  o.option(sub, "--dropout", "dropout", "Dropout rate");
  o.flag(sub, "--dropout-as-keep-prob", "dropout_as_keep_prob", "Read --dropout as a keep probability");
  o.option(sub, "--start", "start_cycle", "First cycle of the input window");
  o.option(sub, "--terminal", "terminal_cycle", "Last cycle of the input window");
  o.option(sub, "--baseline-cycle", "baseline_cycle", "Cycle subtracted from every row");
  o.flag(sub, "--augment", "augment", "Add shifted windows of long-lived cells");
  o.option(sub, "--max-shift", "max_shift", "Largest augmentation shift in cycles");
  o.option(sub, "--target-scale", "target_scale", "Cycle-life divisor used during training");
  o.option(sub, "--threads", "threads", "Worker threads per batch (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early cycle-life prediction with a two-layer LSTM"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::optional<int> predict_start, predict_terminal;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    o.option(sub, "--seed", "seed", "Random seed");
    o.option(sub, "--out", "out", "Output directory");
    o.option(sub, "--data", "data", "Data manifest or directory of cell files");
    sub->add_option("--set", o.sets, "Override any config key (key=value)");
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic cells and a split manifest");
  common(synth);
  o.option(synth, "--count", "count", "Number of cells");
  o.option(synth, "--noise-std", "noise_std", "Capacity noise std in Ah");
  o.option(synth, "--life-min", "life_min", "Smallest cycle life");
  o.option(synth, "--life-max", "life_max", "Largest cycle life");
  o.option(synth, "--cycles", "cycles_to_emit", "Cycles emitted per cell");
  o.option(synth, "--split-counts", "split_counts", "train,primary,secondary cell counts");

  auto* train = app.add_subcommand("train", "Train one network and save the model artifact");
  common(train);
  add_training_flags(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate an artifact or run a terminal-cycle sweep");
  common(evaluate);
  add_training_flags(evaluate, o);
  o.option(evaluate, "--model", "model", "Model artifact to evaluate (skips the sweep)");
  o.option(evaluate, "--terminals", "terminals", "Terminal cycles, e.g. 40:100:10");
  o.option(evaluate, "--k", "k", "Repeats per configuration");
  o.option(evaluate, "--base-seed", "base_seed", "Seed of the first repeat");
  o.option(evaluate, "--augment-mode", "augment_mode", "off, on or both");
  o.option(evaluate, "--seed-threads", "seed_threads", "Repeats run concurrently");

  auto* baseline = app.add_subcommand("baseline", "Fit the log-variance linear model");
  common(baseline);
  o.option(baseline, "--c-hi", "c_hi", "Later cycle of the variance feature");
  o.option(baseline, "--c-lo", "c_lo", "Earlier cycle of the variance feature");
  o.option(baseline, "--transform", "target_transform", "log10 or identity");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backpropagated gradients with finite differences");
  common(gradcheck);
  o.option(gradcheck, "--input", "gc_input", "Input width");
  o.option(gradcheck, "--hidden1", "gc_hidden1", "First LSTM width");
  o.option(gradcheck, "--hidden2", "gc_hidden2", "Second LSTM width");
  o.option(gradcheck, "--steps", "gc_steps", "Sequence length");
  o.option(gradcheck, "--eps", "gc_eps", "Finite-difference step");
  o.option(gradcheck, "--tolerance", "gc_tolerance", "Maximum accepted relative error");
  o.flag(gradcheck, "--corrupt-backward", "gc_corrupt_backward", "")->group("");

  auto* predict = app.add_subcommand("predict", "Predict the cycle life of one cell");
  common(predict);
  o.option(predict, "--model", "model", "Model artifact");
  o.option(predict, "--cell", "cell", "Cell JSON file");
  o.option(predict, "--csv", "csv", "Also write the prediction to this CSV");
  o.option(predict, "--features-csv", "features_csv", "Write the unscaled input sequence to this CSV");
  predict->add_option("--start", predict_start, "First cycle (default: from the artifact)");
  predict->add_option("--terminal", predict_terminal, "Last cycle (default: from the artifact)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  return cyclelife::guarded([&] {
    RunConfig cfg = config_path.empty() ? RunConfig{} : cyclelife::load_run_config(config_path);
    cyclelife::apply_config_json(cfg, o.to_json());
    if (synth->parsed()) return cyclelife::cmd_synth(cfg);
    if (train->parsed()) return cyclelife::cmd_train(cfg);
    if (evaluate->parsed()) return cyclelife::cmd_evaluate(cfg);
    if (baseline->parsed()) return cyclelife::cmd_baseline(cfg);
    if (gradcheck->parsed()) return cyclelife::cmd_gradcheck(cfg);
    return cyclelife::cmd_predict(cfg, predict_start, predict_terminal);
  });
}

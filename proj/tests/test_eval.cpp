#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cyclelife/eval.hpp"
#include "test_support.hpp"

using namespace cyclelife;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

PredictionSet make(std::vector<double> predicted, std::vector<double> actual) {
  return {"test", std::move(predicted), std::move(actual)};
}

struct SmallStudy {
  std::vector<CellRecord> cells;
  DatasetSplit split;
  ExperimentConfig cfg;

  SmallStudy() {
    SynthRanges r;
    r.life_min = 300;
    r.life_max = 1500;
    cells = synth_cohort(9, r, 21);
    split = split_dataset(cells, CountSplit{4, 3, 2, 5});
    cfg.fit.arch.hidden1 = 4;
    cfg.fit.arch.hidden2 = 4;
    cfg.fit.arch.dense_units = 4;
    cfg.fit.window.start_cycle = 11;
    cfg.fit.train.epochs = 3;
    cfg.fit.train.batch_size = 4;
    cfg.k = 3;
    cfg.base_seed = 40;
  }
};

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  return rows - 1;  // header
}

}  // namespace

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse(make({100, 200}, {110, 190})), 10.0);
  EXPECT_EQ(rmse(make({5}, {2})), 3.0);
  EXPECT_EQ(rmse(make({1, 2, 3}, {1, 2, 3})), 0.0);
  EXPECT_EQ(code_of([] { rmse(make({}, {})); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { rmse(make({1}, {1, 2})); }), ErrorCode::LengthMismatch);
}

TEST(Rmse, TranslationLeavesItUnchanged) {
  Rng rng(2);
  std::vector<double> p, a;
  for (int k = 0; k < 30; ++k) {
    p.push_back(static_cast<double>(rng.below(2000)));
    a.push_back(static_cast<double>(rng.below(2000) + 1));
  }
  std::vector<double> p2 = p, a2 = a;
  for (auto& v : p2) v += 256.0;
  for (auto& v : a2) v += 256.0;
  EXPECT_EQ(rmse(make(p2, a2)), rmse(make(p, a)));
  EXPECT_GT(rmse(make(p, a)), 0.0);
}

TEST(Mape, Examples) {
  EXPECT_EQ(mape(make({90}, {100})), 10.0);
  EXPECT_EQ(mape(make({110, 90}, {100, 100})), 10.0);
  EXPECT_EQ(mape(make({7, 8}, {7, 8})), 0.0);
  EXPECT_EQ(code_of([] { mape(make({1}, {0})); }), ErrorCode::ZeroActual);
  EXPECT_EQ(code_of([] { mape(make({}, {})); }), ErrorCode::EmptyInput);
}

TEST(Mape, ScaleInvariant) {
  Rng rng(5);
  std::vector<double> p, a;
  for (int k = 0; k < 25; ++k) {
    p.push_back(rng.uniform(100, 2000));
    a.push_back(rng.uniform(100, 2000));
  }
  for (double c : {0.001, 3.0, 1e4}) {
    std::vector<double> p2 = p, a2 = a;
    for (auto& v : p2) v *= c;
    for (auto& v : a2) v *= c;
    EXPECT_NEAR(mape(make(p2, a2)), mape(make(p, a)), 1e-12);
  }
}

TEST(Summary, SampleStdAndFormatting) {
  const std::vector<double> v{3, 4, 5};
  const Summary s = summarize(v);
  EXPECT_EQ(s.mean, 4.0);
  EXPECT_EQ(s.std, 1.0);
  EXPECT_EQ(summarize(std::vector<double>{87.7}).std, 0.0);
  EXPECT_EQ(format_mean_std({87.7, 6.0}), "87.7 ± 6.0");
}

TEST(AggregateRuns, InjectedPerSeedMetrics) {
  std::vector<SeedRun> runs;
  for (double r : {3.0, 4.0, 5.0}) runs.push_back({static_cast<std::uint64_t>(r), {{"primary_test", r, 2.0 * r}}});
  const EvalReport rep = aggregate_runs(80, true, runs);
  ASSERT_EQ(rep.splits.size(), 1u);
  EXPECT_EQ(rep.k, 3);
  EXPECT_EQ(rep.splits[0].rmse.mean, 4.0);
  EXPECT_EQ(rep.splits[0].rmse.std, 1.0);
  EXPECT_EQ(rep.splits[0].mape.mean, 8.0);
  EXPECT_EQ(rep.label(), "terminal=80;augment=on");
  const EvalReport one = aggregate_runs(40, false, {runs[1]});
  EXPECT_EQ(one.splits[0].rmse.std, 0.0);
  EXPECT_EQ(one.splits[0].mape.std, 0.0);
}

TEST(RunExperiments, KOneHasZeroStdAndSeedsMatchSingleRuns) {
  SmallStudy s;
  const EvalReport rep = run_experiments(s.cells, s.split, s.cfg, 40, false);
  ASSERT_EQ(rep.runs.size(), 3u);
  EXPECT_EQ(rep.splits.size(), 3u);
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    EXPECT_EQ(rep.runs[i].seed, s.cfg.base_seed + i);
    const SeedRun single = run_single_seed(s.cells, s.split, s.cfg, 40, false, s.cfg.base_seed + i);
    EXPECT_EQ(single.metrics, rep.runs[i].metrics);
  }
  s.cfg.k = 1;
  for (const auto& sp : run_experiments(s.cells, s.split, s.cfg, 40, false).splits) {
    EXPECT_EQ(sp.rmse.std, 0.0);
    EXPECT_EQ(sp.mape.std, 0.0);
  }
}

TEST(RunExperiments, ConcurrentSeedsGiveIdenticalReports) {
  SmallStudy s;
  const EvalReport serial = run_experiments(s.cells, s.split, s.cfg, 30, true);
  s.cfg.seed_threads = 3;
  const EvalReport parallel = run_experiments(s.cells, s.split, s.cfg, 30, true);
  ASSERT_EQ(serial.runs.size(), parallel.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) EXPECT_EQ(serial.runs[i].metrics, parallel.runs[i].metrics);
}

TEST(RunExperiments, TrainingErrorsNameTheSeed) {
  SmallStudy s;
  s.cfg.fit.hyper.lr0 = -1.0;
  try {
    run_experiments(s.cells, s.split, s.cfg, 40, false);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(e.message().find("seed 40"), std::string::npos);
    EXPECT_NE(e.message().find("terminal 40"), std::string::npos);
  }
  s.cfg.fit.hyper.lr0 = 1e-3;
  s.cfg.k = 0;
  EXPECT_EQ(code_of([&] { run_experiments(s.cells, s.split, s.cfg, 40, false); }), ErrorCode::InvalidArgument);
}

TEST(Sweep, ReportCountsAndCsvRows) {
  SmallStudy s;
  s.cfg.k = 1;
  s.cfg.fit.train.epochs = 1;
  EXPECT_EQ(terminal_range(40, 100, 20), (std::vector<int>{40, 60, 80, 100}));
  EXPECT_EQ(terminal_range(60, 60, 10), std::vector<int>{60});
  EXPECT_EQ(terminal_range(40, 100, 10).size(), 7u);

  const auto single = sweep_terminal_cycles(s.cells, s.split, s.cfg, {60});
  ASSERT_EQ(single.size(), 1u);
  const EvalReport direct = run_experiments(s.cells, s.split, s.cfg, 60, false);
  EXPECT_EQ(single[0].runs[0].metrics, direct.runs[0].metrics);

  const auto terminals = terminal_range(40, 100, 20);
  const auto reports = sweep_terminal_cycles(s.cells, s.split, s.cfg, terminals, {false, true});
  ASSERT_EQ(reports.size(), 8u);
  EXPECT_EQ(reports[0].terminal_cycle, 40);
  EXPECT_TRUE(reports[7].augmented);
  const std::string plot = plot_csv(std::span<const EvalReport>(reports.data(), 4), "{}");
  EXPECT_EQ(data_rows(plot), 4u * 3u * 2u);
  EXPECT_EQ(plot.rfind("# config: {}\nterminal_cycle,split,metric,mean,std\n", 0), 0u);
  const std::string metrics = metrics_csv(reports);
  EXPECT_EQ(data_rows(metrics), 8u * 3u * 2u);
  EXPECT_EQ(metrics.rfind("config,split,metric,mean,std,k\n", 0), 0u);
}

TEST(Sweep, TerminalBeyondLifeIsRejectedUpFront) {
  SmallStudy s;
  int shortest = 1 << 30;
  for (const auto& c : s.cells) shortest = std::min(shortest, c.cycle_life);
  try {
    sweep_terminal_cycles(s.cells, s.split, s.cfg, {40, shortest});
    FAIL() << "expected WindowExceedsLife";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WindowExceedsLife);
  }
}

TEST(ConstantPredictor, UsesMeanTrainingLife) {
  SmallStudy s;
  double mean = 0.0;
  for (const auto* c : select_cells(s.cells, s.split.train)) mean += c->cycle_life;
  mean /= static_cast<double>(s.split.train.size());
  double ss = 0.0;
  for (const auto* c : select_cells(s.cells, s.split.primary_test)) ss += (c->cycle_life - mean) * (c->cycle_life - mean);
  EXPECT_NEAR(constant_predictor_rmse(s.cells, s.split, "primary_test"), std::sqrt(ss / 3.0), 1e-9);
}

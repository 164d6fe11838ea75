#pragma once

// Adam with step-count learning-rate decay, seeded mini-batching and the
// epoch training loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cyclelife/error.hpp"
#include "cyclelife/features.hpp"
#include "cyclelife/nn.hpp"
#include "cyclelife/parallel.hpp"
#include "cyclelife/random.hpp"

namespace cyclelife {

enum class DecayClock { step, epoch };

struct AdamHyper {
  double lr0 = 1e-3;
  double decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  DecayClock decay_clock = DecayClock::step;
};

inline void validate_hyper(const AdamHyper& h) {
  if (!(h.lr0 > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0) || !(h.beta2 >= 0.0 && h.beta2 < 1.0))
    fail(ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  if (!(h.eps > 0.0)) fail(ErrorCode::InvalidArgument, "Adam eps must be positive");
  if (!(h.decay >= 0.0)) fail(ErrorCode::InvalidArgument, "decay must be non-negative");
}

struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t t = 0;       // optimizer steps taken
  std::uint64_t epochs = 0;  // completed epochs, used by DecayClock::epoch
};

inline AdamState make_adam_state(const Network& net) {
  return {zero_gradients(net), zero_gradients(net), 0, 0};
}

// lr_t = lr0 / (1 + decay * clock)
inline double learning_rate(const AdamHyper& h, std::uint64_t clock) {
  return h.lr0 / (1.0 + h.decay * static_cast<double>(clock));
}

inline double current_learning_rate(const AdamHyper& h, const AdamState& s) {
  return learning_rate(h, h.decay_clock == DecayClock::step ? s.t : s.epochs + 1);
}

inline void adam_step(Network& net, const Gradients& grads, AdamState& state, const AdamHyper& hyper) {
  bool shapes_ok = true;
  bool finite = true;
  for_each_tensor_pair(net, grads, [&](std::string_view, const auto& p, const auto& g) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) shapes_ok = false;
    else if (!g.allFinite()) finite = false;
  });
  for_each_tensor_pair(net, state.m, [&](std::string_view, const auto& p, const auto& m) {
    if (p.rows() != m.rows() || p.cols() != m.cols()) shapes_ok = false;
  });
  if (!shapes_ok) fail(ErrorCode::ShapeMismatch, "gradients or optimizer state do not match the network");
  if (!finite) fail(ErrorCode::NonFiniteGradient, "gradient contains NaN or infinity");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double lr = current_learning_rate(hyper, state);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);

  // Tensors are visited as flat arrays in storage order.
  Gradients& m = state.m;
  Gradients& v = state.v;
  std::vector<double*> pm, pv;
  for_each_tensor(m, [&](std::string_view, auto& x) { pm.push_back(x.data()); });
  for_each_tensor(v, [&](std::string_view, auto& x) { pv.push_back(x.data()); });
  std::size_t idx = 0;
  for_each_tensor_pair(net, grads, [&](std::string_view, auto& p, const auto& g) {
    double* mi = pm[idx];
    double* vi = pv[idx];
    ++idx;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double gk = g.data()[k];
      mi[k] = hyper.beta1 * mi[k] + (1.0 - hyper.beta1) * gk;
      vi[k] = hyper.beta2 * vi[k] + (1.0 - hyper.beta2) * gk * gk;
      const double m_hat = mi[k] / c1;
      const double v_hat = vi[k] / c2;
      p.data()[k] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  });
  ++net.revision;
}

// ---------------------------------------------------------------------------

using Batch = std::vector<std::size_t>;

inline std::vector<Batch> make_batches(std::size_t sample_count, std::size_t batch_size, Rng& rng, bool shuffle = true) {
  if (sample_count == 0) fail(ErrorCode::EmptyInput, "no samples to batch");
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) rng.shuffle(std::span<std::size_t>(order));
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < sample_count; begin += batch_size) {
    const std::size_t end = std::min(sample_count, begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t batch_size = 128;
  int epochs = 500;
  std::uint64_t seed = 0;
  bool shuffle = true;
  unsigned threads = 1;  // 0 = hardware concurrency; results do not depend on it
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochStats> history;
};

namespace detail {

// Per-sample gradients are summed inside fixed-size chunks and the chunks are
// then reduced in order, so the batch gradient is independent of worker count.
inline constexpr std::size_t kReductionChunk = 8;

inline void add_gradients(Gradients& into, const Gradients& from) {
  for_each_tensor_pair(into, from, [](std::string_view, auto& a, const auto& b) { a += b; });
}

}  // namespace detail

// `samples` carry standardized features and scaled targets.
inline TrainResult train(Network net, std::span<const SequenceSample> samples, const TrainConfig& config,
                         const AdamHyper& hyper) {
  validate_hyper(hyper);
  if (config.epochs < 0) fail(ErrorCode::InvalidArgument, "epochs must be non-negative");
  if (config.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  TrainResult result;
  if (config.epochs == 0) {
    result.net = std::move(net);
    return result;
  }
  if (samples.empty()) fail(ErrorCode::EmptyInput, "no training samples");
  for (const auto& s : samples)
    if (s.features.cols() != net.arch.input_size)
      fail(ErrorCode::ShapeMismatch, "sample '" + s.cell_id + "' has feature width " + std::to_string(s.features.cols()));

  AdamState state = make_adam_state(net);
  Rng shuffler(derive_seed(config.seed, 0x5348554646ULL));
  const std::size_t max_chunks = (std::min(config.batch_size, samples.size()) + detail::kReductionChunk - 1) /
                                 detail::kReductionChunk;
  std::vector<Gradients> chunk_grads(max_chunks, zero_gradients(net));
  std::vector<double> sq_err(samples.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(samples.size(), config.batch_size, shuffler, config.shuffle);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      const double scale = 2.0 / static_cast<double>(batch.size());
      const std::size_t chunks = (batch.size() + detail::kReductionChunk - 1) / detail::kReductionChunk;
      const std::uint64_t step = state.t;
      parallel_for(chunks, config.threads, [&](std::size_t c) {
        Gradients& g = chunk_grads[c];
        for_each_tensor(g, [](std::string_view, auto& t) { t.setZero(); });
        const std::size_t end = std::min(batch.size(), (c + 1) * detail::kReductionChunk);
        for (std::size_t j = c * detail::kReductionChunk; j < end; ++j) {
          const std::size_t idx = batch[j];
          Rng dropout_rng(derive_seed(config.seed, step, idx));
          const ForwardResult fwd = network_forward(net, samples[idx].features, Mode::train, &dropout_rng);
          const double err = fwd.prediction - samples[idx].target;
          sq_err[idx] = err * err;
          network_backward(net, *fwd.cache, scale * err, g);
        }
      });
      double batch_loss = 0.0;
      for (std::size_t idx : batch) batch_loss += sq_err[idx];
      if (!std::isfinite(batch_loss))
        fail(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      epoch_loss += batch_loss;
      for (std::size_t c = 1; c < chunks; ++c) detail::add_gradients(chunk_grads[0], chunk_grads[c]);
      adam_step(net, chunk_grads[0], state, hyper);
    }
    result.history.push_back({epoch, epoch_loss / static_cast<double>(samples.size()), current_learning_rate(hyper, state)});
    ++state.epochs;
  }
  result.net = std::move(net);
  return result;
}

}  // namespace cyclelife

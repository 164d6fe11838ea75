#pragma once

// Two-layer LSTM regressor (LSTM -> LSTM -> dense/relu -> dense/linear) with
// inverted dropout, MSE loss, exact reverse-mode gradients through time and a
// central finite-difference gradient checker.
//
// LSTM cell, gate block order [i, f, g, o]:
//   a_t = W x_t + U h_{t-1} + b
//   i, f, o = sigmoid(a_i, a_f, a_o);  g = tanh(a_g)
//   c_t = f * c_{t-1} + i * g
//   h_t = o * tanh(c_t)

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cyclelife/error.hpp"
#include "cyclelife/random.hpp"

namespace cyclelife {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Architecture {
  int input_size = 151;
  int hidden1 = 64;
  int hidden2 = 128;
  int dense_units = 32;
  double dropout_rate = 0.2;
  bool dropout_after_lstm1 = true;
  bool dropout_after_lstm2 = true;
  bool dropout_after_dense1 = true;

  bool operator==(const Architecture&) const = default;
};

inline void validate_architecture(const Architecture& a) {
  if (a.input_size < 1 || a.hidden1 < 1 || a.hidden2 < 1 || a.dense_units < 1)
    fail(ErrorCode::InvalidArchitecture, "layer sizes must be positive");
  if (!(a.dropout_rate >= 0.0 && a.dropout_rate < 1.0))
    fail(ErrorCode::InvalidArchitecture, "dropout rate must lie in [0, 1)");
}

struct LstmLayerParams {
  Matrix input_weights;      // 4H x D
  Matrix recurrent_weights;  // 4H x H
  Vector bias;               // 4H

  Eigen::Index input_size() const { return input_weights.cols(); }
  Eigen::Index hidden_size() const { return recurrent_weights.cols(); }
};

enum class Activation { relu, identity };

struct DenseLayerParams {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::identity;
};

struct Network {
  Architecture arch;
  LstmLayerParams lstm1;
  LstmLayerParams lstm2;
  DenseLayerParams dense1;
  DenseLayerParams dense2;
  // Bumped on every parameter update; forward caches record it.
  std::uint64_t revision = 0;
};

// Same tensor layout as Network, holding d(loss)/d(parameter).
struct Gradients {
  LstmLayerParams lstm1;
  LstmLayerParams lstm2;
  DenseLayerParams dense1;
  DenseLayerParams dense2;
};

// Visits every parameter tensor in a fixed order: fn(name, tensor).
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn("lstm1.input_weights", p.lstm1.input_weights);
  fn("lstm1.recurrent_weights", p.lstm1.recurrent_weights);
  fn("lstm1.bias", p.lstm1.bias);
  fn("lstm2.input_weights", p.lstm2.input_weights);
  fn("lstm2.recurrent_weights", p.lstm2.recurrent_weights);
  fn("lstm2.bias", p.lstm2.bias);
  fn("dense1.weights", p.dense1.weights);
  fn("dense1.bias", p.dense1.bias);
  fn("dense2.weights", p.dense2.weights);
  fn("dense2.bias", p.dense2.bias);
}

// Visits matching tensors of two congruent parameter sets: fn(name, a, b).
template <typename A, typename B, typename Fn>
void for_each_tensor_pair(A& a, B& b, Fn&& fn) {
  fn("lstm1.input_weights", a.lstm1.input_weights, b.lstm1.input_weights);
  fn("lstm1.recurrent_weights", a.lstm1.recurrent_weights, b.lstm1.recurrent_weights);
  fn("lstm1.bias", a.lstm1.bias, b.lstm1.bias);
  fn("lstm2.input_weights", a.lstm2.input_weights, b.lstm2.input_weights);
  fn("lstm2.recurrent_weights", a.lstm2.recurrent_weights, b.lstm2.recurrent_weights);
  fn("lstm2.bias", a.lstm2.bias, b.lstm2.bias);
  fn("dense1.weights", a.dense1.weights, b.dense1.weights);
  fn("dense1.bias", a.dense1.bias, b.dense1.bias);
  fn("dense2.weights", a.dense2.weights, b.dense2.weights);
  fn("dense2.bias", a.dense2.bias, b.dense2.bias);
}

inline Gradients zero_gradients(const Network& net) {
  Gradients g;
  for_each_tensor_pair(g, net, [](std::string_view, auto& dst, const auto& src) {
    dst.setZero(src.rows(), src.cols());
  });
  g.dense1.activation = net.dense1.activation;
  g.dense2.activation = net.dense2.activation;
  return g;
}

inline std::size_t parameter_count(const Network& net) {
  std::size_t n = 0;
  for_each_tensor(net, [&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

// ---------------------------------------------------------------------------
// Initialization: uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases
// except the LSTM forget-gate slice which starts at 1.

namespace detail {

inline void glorot_uniform(Matrix& m, Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  m.resize(rows, cols);
  // Row-major fill order so the draw sequence matches the artifact layout.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
}

inline LstmLayerParams init_lstm(int input, int hidden, Rng& rng) {
  LstmLayerParams p;
  glorot_uniform(p.input_weights, 4 * hidden, input, input, hidden, rng);
  glorot_uniform(p.recurrent_weights, 4 * hidden, hidden, hidden, hidden, rng);
  p.bias = Vector::Zero(4 * hidden);
  p.bias.segment(hidden, hidden).setOnes();
  return p;
}

inline DenseLayerParams init_dense(int input, int output, Activation act, Rng& rng) {
  DenseLayerParams p;
  glorot_uniform(p.weights, output, input, input, output, rng);
  p.bias = Vector::Zero(output);
  p.activation = act;
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline Network init_network(const Architecture& arch, std::uint64_t seed) {
  validate_architecture(arch);
  Rng rng(seed);
  Network net;
  net.arch = arch;
  net.lstm1 = detail::init_lstm(arch.input_size, arch.hidden1, rng);
  net.lstm2 = detail::init_lstm(arch.hidden1, arch.hidden2, rng);
  net.dense1 = detail::init_dense(arch.hidden2, arch.dense_units, Activation::relu, rng);
  net.dense2 = detail::init_dense(arch.dense_units, 1, Activation::identity, rng);
  return net;
}

// ---------------------------------------------------------------------------
// Single LSTM layer

struct LstmCache {
  Matrix inputs;  // D x T
  Matrix gates;   // 4H x T, post-activation [i; f; g; o]
  Matrix cells;   // H x (T+1), column 0 is c0
  Matrix hidden;  // H x (T+1), column 0 is h0
  Matrix tanh_cells;  // H x T
};

struct LstmOutput {
  Matrix hidden;  // H x T
  Vector final_hidden;
  Vector final_cell;
  LstmCache cache;
};

// inputs: D x T, one column per time step.
inline LstmOutput lstm_forward(const LstmLayerParams& p, const Matrix& inputs, const Vector* h0 = nullptr,
                               const Vector* c0 = nullptr) {
  const Eigen::Index H = p.hidden_size();
  const Eigen::Index T = inputs.cols();
  if (inputs.rows() != p.input_size())
    fail(ErrorCode::ShapeMismatch, "LSTM input width " + std::to_string(inputs.rows()) + ", expected " +
                                       std::to_string(p.input_size()));
  if ((h0 && h0->size() != H) || (c0 && c0->size() != H))
    fail(ErrorCode::ShapeMismatch, "initial LSTM state has the wrong size");

  LstmCache cache;
  cache.inputs = inputs;
  cache.gates.resize(4 * H, T);
  cache.cells.resize(H, T + 1);
  cache.hidden.resize(H, T + 1);
  cache.tanh_cells.resize(H, T);
  cache.cells.col(0) = c0 ? Vector(*c0) : Vector(Vector::Zero(H));
  cache.hidden.col(0) = h0 ? Vector(*h0) : Vector(Vector::Zero(H));

  Matrix pre = p.input_weights * inputs;
  pre.colwise() += p.bias;
  Vector a(4 * H);
  for (Eigen::Index t = 0; t < T; ++t) {
    a.noalias() = pre.col(t);
    a.noalias() += p.recurrent_weights * cache.hidden.col(t);
    auto gate = cache.gates.col(t);
    for (Eigen::Index k = 0; k < H; ++k) {
      gate(k) = detail::sigmoid(a(k));
      gate(H + k) = detail::sigmoid(a(H + k));
      gate(2 * H + k) = std::tanh(a(2 * H + k));
      gate(3 * H + k) = detail::sigmoid(a(3 * H + k));
    }
    for (Eigen::Index k = 0; k < H; ++k) {
      const double c = gate(H + k) * cache.cells(k, t) + gate(k) * gate(2 * H + k);
      const double tc = std::tanh(c);
      cache.cells(k, t + 1) = c;
      cache.tanh_cells(k, t) = tc;
      cache.hidden(k, t + 1) = gate(3 * H + k) * tc;
    }
  }

  LstmOutput out;
  out.hidden = cache.hidden.rightCols(T);
  out.final_hidden = cache.hidden.col(T);
  out.final_cell = cache.cells.col(T);
  out.cache = std::move(cache);
  return out;
}

// Backpropagates d(loss)/d(h_t) for every step (H x T) through the layer.
// Accumulates parameter gradients into `grads` and returns d(loss)/d(inputs).
inline Matrix lstm_backward(const LstmLayerParams& p, const LstmCache& cache, const Matrix& d_hidden,
                            LstmLayerParams& grads) {
  const Eigen::Index H = p.hidden_size();
  const Eigen::Index T = cache.inputs.cols();
  Matrix d_pre(4 * H, T);
  Vector dh_next = Vector::Zero(H);
  Vector dc_next = Vector::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto gate = cache.gates.col(t);
    auto da = d_pre.col(t);
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = gate(k), f = gate(H + k), g = gate(2 * H + k), o = gate(3 * H + k);
      const double tc = cache.tanh_cells(k, t);
      const double dh = d_hidden(k, t) + dh_next(k);
      const double dc = dc_next(k) + dh * o * (1.0 - tc * tc);
      da(k) = dc * g * i * (1.0 - i);
      da(H + k) = dc * cache.cells(k, t) * f * (1.0 - f);
      da(2 * H + k) = dc * i * (1.0 - g * g);
      da(3 * H + k) = dh * tc * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = p.recurrent_weights.transpose() * da;
  }
  grads.input_weights.noalias() += d_pre * cache.inputs.transpose();
  grads.recurrent_weights.noalias() += d_pre * cache.hidden.leftCols(T).transpose();
  grads.bias += d_pre.rowwise().sum();
  return p.input_weights.transpose() * d_pre;
}

// ---------------------------------------------------------------------------
// Full network

enum class Mode { train, eval };

// Inverted-dropout multipliers: each entry is 0 or 1/(1 - rate).
struct DropoutMasks {
  Matrix after_lstm1;   // H1 x T
  Vector after_lstm2;   // H2
  Vector after_dense1;  // dense units

  static DropoutMasks ones(const Architecture& a, Eigen::Index steps) {
    return {Matrix::Ones(a.hidden1, steps), Vector::Ones(a.hidden2), Vector::Ones(a.dense_units)};
  }

  static DropoutMasks sample(const Architecture& a, Eigen::Index steps, Rng& rng) {
    DropoutMasks m = ones(a, steps);
    const double rate = a.dropout_rate;
    if (rate <= 0.0) return m;
    const double scale = 1.0 / (1.0 - rate);
    const auto draw = [&](auto& t, bool enabled) {
      if (!enabled) return;
      for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = rng.uniform() >= rate ? scale : 0.0;
    };
    draw(m.after_lstm1, a.dropout_after_lstm1);
    draw(m.after_lstm2, a.dropout_after_lstm2);
    draw(m.after_dense1, a.dropout_after_dense1);
    return m;
  }
};

struct ForwardCache {
  const Network* source = nullptr;
  std::uint64_t revision = 0;
  LstmCache lstm1;
  LstmCache lstm2;
  DropoutMasks masks;
  Vector lstm2_final;    // after dropout
  Vector dense1_pre;
  Vector dense1_out;     // after dropout
  double prediction = 0.0;
};

struct ForwardResult {
  double prediction = 0.0;
  std::optional<ForwardCache> cache;
};

namespace detail {

inline double forward_impl(const Network& net, const Matrix& features, const DropoutMasks* masks,
                           ForwardCache* cache) {
  if (features.cols() != net.lstm1.input_size())
    fail(ErrorCode::ShapeMismatch, "feature width " + std::to_string(features.cols()) + ", network expects " +
                                       std::to_string(net.lstm1.input_size()));
  if (features.rows() < 1) fail(ErrorCode::ShapeMismatch, "empty input sequence");

  LstmOutput l1 = lstm_forward(net.lstm1, features.transpose());
  Matrix h1 = std::move(l1.hidden);
  if (masks) h1.array() *= masks->after_lstm1.array();
  LstmOutput l2 = lstm_forward(net.lstm2, h1);
  Vector h2 = std::move(l2.final_hidden);
  if (masks) h2.array() *= masks->after_lstm2.array();
  Vector z1 = net.dense1.weights * h2 + net.dense1.bias;
  Vector a1 = net.dense1.activation == Activation::relu ? Vector(z1.cwiseMax(0.0)) : z1;
  if (masks) a1.array() *= masks->after_dense1.array();
  const double y = net.dense2.weights.row(0).dot(a1) + net.dense2.bias(0);

  if (cache) {
    cache->source = &net;
    cache->revision = net.revision;
    cache->lstm1 = std::move(l1.cache);
    cache->lstm2 = std::move(l2.cache);
    cache->masks = *masks;
    cache->lstm2_final = std::move(h2);
    cache->dense1_pre = std::move(z1);
    cache->dense1_out = std::move(a1);
    cache->prediction = y;
  }
  return y;
}

}  // namespace detail

// Train mode draws dropout masks from `rng` (required) and returns a cache;
// eval mode applies no dropout and returns no cache.
inline ForwardResult network_forward(const Network& net, const Matrix& features, Mode mode, Rng* rng = nullptr) {
  if (mode == Mode::eval) return {detail::forward_impl(net, features, nullptr, nullptr), std::nullopt};
  if (!rng) fail(ErrorCode::InvalidArgument, "train-mode forward needs a random stream");
  const DropoutMasks masks = DropoutMasks::sample(net.arch, features.rows(), *rng);
  ForwardResult r;
  r.cache.emplace();
  r.prediction = detail::forward_impl(net, features, &masks, &*r.cache);
  return r;
}

// Train-mode pass with caller-supplied dropout masks.
inline ForwardResult network_forward(const Network& net, const Matrix& features, const DropoutMasks& masks) {
  if (masks.after_lstm1.rows() != net.arch.hidden1 || masks.after_lstm1.cols() != features.rows() ||
      masks.after_lstm2.size() != net.arch.hidden2 || masks.after_dense1.size() != net.arch.dense_units)
    fail(ErrorCode::ShapeMismatch, "dropout masks do not match the network and sequence length");
  ForwardResult r;
  r.cache.emplace();
  r.prediction = detail::forward_impl(net, features, &masks, &*r.cache);
  return r;
}

inline double predict(const Network& net, const Matrix& features) {
  return network_forward(net, features, Mode::eval).prediction;
}

// Adds the gradient of a loss with d(loss)/d(prediction) = dloss_dpred into `grads`.
inline void network_backward(const Network& net, const ForwardCache& cache, double dloss_dpred, Gradients& grads) {
  if (cache.source != &net || cache.revision != net.revision)
    fail(ErrorCode::StaleCache, "forward cache was produced by a different network state");

  grads.dense2.weights.row(0) += dloss_dpred * cache.dense1_out.transpose();
  grads.dense2.bias(0) += dloss_dpred;

  Vector dz1 = (dloss_dpred * net.dense2.weights.row(0).transpose()).cwiseProduct(cache.masks.after_dense1);
  if (net.dense1.activation == Activation::relu)
    dz1 = (cache.dense1_pre.array() > 0.0).select(dz1, 0.0);
  grads.dense1.weights.noalias() += dz1 * cache.lstm2_final.transpose();
  grads.dense1.bias += dz1;

  const Eigen::Index T = cache.lstm2.inputs.cols();
  Matrix dh2 = Matrix::Zero(net.arch.hidden2, T);
  dh2.col(T - 1) = (net.dense1.weights.transpose() * dz1).cwiseProduct(cache.masks.after_lstm2);
  Matrix dh1 = lstm_backward(net.lstm2, cache.lstm2, dh2, grads.lstm2);
  dh1.array() *= cache.masks.after_lstm1.array();
  lstm_backward(net.lstm1, cache.lstm1, dh1, grads.lstm1);
}

inline Gradients network_backward(const Network& net, const ForwardCache& cache, double dloss_dpred) {
  Gradients g = zero_gradients(net);
  network_backward(net, cache, dloss_dpred, g);
  return g;
}

// ---------------------------------------------------------------------------
// Loss: mean over N of (prediction - target)^2.

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d(loss)/d(prediction_i) = 2 (prediction_i - target_i) / N
};

inline LossResult mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) fail(ErrorCode::LengthMismatch, "predictions and targets differ in length");
  if (predictions.empty()) fail(ErrorCode::EmptyInput, "MSE of an empty set");
  const auto n = static_cast<double>(predictions.size());
  LossResult r;
  r.grad.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

// ---------------------------------------------------------------------------
// Gradient check against central differences of the single-sample squared error.

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

namespace detail {

// Prediction with every parameter, input and mask widened to S. Shares no code
// with forward_impl, so it also serves as a reference forward pass.
template <typename S>
S forward_value(const Network& net, const Matrix& features, const DropoutMasks& masks) {
  using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using V = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  const auto sig = [](S x) { return S(1) / (S(1) + std::exp(-x)); };
  const auto layer = [&](const LstmLayerParams& p, const M& x) {
    const Eigen::Index H = p.hidden_size();
    const M wx = p.input_weights.cast<S>(), wh = p.recurrent_weights.cast<S>();
    const V b = p.bias.cast<S>();
    M hs(H, x.cols());
    V h = V::Zero(H), c = V::Zero(H);
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
      const V a = wx * x.col(t) + wh * h + b;
      for (Eigen::Index k = 0; k < H; ++k) {
        c(k) = sig(a(H + k)) * c(k) + sig(a(k)) * std::tanh(a(2 * H + k));
        h(k) = sig(a(3 * H + k)) * std::tanh(c(k));
      }
      hs.col(t) = h;
    }
    return hs;
  };
  const M h1 = layer(net.lstm1, features.transpose().cast<S>()).cwiseProduct(masks.after_lstm1.cast<S>());
  const M h2 = layer(net.lstm2, h1);
  const V last = h2.col(h2.cols() - 1).cwiseProduct(masks.after_lstm2.cast<S>());
  V z = net.dense1.weights.cast<S>() * last + net.dense1.bias.cast<S>();
  if (net.dense1.activation == Activation::relu) z = z.cwiseMax(S(0));
  z = z.cwiseProduct(masks.after_dense1.cast<S>());
  return (net.dense2.weights.cast<S>() * z)(0) + static_cast<S>(net.dense2.bias(0));
}

}  // namespace detail

// Finite-difference losses are evaluated in long double so that cancellation in
// L(θ+eps) − L(θ−eps) stays far below the tolerance for small gradient entries.
inline GradCheckResult grad_check(const Network& net, const Matrix& features, double target, const DropoutMasks& masks,
                                  double eps = 1e-5, const std::function<void(Gradients&)>& tamper = {}) {
  const auto loss_at = [&](const Network& n) {
    const long double d = detail::forward_value<long double>(n, features, masks) - static_cast<long double>(target);
    return d * d;
  };
  const ForwardResult fwd = network_forward(net, features, masks);
  Gradients analytic = network_backward(net, *fwd.cache, 2.0 * (fwd.prediction - target));
  if (tamper) tamper(analytic);

  GradCheckResult result;
  Network probe = net;
  for_each_tensor_pair(probe, analytic, [&](std::string_view name, auto& param, const auto& grad) {
    for (Eigen::Index k = 0; k < param.size(); ++k) {
      const double saved = param.data()[k];
      param.data()[k] = saved + eps;
      const long double up = loss_at(probe);
      const long double step_up = param.data()[k];
      param.data()[k] = saved - eps;
      const long double down = loss_at(probe);
      const long double step = step_up - static_cast<long double>(param.data()[k]);
      param.data()[k] = saved;
      const double numeric = static_cast<double>((up - down) / step);
      const double a = grad.data()[k];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.checked;
      if (result.worst_index < 0 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = std::string(name);
        result.worst_index = k;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  });
  return result;
}

}  // namespace cyclelife

#include <gtest/gtest.h>

#include <cmath>

#include "cyclelife/nn.hpp"

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

Architecture small_arch(double dropout = 0.2) {
  Architecture a;
  a.input_size = 5;
  a.hidden1 = 4;
  a.hidden2 = 6;
  a.dropout_rate = dropout;
  return a;
}

Matrix random_features(Eigen::Index steps, Eigen::Index width, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix x(steps, width);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = scale * rng.normal();
  return x;
}

Network zero_network(const Architecture& a) {
  Network net = init_network(a, 0);
  for_each_tensor(net, [](std::string_view, auto& t) { t.setZero(); });
  return net;
}

// Straight-line scalar re-implementation of the eval-mode forward pass.
double reference_predict(const Network& net, const Matrix& x) {
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const auto run = [&](const LstmLayerParams& p, const std::vector<std::vector<double>>& in) {
    const auto H = static_cast<std::size_t>(p.hidden_size());
    const auto D = static_cast<std::size_t>(p.input_size());
    std::vector<double> h(H, 0.0), c(H, 0.0);
    std::vector<std::vector<double>> out;
    for (const auto& xt : in) {
      std::vector<double> a(4 * H);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        double s = p.bias(static_cast<Eigen::Index>(r));
        for (std::size_t d = 0; d < D; ++d) s += p.input_weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) * xt[d];
        for (std::size_t j = 0; j < H; ++j) s += p.recurrent_weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * h[j];
        a[r] = s;
      }
      for (std::size_t k = 0; k < H; ++k) {
        const double i = sig(a[k]), f = sig(a[H + k]), g = std::tanh(a[2 * H + k]), o = sig(a[3 * H + k]);
        c[k] = f * c[k] + i * g;
        h[k] = o * std::tanh(c[k]);
      }
      out.push_back(h);
    }
    return out;
  };
  std::vector<std::vector<double>> seq;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index d = 0; d < x.cols(); ++d) row[static_cast<std::size_t>(d)] = x(t, d);
    seq.push_back(row);
  }
  const auto h2 = run(net.lstm2, run(net.lstm1, seq)).back();
  double y = net.dense2.bias(0);
  for (Eigen::Index u = 0; u < net.dense1.weights.rows(); ++u) {
    double z = net.dense1.bias(u);
    for (std::size_t j = 0; j < h2.size(); ++j) z += net.dense1.weights(u, static_cast<Eigen::Index>(j)) * h2[j];
    y += net.dense2.weights(0, u) * std::max(0.0, z);
  }
  return y;
}

}  // namespace

TEST(InitNetwork, DeterministicShapesAndBounds) {
  const Architecture a;  // 151 -> 64 -> 128 -> 32 -> 1
  const Network n1 = init_network(a, 7);
  const Network n2 = init_network(a, 7);
  for_each_tensor_pair(n1, n2, [](std::string_view name, const auto& x, const auto& y) { EXPECT_EQ(x, y) << name; });
  EXPECT_EQ(n1.lstm1.input_weights.rows(), 256);
  EXPECT_EQ(n1.lstm1.input_weights.cols(), 151);
  EXPECT_EQ(n1.lstm2.input_weights.cols(), 64);
  EXPECT_EQ(n1.dense1.weights.cols(), 128);
  EXPECT_EQ(n1.dense2.weights.cols(), 32);
  EXPECT_LE(n1.lstm1.input_weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 215.0));
  EXPECT_LE(n1.lstm1.recurrent_weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 128.0));
  EXPECT_LE(n1.dense1.weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 160.0));
  EXPECT_LE(n1.dense2.weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 33.0));
  EXPECT_GT(n1.lstm1.input_weights.cwiseAbs().maxCoeff(), 0.9 * std::sqrt(6.0 / 215.0));

  const Network other = init_network(a, 8);
  EXPECT_NE(other.lstm1.input_weights, n1.lstm1.input_weights);
}

TEST(InitNetwork, OnlyForgetBiasIsOne) {
  const Network n = init_network(Architecture{}, 1);
  for (const auto* p : {&n.lstm1, &n.lstm2}) {
    const Eigen::Index H = p->hidden_size();
    EXPECT_TRUE((p->bias.segment(H, H).array() == 1.0).all());
    EXPECT_TRUE((p->bias.head(H).array() == 0.0).all());
    EXPECT_TRUE((p->bias.tail(2 * H).array() == 0.0).all());
  }
  EXPECT_TRUE((n.dense1.bias.array() == 0.0).all());
  EXPECT_EQ(n.dense2.bias(0), 0.0);
  EXPECT_EQ(n.dense1.activation, Activation::relu);
  EXPECT_EQ(n.dense2.activation, Activation::identity);
}

TEST(InitNetwork, InvalidArchitecture) {
  Architecture a;
  a.hidden2 = 0;
  EXPECT_EQ(code_of([&] { init_network(a, 0); }), ErrorCode::InvalidArchitecture);
  a = Architecture{};
  a.dropout_rate = 1.0;
  EXPECT_EQ(code_of([&] { init_network(a, 0); }), ErrorCode::InvalidArchitecture);
}

TEST(LstmForward, ZeroParametersGiveZeroHidden) {
  LstmLayerParams p{Matrix::Zero(12, 4), Matrix::Zero(12, 3), Vector::Zero(12)};
  const LstmOutput out = lstm_forward(p, random_features(4, 6, 1));
  EXPECT_TRUE((out.hidden.array() == 0.0).all());
  EXPECT_EQ(out.hidden.cols(), 6);
}

TEST(LstmForward, ScalarHandComputation) {
  LstmLayerParams p{Matrix::Ones(4, 1), Matrix::Zero(4, 1), Vector::Zero(4)};
  const LstmOutput out = lstm_forward(p, Matrix::Ones(1, 1));
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(s, 0.731059, 1e-6);
  EXPECT_NEAR(out.final_cell(0), 0.556770, 1e-6);
  EXPECT_NEAR(out.final_hidden(0), 0.369606, 1e-6);
  EXPECT_NEAR(out.final_cell(0), s * std::tanh(1.0), 1e-15);
  EXPECT_NEAR(out.final_hidden(0), s * std::tanh(s * std::tanh(1.0)), 1e-15);
}

TEST(LstmForward, ForgetBiasAloneKeepsZeroState) {
  LstmLayerParams p{Matrix::Zero(8, 3), Matrix::Zero(8, 2), Vector::Zero(8)};
  p.bias.segment(2, 2).setOnes();
  const LstmOutput out = lstm_forward(p, Matrix::Zero(3, 5));
  EXPECT_TRUE((out.hidden.array() == 0.0).all());
}

TEST(LstmForward, HiddenAndTanhCellAreBounded) {
  const Network n = init_network(small_arch(), 3);
  Matrix x = random_features(3, 40, 9, 4.0).transpose();
  x = x.cwiseMax(-10.0).cwiseMin(10.0);
  const LstmOutput out = lstm_forward(n.lstm1, x.topRows(5));
  EXPECT_LE(out.hidden.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LE(out.cache.tanh_cells.cwiseAbs().maxCoeff(), 1.0);
}

TEST(LstmForward, ShapeMismatch) {
  const Network n = init_network(small_arch(), 0);
  EXPECT_EQ(code_of([&] { lstm_forward(n.lstm1, Matrix::Zero(7, 2)); }), ErrorCode::ShapeMismatch);
  const Vector h0 = Vector::Zero(3);
  EXPECT_EQ(code_of([&] { lstm_forward(n.lstm1, Matrix::Zero(5, 2), &h0); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { predict(n, Matrix::Zero(2, 7)); }), ErrorCode::ShapeMismatch);
}

TEST(NetworkForward, ZeroNetworkPredictsZero) {
  const Network n = zero_network(Architecture{});
  EXPECT_EQ(predict(n, random_features(5, 151, 2)), 0.0);
}

TEST(NetworkForward, MatchesStraightLineReference) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Architecture a = small_arch();
    a.input_size = 7;
    const Network n = init_network(a, seed);
    const Matrix x = random_features(9, 7, seed + 10);
    EXPECT_NEAR(predict(n, x), reference_predict(n, x), 1e-12);
  }
  const Network big = init_network(Architecture{}, 4);
  const Matrix x = random_features(20, 151, 5);
  EXPECT_NEAR(predict(big, x), reference_predict(big, x), 1e-12);
}

TEST(NetworkForward, ExtendedPrecisionPassAgrees) {
  const Network n = init_network(small_arch(), 6);
  const Matrix x = random_features(3, 5, 6);
  Rng rng(1);
  const DropoutMasks masks = DropoutMasks::sample(n.arch, 3, rng);
  const double y = network_forward(n, x, masks).prediction;
  EXPECT_NEAR(static_cast<double>(detail::forward_value<long double>(n, x, masks)), y, 1e-12);
  EXPECT_NEAR(detail::forward_value<double>(n, x, masks), y, 1e-14);
}

TEST(NetworkForward, EvalIsDeterministic) {
  const Network n = init_network(Architecture{}, 11);
  const Matrix x = random_features(15, 151, 3);
  EXPECT_EQ(predict(n, x), predict(n, x));
}

TEST(NetworkForward, NoDropoutTrainEqualsEval) {
  const Network n = init_network(small_arch(0.0), 5);
  const Matrix x = random_features(4, 5, 5);
  Rng rng(3);
  const ForwardResult train = network_forward(n, x, Mode::train, &rng);
  EXPECT_EQ(train.prediction, predict(n, x));
  EXPECT_TRUE(train.cache.has_value());
  EXPECT_FALSE(network_forward(n, x, Mode::eval).cache.has_value());
}

TEST(NetworkForward, AllKeepMaskEqualsEval) {
  const Network n = init_network(small_arch(0.5), 5);
  const Matrix x = random_features(4, 5, 8);
  EXPECT_EQ(network_forward(n, x, DropoutMasks::ones(n.arch, 4)).prediction, predict(n, x));
}

TEST(NetworkForward, TrainModeNeedsRng) {
  const Network n = init_network(small_arch(), 5);
  EXPECT_EQ(code_of([&] { network_forward(n, random_features(2, 5, 1), Mode::train); }), ErrorCode::InvalidArgument);
}

TEST(Dropout, MasksAreInvertedAndRespectSwitches) {
  Architecture a = small_arch(0.25);
  a.dropout_after_lstm2 = false;
  Rng rng(2);
  const DropoutMasks m = DropoutMasks::sample(a, 50, rng);
  int zeros = 0;
  for (Eigen::Index k = 0; k < m.after_lstm1.size(); ++k) {
    const double v = m.after_lstm1.data()[k];
    EXPECT_TRUE(v == 0.0 || v == 1.0 / 0.75);
    zeros += v == 0.0;
  }
  EXPECT_GT(zeros, 20);
  EXPECT_LT(zeros, 80);
  EXPECT_TRUE((m.after_lstm2.array() == 1.0).all());
}

TEST(MseLoss, Examples) {
  const std::vector<double> p{1.0, 3.0}, t{0.0, 0.0};
  const LossResult r = mse_loss(p, t);
  EXPECT_EQ(r.loss, 5.0);
  EXPECT_EQ(r.grad, (std::vector<double>{1.0, 3.0}));

  const std::vector<double> p1{2.0}, t1{5.0};
  const LossResult r1 = mse_loss(p1, t1);
  EXPECT_EQ(r1.loss, 9.0);
  EXPECT_EQ(r1.grad[0], -6.0);

  const LossResult same = mse_loss(p, p);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.grad, (std::vector<double>{0.0, 0.0}));

  EXPECT_EQ(code_of([] { mse_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { mse_loss(std::vector<double>{}, std::vector<double>{}); }), ErrorCode::EmptyInput);
}

TEST(MseLoss, NonNegativeAndZeroOnlyAtEquality) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(5), t(5);
    for (int k = 0; k < 5; ++k) {
      p[static_cast<std::size_t>(k)] = rng.normal();
      t[static_cast<std::size_t>(k)] = rng.normal();
    }
    EXPECT_GT(mse_loss(p, t).loss, 0.0);
  }
}

TEST(NetworkBackward, ZeroUpstreamGivesZeroGradients) {
  const Network n = init_network(small_arch(), 2);
  Rng rng(1);
  const ForwardResult f = network_forward(n, random_features(3, 5, 1), Mode::train, &rng);
  const Gradients g = network_backward(n, *f.cache, 0.0);
  for_each_tensor(g, [](std::string_view name, const auto& t) { EXPECT_TRUE((t.array() == 0.0).all()) << name; });
}

TEST(NetworkBackward, ZeroInputsGiveZeroInputWeightGradient) {
  const Network n = init_network(small_arch(), 2);
  Rng rng(1);
  const ForwardResult f = network_forward(n, Matrix::Zero(3, 5), Mode::train, &rng);
  const Gradients g = network_backward(n, *f.cache, 0.7);
  EXPECT_TRUE((g.lstm1.input_weights.array() == 0.0).all());
  EXPECT_GT(g.dense2.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(NetworkBackward, StaleCache) {
  Network n = init_network(small_arch(), 2);
  Rng rng(1);
  const ForwardResult f = network_forward(n, random_features(3, 5, 1), Mode::train, &rng);
  const Network copy = n;
  EXPECT_EQ(code_of([&] { network_backward(copy, *f.cache, 1.0); }), ErrorCode::StaleCache);
  ++n.revision;
  EXPECT_EQ(code_of([&] { network_backward(n, *f.cache, 1.0); }), ErrorCode::StaleCache);
}

TEST(GradCheck, ZeroNetworkZeroInput) {
  const Network n = zero_network(small_arch());
  const GradCheckResult r = grad_check(n, Matrix::Zero(3, 5), 0.0, DropoutMasks::ones(n.arch, 3));
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(r.checked, parameter_count(n));
}

TEST(GradCheck, SmallNetworkTenSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network n = init_network(small_arch(), seed);
    Rng rng(seed + 1000);
    const Matrix x = random_features(3, 5, seed + 2000);
    const DropoutMasks masks = DropoutMasks::sample(n.arch, 3, rng);
    const GradCheckResult r = grad_check(n, x, rng.normal(), masks);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " worst " << r.worst_tensor << "[" << r.worst_index << "]";
    EXPECT_EQ(r.checked, parameter_count(n));
  }
}

TEST(GradCheck, LargerStepDoesNotReduceError) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network n = init_network(small_arch(), seed);
    Rng rng(seed);
    const Matrix x = random_features(3, 5, seed + 50);
    const DropoutMasks masks = DropoutMasks::sample(n.arch, 3, rng);
    const double fine = grad_check(n, x, 0.3, masks, 1e-5).max_relative_error;
    const double coarse = grad_check(n, x, 0.3, masks, 1e-3).max_relative_error;
    EXPECT_GE(coarse, fine) << "seed " << seed;
  }
}

TEST(GradCheck, DetectsCorruptedGradient) {
  const Network n = init_network(small_arch(), 1);
  const Matrix x = random_features(3, 5, 1);
  const DropoutMasks masks = DropoutMasks::ones(n.arch, 3);
  const GradCheckResult r = grad_check(n, x, 0.5, masks, 1e-5, [](Gradients& g) { g.lstm2.bias(3) += 1e-3; });
  EXPECT_GT(r.max_relative_error, 1e-4);
  EXPECT_EQ(r.worst_tensor, "lstm2.bias");
  EXPECT_EQ(r.worst_index, 3);
}

TEST(GradCheck, HoldsWithoutDropoutAndWithLongerSequences) {
  const Network n = init_network(small_arch(0.0), 17);
  const Matrix x = random_features(8, 5, 17);
  const GradCheckResult r = grad_check(n, x, -0.4, DropoutMasks::ones(n.arch, 8));
  EXPECT_LT(r.max_relative_error, 1e-4);
}

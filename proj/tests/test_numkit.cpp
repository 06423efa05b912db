#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "adrqn/numkit.hpp"
#include "test_util.hpp"

using namespace adrqn::numkit;
using adrqn::testing::max_relative_error;
using adrqn::testing::numeric_gradient;
using adrqn::testing::project;
using adrqn::testing::random_tensor;

namespace {

// Analytic gradients of project(forward(x), w) for a dense layer.
struct DenseProbe {
  Dense layer;
  Tensor x;
  Tensor w;

  double loss() const { return project(layer.forward(x), w); }

  Tensor analytic_input_grad() {
    DenseCache cache;
    Tensor y = layer.forward(x, &cache);
    layer.weight.zero_grad();
    layer.bias.zero_grad();
    return layer.backward(cache, w.reshaped(y.shape()));
  }
};

}  // namespace

TEST(Tensor, StorageIsAligned) {
  for (std::size_t n : {1, 3, 7, 33}) {
    const Tensor t(Shape{n});
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % EIGEN_MAX_ALIGN_BYTES, 0u) << n;
    const Tensor s(Shape{n}, std::vector<double>(n, 1.0));
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(s.data()) % EIGEN_MAX_ALIGN_BYTES, 0u) << n;
  }
}

TEST(Tensor, ShapeInvariant) {
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor(Shape{0, 2}), DimensionError);
  EXPECT_THROW(t.reshape(Shape{4}), DimensionError);
}

TEST(Dense, IdentityWeights) {
  Dense d("d", 2, 2);
  d.weight.value = Tensor::matrix({{1, 0}, {0, 1}});
  Tensor y = d.forward(Tensor::vector({3, -1}));
  EXPECT_EQ(y, Tensor::vector({3, -1}));
}

TEST(Dense, HandArithmetic) {
  Dense d("d", 2, 2);
  d.weight.value = Tensor::matrix({{1, 2}, {3, 4}});
  Tensor y = d.forward(Tensor::vector({1, 1}));
  EXPECT_EQ(y, Tensor::vector({3, 7}));
}

TEST(Dense, ShapeMismatchNamesBothShapes) {
  Dense d("d", 3, 2);
  try {
    d.forward(Tensor::vector({1, 2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
  }
}

TEST(Dense, InputGradientMatchesFiniteDifferences) {
  Rng rng(7);
  DenseProbe probe{Dense("d", 5, 4), random_tensor({3, 5}, rng), random_tensor({3, 4}, rng)};
  probe.layer.init(rng);
  fill_uniform(probe.layer.bias.value, 0.5, rng);
  Tensor analytic = probe.analytic_input_grad();
  Tensor numeric = numeric_gradient(probe.x, [&] { return probe.loss(); });
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-6);
}

TEST(Dense, LinearWithoutBias) {
  Rng rng(11);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Dense d("d", 6, 3);
    d.init(rng);
    const Tensor x = random_tensor({6}, rng), y = random_tensor({6}, rng);
    const double a = coef(rng), b = coef(rng);
    Tensor mix(Shape{6});
    for (std::size_t i = 0; i < 6; ++i) mix[i] = a * x[i] + b * y[i];
    const Tensor lhs = d.forward(mix);
    const Tensor fx = d.forward(x), fy = d.forward(y);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(lhs[i], a * fx[i] + b * fy[i], 1e-12);
  }
}

TEST(Conv2d, OneByOneIdentityKernel) {
  Conv2d c("c", 1, 1, 1, 1);
  c.weight.value.fill(1.0);
  const Tensor x(Shape{1, 3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(c.forward(x), x);
}

TEST(Conv2d, AllOnesKernel) {
  Conv2d c("c", 1, 1, 2, 2);
  c.weight.value.fill(1.0);
  const Tensor x(Shape{1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const Tensor y = c.forward(x);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 10.0);
}

TEST(Conv2d, OutputShapeAndErrors) {
  Conv2d c("c", 2, 3, 3, 3, 2);
  EXPECT_EQ(c.forward(Tensor(Shape{4, 2, 7, 9})).shape(), (Shape{4, 3, 3, 4}));
  EXPECT_THROW(c.forward(Tensor(Shape{2, 6, 7})), DimensionError);  // (6-3)/2 not integral
  EXPECT_THROW(c.forward(Tensor(Shape{2, 2, 2})), DimensionError);  // kernel larger than input
  EXPECT_THROW(c.forward(Tensor(Shape{3, 7, 7})), DimensionError);  // channel mismatch
}

TEST(Conv2d, ParameterGradientMatchesFiniteDifferences) {
  Rng rng(3);
  Conv2d c("c", 2, 3, 3, 3, 1);
  c.init(rng);
  fill_uniform(c.bias.value, 0.3, rng);
  Tensor x = random_tensor({2, 2, 5, 6}, rng);
  const Tensor w = random_tensor({2, 3, 3, 4}, rng);
  Conv2dCache cache;
  c.forward(x, &cache);
  c.weight.zero_grad();
  c.bias.zero_grad();
  const Tensor dx = c.backward(cache, w);
  auto f = [&] { return project(c.forward(x), w); };
  EXPECT_LT(max_relative_error(c.weight.grad, numeric_gradient(c.weight.value, f)), 1e-6);
  EXPECT_LT(max_relative_error(c.bias.grad, numeric_gradient(c.bias.value, f)), 1e-6);
  EXPECT_LT(max_relative_error(dx, numeric_gradient(x, f)), 1e-6);
}

TEST(Lstm, ZeroParametersZeroState) {
  LstmCell cell("l", 3, 2);
  Rng rng(1);
  const auto [h, s] = cell.step(LstmState::zeros(2), random_tensor({3}, rng));
  EXPECT_EQ(h, Tensor(Shape{2}));
  EXPECT_EQ(s.cell, Tensor(Shape{2}));
}

TEST(Lstm, ZeroParametersCarryCell) {
  LstmCell cell("l", 2, 1);
  LstmState state{Tensor(Shape{1}), Tensor::vector({2.0})};
  const auto [h, s] = cell.step(state, Tensor::vector({0.7, -1.2}));
  EXPECT_DOUBLE_EQ(s.cell[0], 1.0);
  EXPECT_DOUBLE_EQ(h[0], 0.5 * std::tanh(1.0));
  EXPECT_NEAR(h[0], 0.3808, 5e-5);
}

TEST(Lstm, ForgetBiasInit) {
  Rng rng(2);
  LstmCell cell("l", 3, 4);
  cell.init(rng);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(cell.bias.value[j], (j >= 4 && j < 8) ? 1.0 : 0.0);
}

TEST(Lstm, ShapeErrors) {
  LstmCell cell("l", 3, 2);
  EXPECT_THROW(cell.step(LstmState::zeros(2), Tensor(Shape{4})), DimensionError);
  EXPECT_THROW(cell.step(LstmState::zeros(3), Tensor(Shape{3})), DimensionError);
  EXPECT_THROW(cell.step(LstmState::zeros(2), Tensor(Shape{5, 3})), DimensionError);
}

namespace {

struct UnrollProbe {
  LstmCell cell;
  std::vector<Tensor> inputs;
  std::vector<Tensor> readout;

  double loss() const {
    LstmState s = LstmState::zeros(inputs.front().dim(0), cell.hidden_size());
    double total = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      auto [h, next] = cell.step(s, inputs[t]);
      total += project(h, readout[t]);
      s = std::move(next);
    }
    return total;
  }

  std::vector<Tensor> backward() {
    for (Parameter* p : cell.parameters()) p->zero_grad();
    std::vector<LstmStepCache> caches(inputs.size());
    LstmState s = LstmState::zeros(inputs.front().dim(0), cell.hidden_size());
    for (std::size_t t = 0; t < inputs.size(); ++t) s = cell.step(s, inputs[t], &caches[t]).second;
    return bptt_backward(cell, caches, readout);
  }
};

UnrollProbe make_unroll(std::size_t length, std::uint64_t seed, std::size_t batch = 2) {
  Rng rng(seed);
  UnrollProbe p{LstmCell("l", 3, 4), {}, {}};
  p.cell.init(rng);
  fill_uniform(p.cell.bias.value, 0.5, rng);
  for (std::size_t t = 0; t < length; ++t) {
    p.inputs.push_back(random_tensor({batch, 3}, rng));
    p.readout.push_back(random_tensor({batch, 4}, rng));
  }
  return p;
}

}  // namespace

TEST(Bptt, SequenceOfThreeMatchesFiniteDifferences) {
  UnrollProbe p = make_unroll(3, 5);
  const auto dx = p.backward();
  auto f = [&] { return p.loss(); };
  for (Parameter* param : p.cell.parameters()) {
    const Tensor analytic = param->grad;
    EXPECT_LT(max_relative_error(analytic, numeric_gradient(param->value, f)), 1e-5) << param->name;
  }
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_LT(max_relative_error(dx[t], numeric_gradient(p.inputs[t], f)), 1e-5) << "input " << t;
  }
}

TEST(Bptt, TenStepsMatchFiniteDifferences) {
  UnrollProbe p = make_unroll(10, 17);
  p.backward();
  auto f = [&] { return p.loss(); };
  for (Parameter* param : p.cell.parameters()) {
    const Tensor analytic = param->grad;
    EXPECT_LT(max_relative_error(analytic, numeric_gradient(param->value, f)), 1e-5) << param->name;
  }
}

TEST(Bptt, LengthOneEqualsSingleStepBackward) {
  UnrollProbe p = make_unroll(1, 9);
  p.backward();
  const Tensor w_input = p.cell.w_input.grad;

  // Single-step backward written out directly from the gate equations.
  LstmStepCache c;
  p.cell.step(LstmState::zeros(2, 4), p.inputs[0], &c);
  Tensor expect(Shape{16, 3});
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t k = b * 4 + j;
      const double dh = p.readout[0][k];
      const double dc = dh * c.out_gate[k] * (1 - c.tanh_cell[k] * c.tanh_cell[k]);
      const double dz[4] = {dc * c.candidate[k] * c.in_gate[k] * (1 - c.in_gate[k]), 0.0,
                            dc * c.in_gate[k] * (1 - c.candidate[k] * c.candidate[k]),
                            dh * c.tanh_cell[k] * c.out_gate[k] * (1 - c.out_gate[k])};
      for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t i = 0; i < 3; ++i) expect.at(gate * 4 + j, i) += dz[gate] * p.inputs[0].at(b, i);
      }
    }
  }
  EXPECT_LT(max_relative_error(w_input, expect, 1e-12), 1e-12);
}

TEST(Bptt, ZeroOutputGradsGiveZeroParameterGrads) {
  UnrollProbe p = make_unroll(4, 21);
  for (Tensor& r : p.readout) r.fill(0.0);
  p.backward();
  for (Parameter* param : p.cell.parameters()) EXPECT_EQ(param->grad.max_abs(), 0.0) << param->name;
}

TEST(Bptt, LengthMismatchThrows) {
  LstmCell cell("l", 2, 2);
  std::vector<LstmStepCache> caches(3);
  std::vector<Tensor> grads(2);
  EXPECT_THROW(bptt_backward(cell, caches, grads), DimensionError);
}

TEST(MseLoss, EqualPredictionAndTarget) {
  const Tensor p = Tensor::vector({1, 2, 3});
  const auto r = mse_loss(p, p, Tensor::vector({1, 0, 1}));
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad.max_abs(), 0.0);
}

TEST(MseLoss, HandArithmetic) {
  const auto r = mse_loss(Tensor::vector({0}), Tensor::vector({2}), Tensor::vector({1}));
  EXPECT_DOUBLE_EQ(r.loss, 4.0);
  EXPECT_DOUBLE_EQ(r.grad[0], -4.0);
}

TEST(MseLoss, AllZeroMaskIsAnError) {
  EXPECT_THROW(mse_loss(Tensor::vector({1}), Tensor::vector({2}), Tensor::vector({0})), std::invalid_argument);
  EXPECT_THROW(mse_loss(Tensor::vector({1}), Tensor::vector({2}), Tensor::vector({0.5})), std::invalid_argument);
}

TEST(MseLoss, MaskedGradientMatchesFiniteDifferences) {
  Rng rng(4);
  Tensor pred = random_tensor({4, 3}, rng);
  const Tensor target = random_tensor({4, 3}, rng);
  Tensor mask(Shape{4, 3});
  for (std::size_t r = 0; r < 4; ++r) mask.at(r, r % 3) = 1.0;
  const Tensor analytic = mse_loss(pred, target, mask).grad;
  const Tensor numeric = numeric_gradient(pred, [&] { return mse_loss(pred, target, mask).loss; });
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-6);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0.0) {
      EXPECT_EQ(analytic[i], 0.0);
    }
  }
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  Parameter p("w", Shape{3});
  p.value = Tensor::vector({1.0, 1.0, 1.0});
  p.grad = Tensor::vector({0.3, -20.0, 1e-2});
  Adam adam(AdamConfig{0.01});
  adam.apply({&p});
  EXPECT_NEAR(p.value[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value[1], 1.0 + 0.01, 1e-9);
  EXPECT_NEAR(p.value[2], 1.0 - 0.01, 1e-8);
  EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter p("w", Shape{2});
  p.value = Tensor::vector({0.5, -0.25});
  Adam adam;
  for (int i = 0; i < 5; ++i) adam.apply({&p});
  EXPECT_EQ(p.value, Tensor::vector({0.5, -0.25}));
  EXPECT_EQ(adam.step_count(), 5u);
}

TEST(Adam, ScalarQuadraticDescent) {
  Parameter w("w", Shape{1});
  Adam adam(AdamConfig{0.1});
  for (int i = 0; i < 100; ++i) {
    w.grad[0] = 2.0 * (w.value[0] - 3.0);
    adam.apply({&w});
  }
  EXPECT_LT(std::abs(w.value[0] - 3.0), 0.1);
}

TEST(Adam, NonFiniteGradientIsAnError) {
  Parameter w("w", Shape{1});
  w.grad[0] = std::numeric_limits<double>::quiet_NaN();
  Adam adam;
  EXPECT_THROW(adam.apply({&w}), NumericalError);
  EXPECT_EQ(w.value[0], 0.0);
}

TEST(GradCheck, ReportFlagsWrongGradient) {
  Parameter w("w", Shape{2});
  w.value = Tensor::vector({1.0, -2.0});
  auto loss = [&] { return w.value[0] * w.value[0] + 3.0 * w.value[1]; };
  const auto good = grad_check({&w}, loss, [&] { w.grad = Tensor::vector({2.0 * w.value[0], 3.0}); });
  EXPECT_TRUE(good.passed());
  const auto bad = grad_check({&w}, loss, [&] { w.grad = Tensor::vector({2.0 * w.value[0], 2.9}); });
  EXPECT_FALSE(bad.passed());
  EXPECT_GT(bad.entries[0].max_rel_error, 1e-2);
}

TEST(Archive, RoundTripIsBitExact) {
  Rng rng(99);
  std::uniform_int_distribution<int> dims(1, 5);
  for (int trial = 0; trial < 10; ++trial) {
    TensorArchive a;
    for (int k = 0; k < 4; ++k) {
      Shape shape(static_cast<std::size_t>(dims(rng)) % 3 + 1);
      for (auto& d : shape) d = static_cast<std::size_t>(dims(rng));
      Tensor t = random_tensor(shape, rng, -1e6, 1e6);
      t[0] = (k == 0) ? -0.0 : (k == 1 ? std::numeric_limits<double>::denorm_min() : t[0]);
      a.put("t" + std::to_string(k) + "/x", std::move(t));
    }
    std::stringstream ss;
    a.write(ss);
    const TensorArchive b = TensorArchive::read(ss);
    ASSERT_EQ(b.size(), a.size());
    for (const auto& [name, t] : a.entries()) {
      const Tensor& u = b.get(name);
      ASSERT_EQ(u.shape(), t.shape());
      EXPECT_EQ(std::memcmp(u.data(), t.data(), t.size() * sizeof(double)), 0) << name;
    }
  }
}

TEST(Archive, HeaderIsHumanReadable) {
  TensorArchive a;
  a.put("layer.weight", Tensor(Shape{2, 3}, 1.0));
  std::stringstream ss;
  a.write(ss);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("numkit-archive 1\ntensors 1\nlayer.weight 2 2 3\ndata\n", 0), 0u);
  EXPECT_EQ(text.size(), std::string("numkit-archive 1\ntensors 1\nlayer.weight 2 2 3\ndata\n").size() + 48);
}

TEST(Archive, RejectsTruncatedPayload) {
  TensorArchive a;
  a.put("x", Tensor(Shape{4}, 2.0));
  std::stringstream ss;
  a.write(ss);
  std::string text = ss.str();
  text.resize(text.size() - 3);
  std::stringstream truncated(text);
  EXPECT_THROW(TensorArchive::read(truncated), ArchiveError);
}

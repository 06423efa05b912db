#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "adrqn/agents/training.hpp"
#include "adrqn/numkit/conv2d.hpp"
#include "adrqn/numkit/dense.hpp"
#include "adrqn/numkit/grad_check.hpp"
#include "adrqn/numkit/loss.hpp"
#include "adrqn/numkit/lstm.hpp"

namespace adrqn::harness {

using numkit::Parameter;
using numkit::ParameterList;
using numkit::Shape;

struct GradFamily {
  std::string name;
  std::size_t instances = 0;
  double worst = 0.0;  // max relative error over all instances and entries
};

namespace detail {

inline Parameter random_parameter(const std::string& name, Shape shape, Rng& rng) {
  Parameter p(name, std::move(shape));
  numkit::fill_uniform(p.value, 1.0, rng);
  return p;
}

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double dense_instance(Rng& rng, const numkit::GradCheckOptions& o) {
  const std::size_t B = pick(rng, 1, 3), in = pick(rng, 2, 5), out = pick(rng, 2, 5);
  numkit::Dense layer("dense", in, out);
  layer.init(rng);
  numkit::fill_uniform(layer.bias.value, 0.5, rng);
  Parameter x = random_parameter("input", {B, in}, rng);
  const Tensor w = random_parameter("readout", {B, out}, rng).value;
  auto loss = [&] { return dot(layer.forward(x.value), w); };
  auto backward = [&] {
    numkit::zero_grads(layer.parameters());
    numkit::DenseCache c;
    layer.forward(x.value, &c);
    x.grad = layer.backward(c, w);
  };
  ParameterList targets = layer.parameters();
  targets.push_back(&x);
  return numkit::grad_check(targets, loss, backward, o).worst();
}

inline double conv_instance(Rng& rng, const numkit::GradCheckOptions& o) {
  const std::size_t B = pick(rng, 1, 2), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
  const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 2);
  const std::size_t oh = pick(rng, 2, 4), ow = pick(rng, 2, 4);
  const std::size_t h = (oh - 1) * stride + k, w_in = (ow - 1) * stride + k;
  numkit::Conv2d layer("conv", cin, cout, k, k, stride);
  layer.init(rng);
  numkit::fill_uniform(layer.bias.value, 0.5, rng);
  Parameter x = random_parameter("input", {B, cin, h, w_in}, rng);
  const Tensor w = random_parameter("readout", {B, cout, oh, ow}, rng).value;
  auto loss = [&] { return dot(layer.forward(x.value), w); };
  auto backward = [&] {
    numkit::zero_grads(layer.parameters());
    numkit::Conv2dCache c;
    layer.forward(x.value, &c);
    x.grad = layer.backward(c, w);
  };
  ParameterList targets = layer.parameters();
  targets.push_back(&x);
  return numkit::grad_check(targets, loss, backward, o).worst();
}

inline double lstm_instance(Rng& rng, std::size_t length, const numkit::GradCheckOptions& o) {
  const std::size_t B = pick(rng, 1, 2), in = pick(rng, 2, 4), H = pick(rng, 2, 4);
  numkit::LstmCell cell("lstm", in, H);
  cell.init(rng);
  numkit::fill_uniform(cell.bias.value, 0.5, rng);
  std::vector<Parameter> xs;
  std::vector<Tensor> readout;
  for (std::size_t t = 0; t < length; ++t) {
    xs.push_back(random_parameter("input" + std::to_string(t), {B, in}, rng));
    readout.push_back(random_parameter("readout", {B, H}, rng).value);
  }
  auto loss = [&] {
    numkit::LstmState s = numkit::LstmState::zeros(B, H);
    double total = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      auto [h, next] = cell.step(s, xs[t].value);
      total += dot(h, readout[t]);
      s = std::move(next);
    }
    return total;
  };
  auto backward = [&] {
    numkit::zero_grads(cell.parameters());
    std::vector<numkit::LstmStepCache> caches(length);
    numkit::LstmState s = numkit::LstmState::zeros(B, H);
    for (std::size_t t = 0; t < length; ++t) s = cell.step(s, xs[t].value, &caches[t]).second;
    auto dx = numkit::bptt_backward(cell, caches, readout);
    for (std::size_t t = 0; t < length; ++t) xs[t].grad = std::move(dx[t]);
  };
  ParameterList targets = cell.parameters();
  for (auto& x : xs) targets.push_back(&x);
  return numkit::grad_check(targets, loss, backward, o).worst();
}

inline double mse_instance(Rng& rng, const numkit::GradCheckOptions& o) {
  const std::size_t B = pick(rng, 1, 6), A = pick(rng, 2, 5);
  Parameter pred = random_parameter("pred", {B, A}, rng);
  const Tensor target = random_parameter("target", {B, A}, rng).value;
  Tensor mask(Shape{B, A});
  for (std::size_t b = 0; b < B; ++b) mask.at(b, pick(rng, 0, A - 1)) = 1.0;
  auto loss = [&] { return numkit::mse_loss(pred.value, target, mask).loss; };
  auto backward = [&] { pred.grad = numkit::mse_loss(pred.value, target, mask).grad; };
  return numkit::grad_check({&pred}, loss, backward, o).worst();
}

/// Whole Q-network loss on a synthetic batch (conv encoder, every parameter).
inline double network_instance(Rng& rng, agents::Variant v, const numkit::GradCheckOptions& o) {
  agents::NetworkSpec spec;
  spec.variant = v;
  spec.num_actions = 3;
  spec.obs_shape = {1, 4, 4};
  spec.encoder.conv = {{2, 2, 2}};
  spec.encoder.dense = {5};
  spec.action_embedding = 3;
  spec.hidden = 4;
  spec.unroll = 3;
  agents::QNetwork net(spec);
  net.init(rng);
  const std::size_t L = spec.window_length(), B = 2;
  agents::WindowBatch batch;
  agents::TdTargets td;
  for (std::size_t j = 0; j < L; ++j) {
    std::vector<agents::ActionId> prev(B), act(B);
    Tensor y(Shape{B, 3}), mask(Shape{B, 3});
    for (std::size_t b = 0; b < B; ++b) {
      prev[b] = pick(rng, 0, 2);
      act[b] = pick(rng, 0, 2);
      mask.at(b, act[b]) = 1.0;
      y.at(b, act[b]) = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    batch.prev_actions.push_back(prev);
    batch.actions.push_back(act);
    batch.obs.push_back(random_parameter("obs", {B, 1, 4, 4}, rng).value);
    td.targets.push_back(y);
    td.masks.push_back(mask);
  }
  auto loss = [&] {
    std::vector<agents::QNetwork::StepCache> caches;
    return agents::window_loss(agents::unroll_online(net, batch, caches), td).loss;
  };
  auto backward = [&] { agents::compute_gradients(net, batch, td); };
  return numkit::grad_check(net.parameters(), loss, backward, o).worst();
}

inline GradFamily run_family(const std::string& name, std::size_t n, std::uint64_t seed,
                             const std::function<double(Rng&)>& instance) {
  GradFamily f{name, n, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed * 1000003ull + i);
    f.worst = std::max(f.worst, instance(rng));
  }
  return f;
}

}  // namespace detail

/// Dense, conv, LSTM (L = 1 and L = 10) and masked MSE, `instances` random cases each.
inline std::vector<GradFamily> layer_gradient_suite(std::size_t instances = 20, std::uint64_t seed = 1,
                                                    numkit::GradCheckOptions o = {}) {
  using namespace detail;
  return {
      run_family("dense", instances, seed, [&](Rng& r) { return dense_instance(r, o); }),
      run_family("conv", instances, seed + 1, [&](Rng& r) { return conv_instance(r, o); }),
      run_family("lstm_L1", instances, seed + 2, [&](Rng& r) { return lstm_instance(r, 1, o); }),
      run_family("lstm_L10", instances, seed + 3, [&](Rng& r) { return lstm_instance(r, 10, o); }),
      run_family("masked_mse", instances, seed + 4, [&](Rng& r) { return mse_instance(r, o); }),
  };
}

/// End-to-end window loss of each network variant.
inline std::vector<GradFamily> network_gradient_suite(std::size_t instances = 3, std::uint64_t seed = 1,
                                                      numkit::GradCheckOptions o = {}) {
  std::vector<GradFamily> out;
  for (auto v : {agents::Variant::ADRQN, agents::Variant::DRQN, agents::Variant::DDRQN_ADAPTED, agents::Variant::DQN}) {
    out.push_back(detail::run_family("network_" + agents::to_string(v), instances, seed + 10,
                                     [&](Rng& r) { return detail::network_instance(r, v, o); }));
  }
  return out;
}

}  // namespace adrqn::harness

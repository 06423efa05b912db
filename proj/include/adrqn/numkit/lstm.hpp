#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::numkit {

/// Recurrent state of one LSTM layer. Shapes are [H] or [B, H].
struct LstmState {
  Tensor hidden;
  Tensor cell;

  static LstmState zeros(std::size_t hidden_size) {
    return {Tensor(Shape{hidden_size}), Tensor(Shape{hidden_size})};
  }
  static LstmState zeros(std::size_t batch, std::size_t hidden_size) {
    return {Tensor(Shape{batch, hidden_size}), Tensor(Shape{batch, hidden_size})};
  }

  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// Activations of one forward step, all [B, H] except `input` ([B, in]).
struct LstmStepCache {
  Tensor input;
  Tensor hidden_prev;
  Tensor cell_prev;
  Tensor in_gate;
  Tensor forget_gate;
  Tensor candidate;
  Tensor out_gate;
  Tensor tanh_cell;
  bool batched = true;
};

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

// Gate blocks inside the 4H pre-activation vector.
enum LstmGate : std::size_t { kInputGate = 0, kForgetGate = 1, kCandidate = 2, kOutputGate = 3 };

/// Standard LSTM cell without peepholes:
///   i, f, o = sigmoid(Wx x + Wh h + b)   g = tanh(Wx x + Wh h + b)
///   c' = f * c + i * g                    h' = o * tanh(c')
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t in, std::size_t hidden)
      : w_input(name + ".w_input", Shape{4 * hidden, in}),
        w_hidden(name + ".w_hidden", Shape{4 * hidden, hidden}),
        bias(name + ".bias", Shape{4 * hidden}) {}

  std::size_t input_size() const { return w_input.value.dim(1); }
  std::size_t hidden_size() const { return w_hidden.value.dim(1); }

  /// Forget-gate bias starts at 1, every other bias at 0.
  void init(Rng& rng) {
    const std::size_t H = hidden_size();
    glorot_uniform(w_input.value, input_size() + H, H, rng);
    glorot_uniform(w_hidden.value, input_size() + H, H, rng);
    bias.value.fill(0.0);
    for (std::size_t j = 0; j < H; ++j) bias.value[kForgetGate * H + j] = 1.0;
  }

  std::pair<Tensor, LstmState> step(const LstmState& state, const Tensor& x, LstmStepCache* cache = nullptr) const {
    const std::size_t H = hidden_size();
    const bool batched = x.rank() == 2;
    if (x.empty() || x.rank() > 2 || x.shape().back() != input_size()) {
      throw DimensionError("lstm_step: input size", x.shape(), Shape{input_size()});
    }
    const std::size_t B = batched ? x.dim(0) : 1;
    const Shape state_shape = batched ? Shape{B, H} : Shape{H};
    if (state.hidden.shape() != state_shape) throw DimensionError("lstm_step: hidden state", state.hidden.shape(), state_shape);
    if (state.cell.shape() != state_shape) throw DimensionError("lstm_step: cell state", state.cell.shape(), state_shape);

    RowMatrix z = as_matrix(x, B, input_size()) * as_matrix(w_input.value, 4 * H, input_size()).transpose();
    z.noalias() += as_matrix(state.hidden, B, H) * as_matrix(w_hidden.value, 4 * H, H).transpose();
    z.rowwise() += ConstVectorView(bias.value.data(), static_cast<Eigen::Index>(4 * H)).transpose();

    Tensor i(Shape{B, H}), f(Shape{B, H}), g(Shape{B, H}), o(Shape{B, H}), tc(Shape{B, H});
    LstmState next{Tensor(state_shape), Tensor(state_shape)};
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t k = b * H + j;
        const auto r = static_cast<Eigen::Index>(b);
        i[k] = detail::sigmoid(z(r, static_cast<Eigen::Index>(kInputGate * H + j)));
        f[k] = detail::sigmoid(z(r, static_cast<Eigen::Index>(kForgetGate * H + j)));
        g[k] = std::tanh(z(r, static_cast<Eigen::Index>(kCandidate * H + j)));
        o[k] = detail::sigmoid(z(r, static_cast<Eigen::Index>(kOutputGate * H + j)));
        const double c = f[k] * state.cell[k] + i[k] * g[k];
        tc[k] = std::tanh(c);
        next.cell[k] = c;
        next.hidden[k] = o[k] * tc[k];
      }
    }
    if (cache) {
      cache->input = x.reshaped(Shape{B, input_size()});
      cache->hidden_prev = state.hidden.reshaped(Shape{B, H});
      cache->cell_prev = state.cell.reshaped(Shape{B, H});
      cache->in_gate = std::move(i);
      cache->forget_gate = std::move(f);
      cache->candidate = std::move(g);
      cache->out_gate = std::move(o);
      cache->tanh_cell = std::move(tc);
      cache->batched = batched;
    }
    Tensor out = next.hidden;
    return {std::move(out), std::move(next)};
  }

  ParameterList parameters() { return {&w_input, &w_hidden, &bias}; }

  Parameter w_input;
  Parameter w_hidden;
  Parameter bias;
};

/// Truncated backpropagation through an unrolled LSTM.
///
/// `caches[t]` is the cache of forward step t, `output_grads[t]` is dL/dh_t
/// coming from whatever consumed h_t (an empty tensor counts as zero).
/// Parameter gradients are accumulated into `cell`; the gradient with respect
/// to the initial state is dropped because the unroll always starts from a
/// constant zero state. Returns dL/dx_t for every step.
inline std::vector<Tensor> bptt_backward(LstmCell& cell, std::span<const LstmStepCache> caches,
                                         std::span<const Tensor> output_grads) {
  if (caches.size() != output_grads.size()) {
    throw DimensionError("bptt_backward: cache length vs output gradient count", Shape{caches.size()},
                         Shape{output_grads.size()});
  }
  std::vector<Tensor> input_grads(caches.size());
  if (caches.empty()) return input_grads;

  const std::size_t H = cell.hidden_size();
  const std::size_t in = cell.input_size();
  const std::size_t B = caches.front().input.dim(0);

  RowMatrix dh_next = RowMatrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  RowMatrix dc_next = RowMatrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  RowMatrix dz(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(4 * H));

  auto w_input_grad = as_matrix(cell.w_input.grad, 4 * H, in);
  auto w_hidden_grad = as_matrix(cell.w_hidden.grad, 4 * H, H);
  VectorView bias_grad(cell.bias.grad.data(), static_cast<Eigen::Index>(4 * H));
  auto w_input = as_matrix(std::as_const(cell.w_input.value), 4 * H, in);
  auto w_hidden = as_matrix(std::as_const(cell.w_hidden.value), 4 * H, H);

  for (std::size_t t = caches.size(); t-- > 0;) {
    const LstmStepCache& c = caches[t];
    const Tensor& dout = output_grads[t];
    if (!dout.empty() && dout.size() != B * H) {
      throw DimensionError("bptt_backward: output gradient shape at step " + std::to_string(t), dout.shape(),
                           Shape{B, H});
    }
    for (std::size_t b = 0; b < B; ++b) {
      const auto r = static_cast<Eigen::Index>(b);
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t k = b * H + j;
        const auto col = static_cast<Eigen::Index>(j);
        const double dh = (dout.empty() ? 0.0 : dout[k]) + dh_next(r, col);
        const double o = c.out_gate[k], tc = c.tanh_cell[k];
        const double i = c.in_gate[k], f = c.forget_gate[k], g = c.candidate[k];
        const double dc = dh * o * (1.0 - tc * tc) + dc_next(r, col);
        dz(r, static_cast<Eigen::Index>(kInputGate * H + j)) = dc * g * i * (1.0 - i);
        dz(r, static_cast<Eigen::Index>(kForgetGate * H + j)) = dc * c.cell_prev[k] * f * (1.0 - f);
        dz(r, static_cast<Eigen::Index>(kCandidate * H + j)) = dc * i * (1.0 - g * g);
        dz(r, static_cast<Eigen::Index>(kOutputGate * H + j)) = dh * tc * o * (1.0 - o);
        dc_next(r, col) = dc * f;
      }
    }
    w_input_grad.noalias() += dz.transpose() * as_matrix(c.input, B, in);
    w_hidden_grad.noalias() += dz.transpose() * as_matrix(c.hidden_prev, B, H);
    bias_grad += dz.colwise().sum().transpose();

    Tensor dx(c.batched ? Shape{B, in} : Shape{in});
    as_matrix(dx, B, in).noalias() = dz * w_input;
    input_grads[t] = std::move(dx);
    dh_next.noalias() = dz * w_hidden;
  }
  return input_grads;
}

}  // namespace adrqn::numkit

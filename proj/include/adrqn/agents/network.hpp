#pragma once

#include <cctype>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrqn/numkit/archive.hpp"
#include "adrqn/numkit/conv2d.hpp"
#include "adrqn/numkit/dense.hpp"
#include "adrqn/numkit/lstm.hpp"

namespace adrqn::agents {

using numkit::LstmState;
using numkit::Parameter;
using numkit::ParameterList;
using numkit::Rng;
using numkit::Shape;
using numkit::Tensor;
using ActionId = std::size_t;

enum class Variant { ADRQN, DRQN, DDRQN_ADAPTED, DQN };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::ADRQN: return "adrqn";
    case Variant::DRQN: return "drqn";
    case Variant::DDRQN_ADAPTED: return "ddrqn";
    case Variant::DQN: return "dqn";
  }
  return "?";
}

inline Variant parse_variant(std::string name) {
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "adrqn") return Variant::ADRQN;
  if (name == "drqn") return Variant::DRQN;
  if (name == "ddrqn" || name == "ddrqn_adapted" || name == "ddrqn-adapted") return Variant::DDRQN_ADAPTED;
  if (name == "dqn") return Variant::DQN;
  throw std::invalid_argument("unknown network variant '" + name + "' (expected adrqn, drqn, ddrqn or dqn)");
}

struct ConvLayerSpec {
  std::size_t channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 1;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Observation encoder: optional conv stack (input [C, H, W]) then dense layers, all ReLU.
struct EncoderSpec {
  std::vector<ConvLayerSpec> conv;
  std::vector<std::size_t> dense{64};

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

struct NetworkSpec {
  Variant variant = Variant::ADRQN;
  std::size_t num_actions = 0;
  Shape obs_shape;  // per-step input, already frame-stacked for DQN
  EncoderSpec encoder;
  std::size_t action_embedding = 64;
  std::size_t hidden = 128;
  std::size_t unroll = 10;
  std::size_t stacked_frames = 4;

  bool recurrent() const { return variant != Variant::DQN; }
  /// Sampled window length: L for the recurrent variants, 1 for DQN.
  std::size_t window_length() const { return recurrent() ? unroll : 1; }

  void validate() const {
    if (num_actions < 2) throw std::invalid_argument("network needs at least two actions");
    if (obs_shape.empty()) throw std::invalid_argument("network observation shape is empty");
    if (hidden == 0 || unroll == 0) throw std::invalid_argument("hidden size and unroll length must be positive");
    if (variant == Variant::ADRQN && action_embedding == 0) throw std::invalid_argument("action embedding must be positive");
    if (!encoder.conv.empty() && obs_shape.size() != 3) {
      throw std::invalid_argument("conv encoder needs [C, H, W] observations, got " + numkit::shape_string(obs_shape));
    }
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Recurrent state of a network. DDRQN uses both LSTMs; ADRQN/DRQN only `main`; DQN none.
struct RecurrentState {
  LstmState main;
  LstmState action;

  friend bool operator==(const RecurrentState&, const RecurrentState&) = default;
};

struct QOutput {
  Tensor q;
  RecurrentState state;
};

class ObsEncoder {
 public:
  struct Cache {
    std::vector<numkit::Conv2dCache> conv;
    std::vector<numkit::ReluCache> conv_relu;
    std::vector<numkit::DenseCache> dense;
    std::vector<numkit::ReluCache> dense_relu;
    Shape conv_out_shape;
  };

  ObsEncoder() = default;
  ObsEncoder(const EncoderSpec& spec, const Shape& obs_shape) : obs_shape_(obs_shape) {
    Shape cur = obs_shape;
    for (std::size_t i = 0; i < spec.conv.size(); ++i) {
      const auto& c = spec.conv[i];
      conv_.emplace_back("encoder.conv" + std::to_string(i), cur[0], c.channels, c.kernel, c.kernel, c.stride);
      const auto [oh, ow] = conv_.back().output_size(cur[1], cur[2]);
      cur = Shape{c.channels, oh, ow};
    }
    std::size_t width = numkit::shape_size(cur);
    for (std::size_t i = 0; i < spec.dense.size(); ++i) {
      dense_.emplace_back("encoder.dense" + std::to_string(i), width, spec.dense[i]);
      width = spec.dense[i];
    }
    features_ = width;
  }

  std::size_t features() const { return features_; }

  void init(Rng& rng) {
    for (auto& c : conv_) c.init(rng);
    for (auto& d : dense_) d.init(rng);
  }

  /// obs [B, ...obs_shape] -> [B, features]
  Tensor forward(const Tensor& obs, Cache* cache) const {
    const std::size_t B = obs.dim(0);
    Tensor x = obs;
    if (cache) *cache = Cache{};
    for (std::size_t i = 0; i < conv_.size(); ++i) {
      numkit::Conv2dCache cc;
      x = conv_[i].forward(x, cache ? &cc : nullptr);
      numkit::ReluCache rc;
      x = numkit::relu_forward(x, cache ? &rc : nullptr);
      if (cache) {
        cache->conv.push_back(std::move(cc));
        cache->conv_relu.push_back(std::move(rc));
      }
    }
    if (cache) cache->conv_out_shape = x.shape();
    x.reshape(Shape{B, x.size() / B});
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      numkit::DenseCache dc;
      x = dense_[i].forward(x, cache ? &dc : nullptr);
      numkit::ReluCache rc;
      x = numkit::relu_forward(x, cache ? &rc : nullptr);
      if (cache) {
        cache->dense.push_back(std::move(dc));
        cache->dense_relu.push_back(std::move(rc));
      }
    }
    return x;
  }

  void backward(const Cache& cache, Tensor grad) {
    for (std::size_t i = dense_.size(); i-- > 0;) {
      grad = numkit::relu_backward(cache.dense_relu[i], grad);
      grad = dense_[i].backward(cache.dense[i], grad);
    }
    if (conv_.empty()) return;
    grad.reshape(cache.conv_out_shape);
    for (std::size_t i = conv_.size(); i-- > 0;) {
      grad = numkit::relu_backward(cache.conv_relu[i], grad);
      grad = conv_[i].backward(cache.conv[i], grad);
    }
  }

  ParameterList parameters() {
    ParameterList out;
    for (auto& c : conv_)
      for (auto* p : c.parameters()) out.push_back(p);
    for (auto& d : dense_)
      for (auto* p : d.parameters()) out.push_back(p);
    return out;
  }

 private:
  Shape obs_shape_;
  std::vector<numkit::Conv2d> conv_;
  std::vector<numkit::Dense> dense_;
  std::size_t features_ = 0;
};

/// Q-network for all four variants behind one interface.
///
///   ADRQN  q = head(LSTM([enc(o), embed(onehot(a_prev))]))
///   DRQN   q = head(LSTM(enc(o)))
///   DDRQN  q = head([LSTM_o(enc(o)), LSTM_a(onehot(a_prev))])
///   DQN    q = head(relu(fc(enc(o))))
class QNetwork {
 public:
  struct StepCache {
    ObsEncoder::Cache encoder;
    numkit::DenseCache embed;
    numkit::LstmStepCache main;
    numkit::LstmStepCache action;
    numkit::DenseCache fc;
    numkit::ReluCache fc_relu;
    numkit::DenseCache head;
  };

  explicit QNetwork(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    encoder_ = ObsEncoder(spec_.encoder, spec_.obs_shape);
    const std::size_t F = encoder_.features(), A = spec_.num_actions, H = spec_.hidden;
    switch (spec_.variant) {
      case Variant::ADRQN:
        embed_ = numkit::Dense("embed", A, spec_.action_embedding);
        main_ = numkit::LstmCell("lstm", F + spec_.action_embedding, H);
        head_ = numkit::Dense("head", H, A);
        break;
      case Variant::DRQN:
        main_ = numkit::LstmCell("lstm", F, H);
        head_ = numkit::Dense("head", H, A);
        break;
      case Variant::DDRQN_ADAPTED:
        main_ = numkit::LstmCell("lstm", F, H);
        action_ = numkit::LstmCell("action_lstm", A, H);
        head_ = numkit::Dense("head", 2 * H, A);
        break;
      case Variant::DQN:
        fc_ = numkit::Dense("fc", F, H);
        head_ = numkit::Dense("head", H, A);
        break;
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  ObsEncoder& encoder() { return encoder_; }
  numkit::Dense& embedding() { return embed_; }
  numkit::LstmCell& lstm() { return main_; }
  numkit::LstmCell& action_lstm() { return action_; }
  numkit::Dense& head() { return head_; }

  void init(Rng& rng) {
    encoder_.init(rng);
    if (spec_.variant == Variant::ADRQN) embed_.init(rng);
    if (spec_.recurrent()) main_.init(rng);
    if (spec_.variant == Variant::DDRQN_ADAPTED) action_.init(rng);
    if (spec_.variant == Variant::DQN) fc_.init(rng);
    head_.init(rng);
  }

  ParameterList parameters() {
    ParameterList out = encoder_.parameters();
    auto add = [&out](ParameterList ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    if (spec_.variant == Variant::ADRQN) add(embed_.parameters());
    if (spec_.recurrent()) add(main_.parameters());
    if (spec_.variant == Variant::DDRQN_ADAPTED) add(action_.parameters());
    if (spec_.variant == Variant::DQN) add(fc_.parameters());
    add(head_.parameters());
    return out;
  }

  RecurrentState initial_state(std::size_t batch = 1) const {
    RecurrentState s;
    if (spec_.recurrent()) s.main = LstmState::zeros(batch, spec_.hidden);
    if (spec_.variant == Variant::DDRQN_ADAPTED) s.action = LstmState::zeros(batch, spec_.hidden);
    return s;
  }

  /// One batched step. obs is [B, ...obs_shape], the state has batch B. Returns q [B, A].
  QOutput step(const RecurrentState& state, std::span<const ActionId> prev_actions, const Tensor& obs,
               StepCache* cache = nullptr) const {
    Shape expect{prev_actions.size()};
    expect.insert(expect.end(), spec_.obs_shape.begin(), spec_.obs_shape.end());
    if (obs.shape() != expect) throw numkit::DimensionError("q_forward: observation batch", obs.shape(), expect);
    for (ActionId a : prev_actions) {
      if (a >= spec_.num_actions) {
        throw std::invalid_argument("q_forward: previous action " + std::to_string(a) + " out of range");
      }
    }
    QOutput out;
    Tensor feat = encoder_.forward(obs, cache ? &cache->encoder : nullptr);
    Tensor top;
    switch (spec_.variant) {
      case Variant::ADRQN: {
        const Tensor emb = embed_.forward(numkit::one_hot(prev_actions, spec_.num_actions), cache ? &cache->embed : nullptr);
        auto [h, next] = main_.step(state.main, numkit::concat_columns(feat, emb), cache ? &cache->main : nullptr);
        top = std::move(h);
        out.state.main = std::move(next);
        break;
      }
      case Variant::DRQN: {
        auto [h, next] = main_.step(state.main, feat, cache ? &cache->main : nullptr);
        top = std::move(h);
        out.state.main = std::move(next);
        break;
      }
      case Variant::DDRQN_ADAPTED: {
        auto [ho, next_o] = main_.step(state.main, feat, cache ? &cache->main : nullptr);
        auto [ha, next_a] = action_.step(state.action, numkit::one_hot(prev_actions, spec_.num_actions),
                                         cache ? &cache->action : nullptr);
        top = numkit::concat_columns(ho, ha);
        out.state.main = std::move(next_o);
        out.state.action = std::move(next_a);
        break;
      }
      case Variant::DQN: {
        top = numkit::relu_forward(fc_.forward(feat, cache ? &cache->fc : nullptr), cache ? &cache->fc_relu : nullptr);
        break;
      }
    }
    out.q = head_.forward(top, cache ? &cache->head : nullptr);
    return out;
  }

  /// Unbatched convenience for acting: obs has the spec's shape, state batch 1, q is [A].
  QOutput forward(const RecurrentState& state, ActionId prev_action, const Tensor& obs) const {
    Shape batched{1};
    batched.insert(batched.end(), obs.shape().begin(), obs.shape().end());
    const ActionId prev[1] = {prev_action};
    QOutput out = step(state, prev, obs.reshaped(batched));
    out.q.reshape(Shape{spec_.num_actions});
    return out;
  }

  /// Backpropagates dL/dq for every step of an unroll that started from a constant state.
  void backward(std::span<const StepCache> caches, std::span<const Tensor> dq) {
    if (caches.size() != dq.size()) {
      throw numkit::DimensionError("q_backward: cache vs gradient count", Shape{caches.size()}, Shape{dq.size()});
    }
    const std::size_t T = caches.size(), H = spec_.hidden;
    std::vector<Tensor> dtop(T);
    for (std::size_t t = 0; t < T; ++t) dtop[t] = head_.backward(caches[t].head, dq[t]);

    std::vector<Tensor> dfeat(T);
    switch (spec_.variant) {
      case Variant::ADRQN: {
        std::vector<numkit::LstmStepCache> lc;
        for (const auto& c : caches) lc.push_back(c.main);
        const auto dx = numkit::bptt_backward(main_, lc, dtop);
        const std::size_t F = encoder_.features();
        for (std::size_t t = 0; t < T; ++t) {
          auto [df, demb] = numkit::split_columns(dx[t], F);
          embed_.backward(caches[t].embed, demb);
          dfeat[t] = std::move(df);
        }
        break;
      }
      case Variant::DRQN: {
        std::vector<numkit::LstmStepCache> lc;
        for (const auto& c : caches) lc.push_back(c.main);
        dfeat = numkit::bptt_backward(main_, lc, dtop);
        break;
      }
      case Variant::DDRQN_ADAPTED: {
        std::vector<numkit::LstmStepCache> lo, la;
        std::vector<Tensor> dho(T), dha(T);
        for (std::size_t t = 0; t < T; ++t) {
          lo.push_back(caches[t].main);
          la.push_back(caches[t].action);
          auto [a, b] = numkit::split_columns(dtop[t], H);
          dho[t] = std::move(a);
          dha[t] = std::move(b);
        }
        dfeat = numkit::bptt_backward(main_, lo, dho);
        numkit::bptt_backward(action_, la, dha);
        break;
      }
      case Variant::DQN: {
        for (std::size_t t = 0; t < T; ++t) {
          dfeat[t] = fc_.backward(caches[t].fc, numkit::relu_backward(caches[t].fc_relu, dtop[t]));
        }
        break;
      }
    }
    for (std::size_t t = 0; t < T; ++t) encoder_.backward(caches[t].encoder, std::move(dfeat[t]));
  }

  /// Copies every parameter value from a network with an identical spec.
  void copy_parameters_from(QNetwork& other) {
    if (!(other.spec_ == spec_)) throw std::invalid_argument("sync_target: network specs differ");
    auto dst = parameters();
    auto src = other.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
  }

  void save(numkit::TensorArchive& archive, const std::string& prefix) {
    for (Parameter* p : parameters()) archive.put(prefix + p->name, p->value);
  }

  void load(const numkit::TensorArchive& archive, const std::string& prefix) {
    for (Parameter* p : parameters()) {
      const Tensor& t = archive.get(prefix + p->name);
      if (t.shape() != p->value.shape()) {
        throw numkit::DimensionError("checkpoint parameter " + p->name, t.shape(), p->value.shape());
      }
      p->value = t;
    }
  }

 private:
  NetworkSpec spec_;
  ObsEncoder encoder_;
  numkit::Dense embed_;
  numkit::LstmCell main_;
  numkit::LstmCell action_;
  numkit::Dense fc_;
  numkit::Dense head_;
};

}  // namespace adrqn::agents

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::numkit {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are created on the first
/// apply and must keep matching the parameter list afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  void apply(const ParameterList& params) {
    for (const Parameter* p : params) {
      if (!p->grad.all_finite()) throw NumericalError("adam_apply: non-finite gradient in " + p->name);
    }
    if (m_.empty()) {
      for (const Parameter* p : params) {
        m_.push_back(Tensor::zeros_like(p->value));
        v_.push_back(Tensor::zeros_like(p->value));
      }
    }
    check_shapes(params);

    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter& p = *params[k];
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

  /// Restores optimizer state saved from another instance.
  void restore(std::uint64_t step, std::vector<Tensor> m, std::vector<Tensor> v) {
    if (m.size() != v.size()) throw std::invalid_argument("adam restore: moment count mismatch");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  void check_shapes(const ParameterList& params) const {
    if (params.size() != m_.size()) {
      throw DimensionError("adam_apply: parameter count changed", Shape{params.size()}, Shape{m_.size()});
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k]->value.shape() != m_[k].shape()) {
        throw DimensionError("adam_apply: moment shape for " + params[k]->name, params[k]->value.shape(),
                             m_[k].shape());
      }
    }
  }

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace adrqn::numkit

#pragma once

#include <string>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::numkit {

struct DenseCache {
  Tensor input;
};

/// Fully connected layer y = W x + b, applied to the last axis of x.
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out)
      : weight(name + ".weight", Shape{out, in}), bias(name + ".bias", Shape{out}) {}

  std::size_t in_features() const { return weight.value.dim(1); }
  std::size_t out_features() const { return weight.value.dim(0); }

  void init(Rng& rng) {
    glorot_uniform(weight.value, in_features(), out_features(), rng);
    bias.value.fill(0.0);
  }

  Tensor forward(const Tensor& x, DenseCache* cache = nullptr) const {
    if (x.empty() || x.shape().back() != in_features()) {
      throw DimensionError("dense_forward: input last dimension must equal weight input dimension", x.shape(),
                           weight.value.shape());
    }
    Shape out_shape = x.shape();
    out_shape.back() = out_features();
    Tensor y(out_shape);
    auto X = as_rows(x);
    auto Y = as_rows(y);
    Y.noalias() = X * as_matrix(weight.value, out_features(), in_features()).transpose();
    Y.rowwise() += ConstVectorView(bias.value.data(), static_cast<Eigen::Index>(out_features())).transpose();
    if (cache) cache->input = x;
    return y;
  }

  /// Accumulates dW, db and returns dL/dx.
  Tensor backward(const DenseCache& cache, const Tensor& dy) {
    Shape expect = cache.input.shape();
    expect.back() = out_features();
    if (dy.shape() != expect) throw DimensionError("dense_backward: output gradient shape", dy.shape(), expect);
    auto X = as_rows(cache.input);
    auto dY = as_rows(dy);
    as_matrix(weight.grad, out_features(), in_features()).noalias() += dY.transpose() * X;
    VectorView(bias.grad.data(), static_cast<Eigen::Index>(out_features())) += dY.colwise().sum().transpose();
    Tensor dx(cache.input.shape());
    as_rows(dx).noalias() = dY * as_matrix(weight.value, out_features(), in_features());
    return dx;
  }

  ParameterList parameters() { return {&weight, &bias}; }

  Parameter weight;
  Parameter bias;
};

struct ReluCache {
  Tensor output;
};

inline Tensor relu_forward(const Tensor& x, ReluCache* cache = nullptr) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  if (cache) cache->output = y;
  return y;
}

inline Tensor relu_backward(const ReluCache& cache, const Tensor& dy) {
  cache.output.require_same_shape(dy, "relu_backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (cache.output[i] <= 0.0) dx[i] = 0.0;
  }
  return dx;
}

}  // namespace adrqn::numkit

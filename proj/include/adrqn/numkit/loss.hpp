#pragma once

#include <stdexcept>

#include "adrqn/numkit/tensor.hpp"

namespace adrqn::numkit {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dL/dpred
};

/// Mean squared error over the entries where mask == 1.
inline LossResult mse_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  pred.require_same_shape(target, "mse_loss: pred vs target");
  pred.require_same_shape(mask, "mse_loss: pred vs mask");
  std::size_t count = 0;
  for (double m : mask.values()) {
    if (m != 0.0 && m != 1.0) throw std::invalid_argument("mse_loss: mask entries must be 0 or 1");
    if (m == 1.0) ++count;
  }
  if (count == 0) throw std::invalid_argument("mse_loss: mask selects no entries, mean is undefined");

  LossResult out{0.0, Tensor::zeros_like(pred)};
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double diff = pred[i] - target[i];
    out.loss += diff * diff * scale;
    out.grad[i] = 2.0 * diff * scale;
  }
  return out;
}

}  // namespace adrqn::numkit

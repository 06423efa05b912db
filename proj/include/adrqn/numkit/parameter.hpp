#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adrqn/numkit/tensor.hpp"

namespace adrqn::numkit {

using Rng = std::mt19937_64;

/// A trainable tensor together with its gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(std::move(shape)) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

inline void fill_uniform(Tensor& t, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
}

/// Glorot/Xavier uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
inline void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  fill_uniform(t, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

// Eigen views over row-major tensor storage.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;
using VectorView = Eigen::Map<Eigen::VectorXd>;

inline MatrixView as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixView(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline ConstMatrixView as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixView(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// Views a batched tensor as [rows, last_dim].
inline ConstMatrixView as_rows(const Tensor& t) {
  const std::size_t cols = t.shape().back();
  return as_matrix(t, t.size() / cols, cols);
}
inline MatrixView as_rows(Tensor& t) {
  const std::size_t cols = t.shape().back();
  return as_matrix(t, t.size() / cols, cols);
}

}  // namespace adrqn::numkit

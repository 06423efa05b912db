#pragma once

#include <string>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::numkit {

struct Conv2dCache {
  Tensor input;  // always [B, C, H, W]
  bool batched = true;
};

/// Valid (unpadded) 2-D cross-correlation with a square stride.
///
/// Accepts [C, H, W] or [B, C, H, W]; the output keeps the input's rank.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
         std::size_t kernel_w, std::size_t stride = 1)
      : weight(name + ".weight", Shape{out_channels, in_channels, kernel_h, kernel_w}),
        bias(name + ".bias", Shape{out_channels}),
        stride_(stride) {
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  }

  std::size_t in_channels() const { return weight.value.dim(1); }
  std::size_t out_channels() const { return weight.value.dim(0); }
  std::size_t kernel_h() const { return weight.value.dim(2); }
  std::size_t kernel_w() const { return weight.value.dim(3); }
  std::size_t stride() const { return stride_; }

  void init(Rng& rng) {
    const std::size_t area = kernel_h() * kernel_w();
    glorot_uniform(weight.value, in_channels() * area, out_channels() * area, rng);
    bias.value.fill(0.0);
  }

  /// Output spatial size for an input of h x w; throws when the kernel does not tile exactly.
  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const {
    if (kernel_h() > h || kernel_w() > w) {
      throw DimensionError("conv2d: kernel larger than input", Shape{kernel_h(), kernel_w()}, Shape{h, w});
    }
    if ((h - kernel_h()) % stride_ != 0 || (w - kernel_w()) % stride_ != 0) {
      throw DimensionError("conv2d: non-integral output size for stride " + std::to_string(stride_),
                           Shape{kernel_h(), kernel_w()}, Shape{h, w});
    }
    return {(h - kernel_h()) / stride_ + 1, (w - kernel_w()) / stride_ + 1};
  }

  Tensor forward(const Tensor& x, Conv2dCache* cache = nullptr) const {
    const Tensor input = as_batched(x);
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const auto [OH, OW] = output_size(H, W);
    const std::size_t K = out_channels(), KH = kernel_h(), KW = kernel_w();
    Tensor y(Shape{B, K, OH, OW});
    const double* in = input.data();
    const double* w = weight.value.data();
    double* out = y.data();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
          for (std::size_t ox = 0; ox < OW; ++ox) {
            double acc = bias.value[k];
            for (std::size_t c = 0; c < C; ++c) {
              for (std::size_t ky = 0; ky < KH; ++ky) {
                const double* row = in + ((b * C + c) * H + oy * stride_ + ky) * W + ox * stride_;
                const double* wrow = w + ((k * C + c) * KH + ky) * KW;
                for (std::size_t kx = 0; kx < KW; ++kx) acc += row[kx] * wrow[kx];
              }
            }
            out[((b * K + k) * OH + oy) * OW + ox] = acc;
          }
        }
      }
    }
    if (cache) {
      cache->input = input;
      cache->batched = x.rank() == 4;
    }
    if (x.rank() == 3) y.reshape(Shape{K, OH, OW});
    return y;
  }

  Tensor backward(const Conv2dCache& cache, const Tensor& dy_in) {
    const Tensor& input = cache.input;
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const auto [OH, OW] = output_size(H, W);
    const std::size_t K = out_channels(), KH = kernel_h(), KW = kernel_w();
    const Shape expect{B, K, OH, OW};
    if (shape_size(dy_in.shape()) != shape_size(expect)) {
      throw DimensionError("conv2d_backward: output gradient shape", dy_in.shape(), expect);
    }
    const double* dy = dy_in.data();
    const double* in = input.data();
    const double* w = weight.value.data();
    double* dw = weight.grad.data();
    Tensor dx(input.shape());
    double* dxp = dx.data();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
          for (std::size_t ox = 0; ox < OW; ++ox) {
            const double g = dy[((b * K + k) * OH + oy) * OW + ox];
            if (g == 0.0) continue;
            bias.grad[k] += g;
            for (std::size_t c = 0; c < C; ++c) {
              for (std::size_t ky = 0; ky < KH; ++ky) {
                const std::size_t in_off = ((b * C + c) * H + oy * stride_ + ky) * W + ox * stride_;
                const std::size_t w_off = ((k * C + c) * KH + ky) * KW;
                for (std::size_t kx = 0; kx < KW; ++kx) {
                  dw[w_off + kx] += g * in[in_off + kx];
                  dxp[in_off + kx] += g * w[w_off + kx];
                }
              }
            }
          }
        }
      }
    }
    if (!cache.batched) dx.reshape(Shape{C, H, W});
    return dx;
  }

  ParameterList parameters() { return {&weight, &bias}; }

  Parameter weight;
  Parameter bias;

 private:
  Tensor as_batched(const Tensor& x) const {
    if (x.rank() == 4 && x.dim(1) == in_channels()) return x;
    if (x.rank() == 3 && x.dim(0) == in_channels()) return x.reshaped(Shape{1, x.dim(0), x.dim(1), x.dim(2)});
    throw DimensionError("conv2d: expected [C, H, W] or [B, C, H, W] with matching channels", x.shape(),
                         weight.value.shape());
  }

  std::size_t stride_ = 1;
};

}  // namespace adrqn::numkit

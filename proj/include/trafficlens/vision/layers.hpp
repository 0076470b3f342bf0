#pragma once

#include <limits>
#include <vector>

#include "trafficlens/vision/tensor.hpp"

namespace trafficlens::vision {

inline std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  require(in + 2 * pad >= k, ErrorKind::kShape, "convolution kernel larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

// kernels laid out [filter][dy][dx][channel].
inline Tensor conv2d(const Tensor& in, std::span<const double> kernels, std::span<const double> bias,
                     std::size_t k, std::size_t stride = 1, std::size_t pad = 1) {
  require(k % 2 == 1, ErrorKind::kShape, "kernel size must be odd");
  require(stride >= 1, ErrorKind::kConfig, "stride must be at least 1");
  const std::size_t filters = bias.size();
  require(kernels.size() == filters * k * k * in.channels, ErrorKind::kShape,
          "kernel channels do not match the input (" + std::to_string(in.channels) + " channels)");
  const std::size_t oh = conv_output_size(in.height, k, stride, pad);
  const std::size_t ow = conv_output_size(in.width, k, stride, pad);
  Tensor out(in.batch, oh, ow, filters);
  const std::size_t C = in.channels;
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double* o = &out.at(b, y, x, 0);
        for (std::size_t f = 0; f < filters; ++f) o[f] = bias[f];
        for (std::size_t dy = 0; dy < k; ++dy) {
          const auto iy = static_cast<std::ptrdiff_t>(y * stride + dy) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const auto ix = static_cast<std::ptrdiff_t>(x * stride + dx) - static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
            const double* src = &in.at(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
            for (std::size_t f = 0; f < filters; ++f) {
              const double* w = &kernels[((f * k + dy) * k + dx) * C];
              double acc = 0.0;
              for (std::size_t c = 0; c < C; ++c) acc += src[c] * w[c];
              o[f] += acc;
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates into grad_kernels/grad_bias; returns the input gradient.
inline Tensor conv2d_backward(const Tensor& in, std::span<const double> kernels, const Tensor& grad_out,
                              std::size_t k, std::size_t stride, std::size_t pad, std::span<double> grad_kernels,
                              std::span<double> grad_bias) {
  const std::size_t filters = grad_out.channels;
  const std::size_t C = in.channels;
  Tensor grad_in(in.batch, in.height, in.width, in.channels);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t y = 0; y < grad_out.height; ++y) {
      for (std::size_t x = 0; x < grad_out.width; ++x) {
        const double* g = &grad_out.at(b, y, x, 0);
        for (std::size_t f = 0; f < filters; ++f) grad_bias[f] += g[f];
        for (std::size_t dy = 0; dy < k; ++dy) {
          const auto iy = static_cast<std::ptrdiff_t>(y * stride + dy) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const auto ix = static_cast<std::ptrdiff_t>(x * stride + dx) - static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
            const std::size_t base = in.index(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
            const double* src = &in.data[base];
            double* gi = &grad_in.data[base];
            for (std::size_t f = 0; f < filters; ++f) {
              const std::size_t w0 = ((f * k + dy) * k + dx) * C;
              for (std::size_t c = 0; c < C; ++c) {
                grad_kernels[w0 + c] += g[f] * src[c];
                gi[c] += g[f] * kernels[w0 + c];
              }
            }
          }
        }
      }
    }
  }
  return grad_in;
}

struct Pooled {
  Tensor out;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// First maximum in row-major window order wins ties.
inline Pooled maxpool2x2(const Tensor& in) {
  require(in.height % 2 == 0 && in.width % 2 == 0, ErrorKind::kShape,
          "max pooling needs even spatial dimensions, got " + std::to_string(in.height) + "x" +
              std::to_string(in.width));
  Pooled p{Tensor(in.batch, in.height / 2, in.width / 2, in.channels), {}};
  p.argmax.resize(p.out.size());
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t y = 0; y < p.out.height; ++y) {
      for (std::size_t x = 0; x < p.out.width; ++x) {
        for (std::size_t c = 0; c < in.channels; ++c) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t arg = 0;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t i = in.index(b, 2 * y + dy, 2 * x + dx, c);
              if (in.data[i] > best) {
                best = in.data[i];
                arg = i;
              }
            }
          }
          const std::size_t o = p.out.index(b, y, x, c);
          p.out.data[o] = best;
          p.argmax[o] = arg;
        }
      }
    }
  }
  return p;
}

inline Tensor maxpool2x2_backward(const Tensor& in, const std::vector<std::size_t>& argmax, const Tensor& grad_out) {
  Tensor grad_in(in.batch, in.height, in.width, in.channels);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in.data[argmax[o]] += grad_out.data[o];
  return grad_in;
}

inline Tensor relu(Tensor t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
  return t;
}

inline Tensor relu_backward(const Tensor& in, Tensor grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(in.data[i] > 0.0)) grad.data[i] = 0.0;
  }
  return grad;
}

// Treats each sample as a flat vector; weights laid out [out][in].
inline Tensor dense(const Tensor& in, std::span<const double> weights, std::span<const double> bias) {
  const std::size_t n_in = in.per_sample();
  const std::size_t n_out = bias.size();
  require(weights.size() == n_in * n_out, ErrorKind::kShape,
          "dense layer expects " + std::to_string(weights.size() / std::max<std::size_t>(n_out, 1)) +
              " inputs, got " + std::to_string(n_in));
  Tensor out(in.batch, 1, 1, n_out);
  for (std::size_t b = 0; b < in.batch; ++b) {
    const auto x = in.sample(b);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = &weights[o * n_in];
      double acc = bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      out.data[b * n_out + o] = acc;
    }
  }
  return out;
}

inline Tensor dense_backward(const Tensor& in, std::span<const double> weights, const Tensor& grad_out,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::size_t n_in = in.per_sample();
  const std::size_t n_out = grad_out.per_sample();
  Tensor grad_in(in.batch, in.height, in.width, in.channels);
  for (std::size_t b = 0; b < in.batch; ++b) {
    const auto x = in.sample(b);
    double* gi = &grad_in.data[b * n_in];
    for (std::size_t o = 0; o < n_out; ++o) {
      const double g = grad_out.data[b * n_out + o];
      grad_bias[o] += g;
      double* gw = &grad_weights[o * n_in];
      const double* w = &weights[o * n_in];
      for (std::size_t i = 0; i < n_in; ++i) {
        gw[i] += g * x[i];
        gi[i] += g * w[i];
      }
    }
  }
  return grad_in;
}

}  // namespace trafficlens::vision

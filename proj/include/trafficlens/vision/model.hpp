#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "trafficlens/core/matrix.hpp"
#include "trafficlens/core/numeric.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/vision/layers.hpp"

namespace trafficlens::vision {

struct Conv {
  std::size_t in_channels = 0, filters = 0, kernel = 3, stride = 1, pad = 1;
  std::vector<double> weights, bias;
  bool operator==(const Conv&) const = default;
};
struct Relu {
  bool operator==(const Relu&) const = default;
};
struct MaxPool {
  bool operator==(const MaxPool&) const = default;
};
struct Dense {
  std::size_t inputs = 0, outputs = 0;
  std::vector<double> weights, bias;
  bool operator==(const Dense&) const = default;
};

using Layer = std::variant<Conv, Relu, MaxPool, Dense>;

// Sequential stack; the last layer produces logits and softmax is applied
// by forward() and the loss.
struct CnnModel {
  std::size_t input_height = 32, input_width = 32, input_channels = 1;
  std::size_t num_classes = kNumImageClasses;
  std::vector<Layer> layers;

  bool operator==(const CnnModel&) const = default;
};

inline const char* layer_name(const Layer& l) {
  return std::visit(
      [](const auto& v) -> const char* {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Conv>) return "conv";
        if constexpr (std::is_same_v<T, Relu>) return "relu";
        if constexpr (std::is_same_v<T, MaxPool>) return "maxpool";
        return "dense";
      },
      l);
}

// Uniform He initialisation, bound sqrt(6 / fan_in); biases start at zero.
inline void he_uniform(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : w) v = rng.uniform(-bound, bound);
}

inline Conv make_conv(std::size_t in_c, std::size_t filters, Rng& rng) {
  Conv c{in_c, filters, 3, 1, 1, std::vector<double>(filters * 9 * in_c), std::vector<double>(filters, 0.0)};
  he_uniform(c.weights, 9 * in_c, rng);
  return c;
}

inline Dense make_dense(std::size_t in, std::size_t out, Rng& rng) {
  Dense d{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
  he_uniform(d.weights, in, rng);
  return d;
}

// Conv(3x3, 8) -> ReLU -> MaxPool -> Conv(3x3, 16) -> ReLU -> MaxPool ->
// Dense(64) -> ReLU -> Dense(classes). Input sides must be multiples of 4.
inline CnnModel make_trafficnet(std::uint64_t seed, std::size_t side = 32, std::size_t channels = 1,
                                std::size_t num_classes = kNumImageClasses) {
  require(side >= 4 && side % 4 == 0, ErrorKind::kShape, "input side must be a positive multiple of 4");
  Rng rng(seed);
  CnnModel m{side, side, channels, num_classes, {}};
  m.layers.emplace_back(make_conv(channels, 8, rng));
  m.layers.emplace_back(Relu{});
  m.layers.emplace_back(MaxPool{});
  m.layers.emplace_back(make_conv(8, 16, rng));
  m.layers.emplace_back(Relu{});
  m.layers.emplace_back(MaxPool{});
  m.layers.emplace_back(make_dense((side / 4) * (side / 4) * 16, 64, rng));
  m.layers.emplace_back(Relu{});
  m.layers.emplace_back(make_dense(64, num_classes, rng));
  return m;
}

// Parameter groups in layer order: weights then bias of each conv/dense.
inline std::vector<std::vector<double>*> parameters(CnnModel& m) {
  std::vector<std::vector<double>*> out;
  for (auto& l : m.layers) {
    if (auto* c = std::get_if<Conv>(&l)) {
      out.push_back(&c->weights);
      out.push_back(&c->bias);
    } else if (auto* d = std::get_if<Dense>(&l)) {
      out.push_back(&d->weights);
      out.push_back(&d->bias);
    }
  }
  return out;
}

inline std::size_t parameter_count(const CnnModel& m) {
  std::size_t n = 0;
  for (auto* p : parameters(const_cast<CnnModel&>(m))) n += p->size();
  return n;
}

using Gradients = std::vector<std::vector<double>>;

inline Gradients zero_gradients(const CnnModel& m) {
  Gradients g;
  for (auto* p : parameters(const_cast<CnnModel&>(m))) g.emplace_back(p->size(), 0.0);
  return g;
}

struct ForwardTrace {
  std::vector<Tensor> inputs;  // input of every layer
  std::vector<std::vector<std::size_t>> argmax;
  Tensor logits;
};

inline void check_input(const CnnModel& m, const Tensor& x) {
  require(x.height == m.input_height && x.width == m.input_width && x.channels == m.input_channels,
          ErrorKind::kShape,
          "model expects " + std::to_string(m.input_height) + "x" + std::to_string(m.input_width) + "x" +
              std::to_string(m.input_channels) + " input, got " + std::to_string(x.height) + "x" +
              std::to_string(x.width) + "x" + std::to_string(x.channels));
}

inline ForwardTrace forward_trace(const CnnModel& m, const Tensor& x) {
  check_input(m, x);
  ForwardTrace t;
  t.argmax.resize(m.layers.size());
  Tensor cur = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    t.inputs.push_back(cur);
    const auto& l = m.layers[i];
    if (const auto* c = std::get_if<Conv>(&l)) {
      cur = conv2d(cur, c->weights, c->bias, c->kernel, c->stride, c->pad);
    } else if (std::holds_alternative<Relu>(l)) {
      cur = relu(std::move(cur));
    } else if (std::holds_alternative<MaxPool>(l)) {
      auto p = maxpool2x2(cur);
      cur = std::move(p.out);
      t.argmax[i] = std::move(p.argmax);
    } else {
      const auto& d = std::get<Dense>(l);
      cur = dense(cur, d.weights, d.bias);
    }
  }
  t.logits = std::move(cur);
  return t;
}

inline Matrix softmax_rows(const Tensor& logits) {
  const std::size_t k = logits.per_sample();
  Matrix p(logits.batch, k, logits.data);
  for (std::size_t r = 0; r < p.rows(); ++r) softmax_inplace(p.row(r));
  return p;
}

// Class probabilities, one row per sample.
inline Matrix forward(const CnnModel& m, const Tensor& x) { return softmax_rows(forward_trace(m, x).logits); }

inline Matrix predict_proba(const CnnModel& m, std::span<const ImageSample> images) {
  return forward(m, to_batch(images));
}

// Mean cross-entropy against (possibly soft) targets; grad_logits, when
// given, receives (p - y) / batch.
inline double cross_entropy(const Matrix& proba, const Matrix& targets, Tensor* grad_logits = nullptr) {
  require(proba.rows() == targets.rows() && proba.cols() == targets.cols(), ErrorKind::kShape,
          "targets do not match the model output");
  const double inv = 1.0 / static_cast<double>(proba.rows());
  double loss = 0.0;
  for (std::size_t i = 0; i < proba.data().size(); ++i) {
    const double y = targets.data()[i];
    if (y > 0.0) loss -= y * std::log(std::max(proba.data()[i], 1e-300)) * inv;
  }
  if (grad_logits) {
    *grad_logits = Tensor(proba.rows(), 1, 1, proba.cols());
    for (std::size_t i = 0; i < proba.data().size(); ++i) {
      grad_logits->data[i] = (proba.data()[i] - targets.data()[i]) * inv;
    }
  }
  return loss;
}

inline Matrix one_hot(std::span<const int> labels, std::size_t k) {
  Matrix y(labels.size(), k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < k, ErrorKind::kLabel,
            "label out of range at sample " + std::to_string(i));
    y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

// Gradients of the mean loss with respect to every parameter group.
inline Gradients backward(const CnnModel& m, const ForwardTrace& t, const Tensor& grad_logits) {
  Gradients grads = zero_gradients(m);
  std::size_t group = grads.size();
  Tensor g = grad_logits;
  for (std::size_t i = m.layers.size(); i-- > 0;) {
    const auto& l = m.layers[i];
    const Tensor& in = t.inputs[i];
    if (const auto* c = std::get_if<Conv>(&l)) {
      group -= 2;
      g = conv2d_backward(in, c->weights, g, c->kernel, c->stride, c->pad, grads[group], grads[group + 1]);
    } else if (std::holds_alternative<Relu>(l)) {
      g = relu_backward(in, std::move(g));
    } else if (std::holds_alternative<MaxPool>(l)) {
      g = maxpool2x2_backward(in, t.argmax[i], g);
    } else {
      const auto& d = std::get<Dense>(l);
      group -= 2;
      g = dense_backward(in, d.weights, g, grads[group], grads[group + 1]);
    }
  }
  return grads;
}

struct LossAndGradients {
  double loss = 0.0;
  Matrix proba;
  Gradients grads;
};

inline LossAndGradients loss_and_gradients(const CnnModel& m, const Tensor& x, const Matrix& targets) {
  const auto trace = forward_trace(m, x);
  LossAndGradients out;
  out.proba = softmax_rows(trace.logits);
  Tensor g;
  out.loss = cross_entropy(out.proba, targets, &g);
  out.grads = backward(m, trace, g);
  return out;
}

}  // namespace trafficlens::vision

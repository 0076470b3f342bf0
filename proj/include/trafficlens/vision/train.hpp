#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trafficlens/vision/augment.hpp"
#include "trafficlens/vision/model.hpp"

namespace trafficlens::vision {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 42;
  bool augment = false;
};

struct EpochStats {
  double loss = 0.0;      // mean over samples, measured before each batch update
  double accuracy = 0.0;  // same convention
  bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
  double initial_loss = 0.0;  // mean loss of the untrained model on the training set
  std::vector<EpochStats> epochs;
  bool operator==(const TrainHistory&) const = default;
};

inline void validate(const TrainConfig& cfg) {
  require(cfg.epochs >= 1, ErrorKind::kConfig, "epochs must be at least 1");
  require(cfg.batch_size >= 1, ErrorKind::kConfig, "batch size must be at least 1");
  require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate), ErrorKind::kConfig,
          "learning rate must be positive");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, ErrorKind::kConfig, "momentum must lie in [0, 1)");
}

inline std::vector<int> labels_of(std::span<const ImageSample> images) {
  std::vector<int> y;
  y.reserve(images.size());
  for (const auto& i : images) y.push_back(static_cast<int>(i.label));
  return y;
}

inline double mean_loss(const CnnModel& m, std::span<const ImageSample> images, std::size_t chunk = 64) {
  double total = 0.0;
  for (std::size_t s = 0; s < images.size(); s += chunk) {
    const auto part = images.subspan(s, std::min(chunk, images.size() - s));
    const auto y = labels_of(part);
    total += cross_entropy(predict_proba(m, part), one_hot(y, m.num_classes)) * static_cast<double>(part.size());
  }
  return total / static_cast<double>(images.size());
}

// Mini-batch SGD with momentum: v = mu v - lr g, w += v. The order of
// samples is reshuffled every epoch from cfg.seed.
inline TrainHistory train(CnnModel& m, std::span<const ImageSample> images, const TrainConfig& cfg) {
  validate(cfg);
  require(!images.empty(), ErrorKind::kShape, "training set is empty");
  for (const auto& img : images) {
    require(static_cast<std::size_t>(img.label) < m.num_classes, ErrorKind::kLabel, "image label out of range");
  }
  TrainHistory hist;
  hist.initial_loss = mean_loss(m, images);
  auto params = parameters(m);
  Gradients velocity = zero_gradients(m);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<ImageSample> batch;
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    EpochStats stats;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& img = images[order[i]];
        batch.push_back(cfg.augment ? augment(img, random_augment_op(rng)) : img);
        labels.push_back(static_cast<int>(img.label));
      }
      const auto r = loss_and_gradients(m, to_batch(batch), one_hot(labels, m.num_classes));
      require(std::isfinite(r.loss), ErrorKind::kDivergence,
              "training diverged in epoch " + std::to_string(epoch + 1) + " (non-finite loss)");
      const double n = static_cast<double>(end - start);
      stats.loss += r.loss * n;
      const auto pred = argmax_rows(r.proba);
      for (std::size_t i = 0; i < labels.size(); ++i) stats.accuracy += pred[i] == labels[i];
      for (std::size_t g = 0; g < params.size(); ++g) {
        auto& w = *params[g];
        auto& v = velocity[g];
        const auto& grad = r.grads[g];
        for (std::size_t j = 0; j < w.size(); ++j) {
          v[j] = cfg.momentum * v[j] - cfg.learning_rate * grad[j];
          w[j] += v[j];
        }
      }
    }
    stats.loss /= static_cast<double>(order.size());
    stats.accuracy /= static_cast<double>(order.size());
    hist.epochs.push_back(stats);
  }
  return hist;
}

inline std::vector<int> predict(const CnnModel& m, std::span<const ImageSample> images, std::size_t chunk = 128) {
  std::vector<int> out;
  out.reserve(images.size());
  for (std::size_t s = 0; s < images.size(); s += chunk) {
    const auto part = images.subspan(s, std::min(chunk, images.size() - s));
    for (int p : argmax_rows(predict_proba(m, part))) out.push_back(p);
  }
  return out;
}

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckFloor = 1e-6;

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
// parameter, numeric gradients by central differences with step 1e-5.
inline double grad_check(const CnnModel& model, const Tensor& x, const Matrix& targets) {
  CnnModel m = model;
  const auto analytic = loss_and_gradients(m, x, targets).grads;
  auto params = parameters(m);
  auto loss = [&] { return cross_entropy(forward(m, x), targets); };
  double worst = 0.0;
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto& w = *params[g];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double saved = w[j];
      w[j] = saved + kGradCheckStep;
      const double up = loss();
      w[j] = saved - kGradCheckStep;
      const double down = loss();
      w[j] = saved;
      const double numeric = (up - down) / (2.0 * kGradCheckStep);
      const double a = analytic[g][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

inline double grad_check(const CnnModel& model, const ImageSample& sample) {
  const std::vector<ImageSample> one = {sample};
  const std::vector<int> y = {static_cast<int>(sample.label)};
  return grad_check(model, to_batch(one), one_hot(y, model.num_classes));
}

}  // namespace trafficlens::vision

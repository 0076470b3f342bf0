#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "trafficlens/core/error.hpp"
#include "trafficlens/datamodel.hpp"

namespace trafficlens::vision {

// Batch x height x width x channels, contiguous, channels fastest.
struct Tensor {
  std::size_t batch = 0, height = 0, width = 0, channels = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t b, std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : batch(b), height(h), width(w), channels(c), data(b * h * w * c, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t per_sample() const { return height * width * channels; }
  std::size_t index(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
    return ((b * height + y) * width + x) * channels + c;
  }
  double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) { return data[index(b, y, x, c)]; }
  const double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const { return data[index(b, y, x, c)]; }
  std::span<const double> sample(std::size_t b) const { return {data.data() + b * per_sample(), per_sample()}; }
  bool same_shape(const Tensor& o) const {
    return batch == o.batch && height == o.height && width == o.width && channels == o.channels;
  }
  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Tensor&) const = default;
};

inline Tensor to_batch(std::span<const ImageSample> images) {
  require(!images.empty(), ErrorKind::kShape, "empty image batch");
  const auto& first = images.front();
  Tensor t(images.size(), first.height, first.width, first.channels);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const auto& img = images[b];
    require(img.height == first.height && img.width == first.width && img.channels == first.channels,
            ErrorKind::kShape, "images in a batch must share one shape");
    std::copy(img.pixels.begin(), img.pixels.end(), t.data.begin() + static_cast<std::ptrdiff_t>(b * t.per_sample()));
  }
  return t;
}

}  // namespace trafficlens::vision

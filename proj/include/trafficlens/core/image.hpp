#pragma once

#include <algorithm>
#include <cmath>

#include "trafficlens/datamodel.hpp"

namespace trafficlens {

// Bilinear sample at fractional pixel coordinates; coordinates outside the
// image are clamped to the nearest edge.
inline double sample_bilinear(const ImageSample& img, double y, double x, std::size_t c = 0) {
  const double ymax = static_cast<double>(img.height - 1);
  const double xmax = static_cast<double>(img.width - 1);
  y = std::clamp(y, 0.0, ymax);
  x = std::clamp(x, 0.0, xmax);
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  const double top = img.at(y0, x0, c) + fx * (img.at(y0, x1, c) - img.at(y0, x0, c));
  const double bottom = img.at(y1, x0, c) + fx * (img.at(y1, x1, c) - img.at(y1, x0, c));
  return top + fy * (bottom - top);
}

// Resample to out_h x out_w by aligning pixel centres.
inline ImageSample resize_bilinear(const ImageSample& img, std::size_t out_h, std::size_t out_w) {
  ImageSample out{out_h, out_w, img.channels, std::vector<double>(out_h * out_w * img.channels), img.label};
  const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = sample_bilinear(img, (static_cast<double>(y) + 0.5) * sy - 0.5,
                                          (static_cast<double>(x) + 0.5) * sx - 0.5, c);
      }
    }
  }
  return out;
}

inline ImageSample to_gray(const ImageSample& img) {
  if (img.channels == 1) return img;
  ImageSample out{img.height, img.width, 1, std::vector<double>(img.height * img.width), img.label};
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      out.at(y, x) = std::clamp(0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace trafficlens

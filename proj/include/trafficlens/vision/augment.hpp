#pragma once

#include <variant>

#include "trafficlens/core/image.hpp"
#include "trafficlens/core/random.hpp"

namespace trafficlens::vision {

struct FlipH {};
struct FlipV {};
struct Rot90 {
  int k = 1;  // quarter turns, counter-clockwise
};
struct Scale {
  double factor = 1.0;
};

using AugmentOp = std::variant<FlipH, FlipV, Rot90, Scale>;

inline constexpr double kMinScale = 0.5, kMaxScale = 2.0;

inline ImageSample augment(const ImageSample& img, const AugmentOp& op) {
  ImageSample out = img;
  const std::size_t H = img.height, W = img.width, C = img.channels;
  if (std::holds_alternative<FlipH>(op)) {
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = img.at(y, W - 1 - x, c);
  } else if (std::holds_alternative<FlipV>(op)) {
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = img.at(H - 1 - y, x, c);
  } else if (const auto* r = std::get_if<Rot90>(&op)) {
    const int k = ((r->k % 4) + 4) % 4;
    require(k % 2 == 0 || H == W, ErrorKind::kShape, "odd quarter turns need a square image");
    for (int turn = 0; turn < k; ++turn) {
      const ImageSample src = out;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = src.at(x, W - 1 - y, c);
    }
  } else {
    const double s = std::get<Scale>(op).factor;
    require(s >= kMinScale && s <= kMaxScale, ErrorKind::kConfig,
            "scale factor must lie in [0.5, 2.0], got " + std::to_string(s));
    // Zoom about the centre; the frame stays fixed so enlargements are
    // cropped and reductions are padded by edge clamping.
    const double cy = static_cast<double>(H - 1) / 2.0, cx = static_cast<double>(W - 1) / 2.0;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c)
          out.at(y, x, c) = std::clamp(
              sample_bilinear(img, (static_cast<double>(y) - cy) / s + cy, (static_cast<double>(x) - cx) / s + cx, c),
              0.0, 1.0);
  }
  return out;
}

// One random op: a flip, a quarter-turn multiple or a scale in [0.8, 1.2].
inline AugmentOp random_augment_op(Rng& rng) {
  switch (rng.index(4)) {
    case 0: return FlipH{};
    case 1: return FlipV{};
    case 2: return Rot90{static_cast<int>(1 + rng.index(3))};
    default: return Scale{rng.uniform(0.8, 1.2)};
  }
}

inline ImageSample augment(const ImageSample& img, std::uint64_t seed) {
  Rng rng(seed);
  return augment(img, random_augment_op(rng));
}

}  // namespace trafficlens::vision

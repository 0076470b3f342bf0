#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trafficlens/core/image.hpp"
#include "trafficlens/core/random.hpp"
#include "trafficlens/datamodel.hpp"

namespace trafficlens::datasynth {

struct ImageGenSpec {
  std::size_t n = 8760;
  std::size_t size = 32;
  double noise_sigma = 0.25;
  std::uint64_t seed = 42;
};

inline constexpr double kPixelLevels = 255.0;

inline double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * kPixelLevels) / kPixelLevels; }

// Fixed procedural motif per class, independent of any seed.
//   clear        dim background with sparse faint specks
//   congested    dense grid of bright blobs
//   construction diagonal stripes
//   accident     bright cross with a cluster at the centre
inline ImageSample class_template(ImageClass cls, std::size_t size) {
  require(size >= 8, ErrorKind::kConfig, "image size must be at least 8");
  ImageSample img{size, size, 1, std::vector<double>(size * size), cls};
  const double s = static_cast<double>(size);
  const double mid = (s - 1.0) / 2.0;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double fy = static_cast<double>(y), fx = static_cast<double>(x);
      double v = 0.0;
      switch (cls) {
        case ImageClass::kClear:
          // Hash-like speck pattern, about one pixel in 23.
          v = ((x * 7 + y * 13 + x * y) % 23 == 0) ? 0.35 : 0.12;
          break;
        case ImageClass::kCongested: {
          const double cell = s / 4.0;
          const double dy = std::fmod(fy + 0.5, cell) - cell / 2.0;
          const double dx = std::fmod(fx + 0.5, cell) - cell / 2.0;
          const double r = cell / 4.0;
          v = 0.2 + 0.65 * std::exp(-(dx * dx + dy * dy) / (2.0 * r * r));
          break;
        }
        case ImageClass::kConstruction: {
          const std::size_t period = std::max<std::size_t>(4, size / 4);
          v = ((x + y) % period) < period / 2 ? 0.8 : 0.15;
          break;
        }
        case ImageClass::kAccident: {
          const double arm = s / 16.0;
          const bool on_cross = std::abs(fx - mid) <= arm || std::abs(fy - mid) <= arm;
          const double d2 = (fx - mid) * (fx - mid) + (fy - mid) * (fy - mid);
          v = on_cross ? 0.95 : 0.1;
          if (d2 <= (s / 6.0) * (s / 6.0)) v = 0.95;
          break;
        }
      }
      img.at(y, x) = quantize(v);
    }
  }
  return img;
}

// Classes cycle clear, congested, construction, accident, so counts are
// equal whenever n is a multiple of four. Pixels are 8-bit levels.
inline std::vector<ImageSample> gen_images(const ImageGenSpec& spec) {
  require(spec.noise_sigma >= 0.0, ErrorKind::kConfig, "image noise sigma must be non-negative");
  std::vector<ImageSample> templates;
  for (std::size_t k = 0; k < kNumImageClasses; ++k) templates.push_back(class_template(static_cast<ImageClass>(k), spec.size));
  Rng rng(spec.seed);
  std::vector<ImageSample> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    ImageSample img = templates[i % kNumImageClasses];
    if (spec.noise_sigma > 0.0) {
      for (double& p : img.pixels) p = quantize(p + rng.normal(0.0, spec.noise_sigma));
    }
    out.push_back(std::move(img));
  }
  return out;
}

// ---------------------------------------------------------------------------
// PGM/PPM directory layout: <root>/<class name>/<file>.pgm|.ppm
// ---------------------------------------------------------------------------

inline std::string encode_pnm(const ImageSample& img) {
  std::ostringstream os;
  os << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  for (double p : img.pixels) os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0))));
  return os.str();
}

inline ImageSample decode_pnm(std::string_view data, const std::string& source) {
  std::size_t pos = 0;
  auto fail_parse = [&](const std::string& why) { fail(ErrorKind::kParse, source + ": " + why); };
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space();
    std::size_t v = 0, digits = 0;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + static_cast<std::size_t>(data[pos++] - '0');
      if (++digits > 6) fail_parse("header number too large");
    }
    if (digits == 0) fail_parse("malformed header");
    return v;
  };
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6')) fail_parse("not a binary PGM/PPM file");
  const std::size_t channels = data[1] == '6' ? 3 : 1;
  pos = 2;
  const std::size_t width = read_int();
  const std::size_t height = read_int();
  const std::size_t maxval = read_int();
  if (width == 0 || height == 0) fail_parse("zero image dimension");
  if (maxval == 0 || maxval > 65535) fail_parse("maxval out of range");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) fail_parse("malformed header");
  ++pos;
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = width * height * channels;
  if (data.size() - pos < count * bytes) fail_parse("truncated pixel data");
  ImageSample img{height, width, channels, std::vector<double>(count), ImageClass::kClear};
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t v = static_cast<unsigned char>(data[pos + i * bytes]);
    if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + i * bytes + 1]);
    if (v > maxval) fail_parse("pixel value above maxval");
    img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

inline void write_image_dir(const std::vector<ImageSample>& images, const std::string& root) {
  namespace fs = std::filesystem;
  for (std::size_t k = 0; k < kNumImageClasses; ++k) fs::create_directories(fs::path(root) / std::string(kImageClassNames[k]));
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.%s", i, images[i].channels == 3 ? "ppm" : "pgm");
    const auto path = fs::path(root) / std::string(to_string(images[i].label)) / name;
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::kParse, "cannot write " + path.string());
    out << encode_pnm(images[i]);
  }
}

// Images are converted to grayscale and resampled to size x size. Files are
// read class by class in label order, then by file name.
inline std::vector<ImageSample> load_image_dir(const std::string& root, std::size_t size = 32) {
  namespace fs = std::filesystem;
  require(fs::is_directory(root), ErrorKind::kParse, root + ": not a directory");
  std::vector<std::vector<fs::path>> by_class(kNumImageClasses);
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.starts_with('.')) continue;
    const auto cls = parse_image_class(name);
    require(cls.has_value(), ErrorKind::kSchema, entry.path().string() + ": unknown class directory '" + name + "'");
    for (const auto& f : fs::directory_iterator(entry.path())) {
      const auto ext = f.path().extension().string();
      if (f.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) {
        by_class[static_cast<std::size_t>(*cls)].push_back(f.path());
      }
    }
  }
  std::vector<ImageSample> out;
  for (std::size_t k = 0; k < kNumImageClasses; ++k) {
    auto& files = by_class[k];
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      require(in.good(), ErrorKind::kParse, f.string() + ": cannot open file");
      std::ostringstream buf;
      buf << in.rdbuf();
      auto img = to_gray(decode_pnm(buf.str(), f.string()));
      if (img.height != size || img.width != size) img = resize_bilinear(img, size, size);
      img.label = static_cast<ImageClass>(k);
      out.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace trafficlens::datasynth

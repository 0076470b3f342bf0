#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "trafficlens/core/error.hpp"
#include "trafficlens/io/serialize.hpp"

namespace trafficlens::io {

// Layout (little endian):
//   "TLNS" | u32 version | u16 kind length | kind | u64 schema fingerprint |
//   u64 payload length | payload (CBOR) | u32 crc32 of all preceding bytes
inline constexpr std::string_view kMagic = "TLNS";
inline constexpr std::uint32_t kFormatVersion = 1;

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

struct Artifact {
  std::string kind;
  std::uint64_t fingerprint = 0;
  std::string payload;
};

namespace detail {

template <class T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos, const std::string& source) {
  require(bytes.size() - pos >= sizeof(T) && pos <= bytes.size(), ErrorKind::kParse, source + ": truncated model file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace detail

inline std::string encode_artifact(const Artifact& a) {
  std::string out(kMagic);
  detail::put<std::uint32_t>(out, kFormatVersion);
  detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(a.kind.size()));
  out += a.kind;
  detail::put<std::uint64_t>(out, a.fingerprint);
  detail::put<std::uint64_t>(out, a.payload.size());
  out += a.payload;
  detail::put<std::uint32_t>(out, crc32_of(out));
  return out;
}

// Checks magic, version and checksum; the fingerprint is checked by the
// caller against the decoded model.
inline Artifact decode_artifact(std::string_view bytes, const std::string& source) {
  require(bytes.size() >= kMagic.size() && bytes.substr(0, kMagic.size()) == kMagic, ErrorKind::kParse,
          source + ": not a trafficlens model file");
  std::size_t pos = kMagic.size();
  const auto version = detail::take<std::uint32_t>(bytes, pos, source);
  require(version == kFormatVersion, ErrorKind::kSchema,
          source + ": model format version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kFormatVersion) + ")");
  require(bytes.size() >= pos + 4, ErrorKind::kParse, source + ": truncated model file");
  const std::uint32_t stored = [&] {
    std::size_t p = bytes.size() - 4;
    return detail::take<std::uint32_t>(bytes, p, source);
  }();
  require(crc32_of(bytes.substr(0, bytes.size() - 4)) == stored, ErrorKind::kChecksum,
          source + ": checksum mismatch, model file is corrupted");
  Artifact a;
  const auto kind_len = detail::take<std::uint16_t>(bytes, pos, source);
  require(bytes.size() - 4 >= pos + kind_len, ErrorKind::kParse, source + ": truncated model file");
  a.kind = std::string(bytes.substr(pos, kind_len));
  pos += kind_len;
  a.fingerprint = detail::take<std::uint64_t>(bytes, pos, source);
  const auto len = detail::take<std::uint64_t>(bytes, pos, source);
  require(bytes.size() - 4 - pos == len, ErrorKind::kParse, source + ": payload length mismatch");
  a.payload = std::string(bytes.substr(pos, len));
  return a;
}

using AnyModel = std::variant<tabular::SeverityModel, timeseries::ArimaModel, vision::CnnModel>;

inline std::string kind_of(const AnyModel& m) {
  switch (m.index()) {
    case 0: return "severity";
    case 1: return "arima";
    default: return "cnn";
  }
}

inline std::string schema_of(const AnyModel& m) {
  if (const auto* s = std::get_if<tabular::SeverityModel>(&m)) {
    return "severity;classes=" + std::to_string(tabular::num_classes(s->model)) + ";" + s->encoder.schema_string();
  }
  if (const auto* a = std::get_if<timeseries::ArimaModel>(&m)) {
    return "arima;" + std::to_string(a->order.p) + "," + std::to_string(a->order.d) + "," +
           std::to_string(a->order.q) + ";period=" + std::to_string(a->seasonal_period);
  }
  const auto& c = std::get<vision::CnnModel>(m);
  std::string s = "cnn;" + std::to_string(c.input_height) + "x" + std::to_string(c.input_width) + "x" +
                  std::to_string(c.input_channels) + ";classes=" + std::to_string(c.num_classes);
  for (const auto& l : c.layers) {
    s += std::string(";") + vision::layer_name(l);
    if (const auto* conv = std::get_if<vision::Conv>(&l)) {
      s += "(" + std::to_string(conv->in_channels) + "," + std::to_string(conv->filters) + "," +
           std::to_string(conv->kernel) + "," + std::to_string(conv->stride) + "," + std::to_string(conv->pad) + ")";
    } else if (const auto* d = std::get_if<vision::Dense>(&l)) {
      s += "(" + std::to_string(d->inputs) + "," + std::to_string(d->outputs) + ")";
    }
  }
  return s;
}

inline std::string serialize_model(const AnyModel& m) {
  nlohmann::json payload;
  std::visit([&](const auto& v) { payload = v; }, m);
  const auto cbor = nlohmann::json::to_cbor(payload);
  return encode_artifact({kind_of(m), fnv1a64(schema_of(m)), std::string(cbor.begin(), cbor.end())});
}

inline AnyModel deserialize_model(std::string_view bytes, const std::string& source) {
  const auto a = decode_artifact(bytes, source);
  nlohmann::json payload;
  try {
    payload = nlohmann::json::from_cbor(a.payload);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, source + ": malformed payload (" + e.what() + ")");
  }
  AnyModel m;
  try {
    if (a.kind == "severity") {
      m = payload.get<tabular::SeverityModel>();
    } else if (a.kind == "arima") {
      m = payload.get<timeseries::ArimaModel>();
    } else if (a.kind == "cnn") {
      m = payload.get<vision::CnnModel>();
    } else {
      fail(ErrorKind::kSchema, source + ": unknown model kind '" + a.kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchema, source + ": payload does not match model kind " + a.kind + " (" + e.what() + ")");
  }
  require(fnv1a64(schema_of(m)) == a.fingerprint, ErrorKind::kSchema,
          source + ": schema fingerprint mismatch");
  return m;
}

inline void save_model(const AnyModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kParse, "cannot write " + path);
  out << serialize_model(m);
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kParse, "failed writing " + path);
}

inline AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kParse, path + ": cannot open model file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str(), path);
}

}  // namespace trafficlens::io

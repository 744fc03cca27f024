// Copyright 2026 The smcd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "smcd/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "binary_io.hpp"

namespace smcd {
namespace {

constexpr std::string_view kSarrMagic = "SARR";

void check_dims(std::uint32_t width, std::uint32_t height, std::size_t n) {
  if (static_cast<std::size_t>(width) * height != n) {
    Fail(ErrorKind::kDimensionMismatch,
         "payload length " + std::to_string(n) + " does not match " +
             std::to_string(width) + "x" + std::to_string(height));
  }
}

struct PgmHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t maxval = 0;
  std::size_t data_offset = 0;
};

// Parses "P5 <w> <h> <maxval>" with '#' comments, followed by exactly one
// whitespace byte before the payload.
PgmHeader parse_pgm_header(std::span<const std::uint8_t> bytes,
                           const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "' is not a binary PGM (P5)");
  }
  std::size_t pos = 2;
  auto next_number = [&](const char* field) -> std::uint64_t {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size()) {
      Fail(ErrorKind::kMalformedHeader,
           "'" + source + "': PGM header ends before " + field);
    }
    if (!std::isdigit(bytes[pos])) {
      Fail(ErrorKind::kMalformedHeader,
           "'" + source + "': PGM " + field + " is not a number");
    }
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > std::numeric_limits<std::uint32_t>::max()) {
        Fail(ErrorKind::kMalformedHeader,
             "'" + source + "': PGM " + field + " out of range");
      }
      ++pos;
    }
    return v;
  };

  PgmHeader h;
  h.width = static_cast<std::uint32_t>(next_number("width"));
  h.height = static_cast<std::uint32_t>(next_number("height"));
  h.maxval = static_cast<std::uint32_t>(next_number("maxval"));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': missing whitespace after PGM maxval");
  }
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0) {
    Fail(ErrorKind::kZeroDimension, "'" + source + "' has zero width or height");
  }
  if (h.maxval == 0 || h.maxval > 65535) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': PGM maxval must be in 1..65535");
  }
  return h;
}

std::vector<float> read_pgm_samples(std::span<const std::uint8_t> bytes,
                                    const PgmHeader& h,
                                    const std::string& source) {
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t bytes_per = h.maxval > 255 ? 2 : 1;
  if (bytes.size() - h.data_offset < n * bytes_per) {
    Fail(ErrorKind::kTruncated, "'" + source + "': PGM payload is truncated");
  }
  std::vector<float> out(n);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < n; ++i) {
    // 16-bit PGM samples are big-endian.
    out[i] = bytes_per == 1 ? static_cast<float>(p[i])
                            : static_cast<float>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return out;
}

void write_pgm8(std::uint32_t width, std::uint32_t height,
                const std::vector<std::uint8_t>& pixels,
                const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.magic("P5\n" + std::to_string(width) + " " + std::to_string(height) +
          "\n255\n");
  for (auto v : pixels) w.u8(v);
  w.write_to(path);
}

}  // namespace

Raster::Raster(std::uint32_t width, std::uint32_t height, float fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * height, fill) {}

Raster::Raster(std::uint32_t width, std::uint32_t height,
               std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height, data_.size());
}

LabelMap::LabelMap(std::uint32_t width, std::uint32_t height,
                   std::uint8_t fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * height, fill) {}

LabelMap::LabelMap(std::uint32_t width, std::uint32_t height,
                   std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height, data_.size());
  for (auto v : data_) {
    if (v > 1) Fail(ErrorKind::kInvalidArgument, "label values must be 0 or 1");
  }
}

std::size_t LabelMap::count_changed() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

Raster load_raster(const std::filesystem::path& path, RasterKind kind) {
  const auto bytes = detail::read_file(path);
  const std::string source = path.string();
  Raster raster;

  detail::ByteReader reader(bytes, source);
  if (reader.starts_with(kSarrMagic)) {
    reader.skip(kSarrMagic.size());
    const std::uint32_t width = reader.u32();
    const std::uint32_t height = reader.u32();
    if (width == 0 || height == 0) {
      Fail(ErrorKind::kZeroDimension, "'" + source + "' has zero width or height");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (reader.remaining() < n * 4) {
      Fail(ErrorKind::kTruncated, "'" + source + "': SARR payload is truncated");
    }
    std::vector<float> data(n);
    for (auto& v : data) v = reader.f32();
    raster = Raster(width, height, std::move(data));
  } else if (reader.starts_with("P5")) {
    const PgmHeader h = parse_pgm_header(bytes, source);
    raster = Raster(h.width, h.height, read_pgm_samples(bytes, h, source));
  } else {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': unrecognized raster magic (expected SARR or P5)");
  }

  if (kind == RasterKind::kIntensity) {
    for (auto& v : raster.data()) {
      if (!std::isfinite(v)) {
        Fail(ErrorKind::kNonFinite, "'" + source + "' contains NaN or Inf");
      }
      v = std::max(v, kIntensityFloor);
    }
  }
  return raster;
}

void save_raster(const Raster& raster, const std::filesystem::path& path) {
  check_dims(raster.width(), raster.height(), raster.size());
  detail::ByteWriter w;
  w.magic(kSarrMagic);
  w.u32(raster.width());
  w.u32(raster.height());
  for (float v : raster.data()) w.f32(v);
  w.write_to(path);
}

void save_raster_preview(const Raster& raster,
                         const std::filesystem::path& path) {
  const auto& d = raster.data();
  std::vector<std::uint8_t> pixels(d.size(), 0);
  if (!d.empty()) {
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    const double range = static_cast<double>(*hi) - *lo;
    if (range > 0) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double t = (d[i] - static_cast<double>(*lo)) / range;
        pixels[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
      }
    }
  }
  write_pgm8(raster.width(), raster.height(), pixels, path);
}

LabelMap load_labels(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string source = path.string();
  const PgmHeader h = parse_pgm_header(bytes, source);
  if (h.maxval > 255) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': label maps must be 8-bit PGM");
  }
  const auto samples = read_pgm_samples(bytes, h, source);
  std::vector<std::uint8_t> labels(samples.size());
  std::transform(samples.begin(), samples.end(), labels.begin(),
                 [](float v) { return static_cast<std::uint8_t>(v != 0.0f); });
  return LabelMap(h.width, h.height, std::move(labels));
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(labels.data());
  for (auto& v : pixels) v = v ? 255 : 0;
  write_pgm8(labels.width(), labels.height(), pixels, path);
}

}  // namespace smcd

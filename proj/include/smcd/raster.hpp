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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace smcd {

/// Floor applied to intensity samples at load time so log-ratios stay finite.
inline constexpr float kIntensityFloor = 1e-6f;

/// Row/column position inside a raster.
struct Pixel {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Single-band f32 image stored row-major. Used for SAR intensities and for
/// score maps alike.
class Raster {
 public:
  Raster() = default;
  Raster(std::uint32_t width, std::uint32_t height, float fill = 0.0f);
  Raster(std::uint32_t width, std::uint32_t height, std::vector<float> data);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(std::uint32_t row, std::uint32_t col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  float at(std::uint32_t row, std::uint32_t col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<float> data_;
};

/// Binary change labels: 0 = unchanged, 1 = changed.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::uint32_t width, std::uint32_t height, std::uint8_t fill = 0);
  LabelMap(std::uint32_t width, std::uint32_t height,
           std::vector<std::uint8_t> data);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t& at(std::uint32_t row, std::uint32_t col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::uint8_t at(std::uint32_t row, std::uint32_t col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::uint8_t at(Pixel p) const { return at(p.row, p.col); }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  std::size_t count_changed() const noexcept;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// How load_raster treats sample values.
enum class RasterKind {
  kIntensity,  ///< clamp to kIntensityFloor, reject NaN/Inf
  kRaw,        ///< keep values as stored (score maps)
};

/// Loads a SARR file or a binary PGM (P5, 8- or 16-bit). The format is
/// detected from the leading magic bytes.
Raster load_raster(const std::filesystem::path& path,
                   RasterKind kind = RasterKind::kIntensity);

/// Writes the SARR layout: "SARR", u32 width, u32 height, f32 samples, all
/// little-endian.
void save_raster(const Raster& raster, const std::filesystem::path& path);

/// 8-bit PGM preview with min-max scaling to 0..255. A constant raster maps
/// to all zeros.
void save_raster_preview(const Raster& raster,
                         const std::filesystem::path& path);

/// Loads an 8-bit P5 PGM; any nonzero byte becomes label 1.
LabelMap load_labels(const std::filesystem::path& path);

/// Writes labels as an 8-bit P5 PGM with changed pixels at 255.
void save_labels(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace smcd

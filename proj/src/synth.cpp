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

#include "smcd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "smcd/constraints.hpp"
#include "smcd/error.hpp"

namespace smcd {
namespace {

constexpr int kPlacementRetries = 1000;

enum Substream : std::uint64_t { kLayout = 0, kNoiseFirst = 1, kNoiseSecond = 2 };

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void fill_speckle(Raster& img, std::uint32_t looks, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(looks, 1.0 / looks);
  for (auto& v : img.data()) v = static_cast<float>(gamma(rng));
}

struct Region {
  std::uint32_t top, left, rows, cols;
  bool ellipse;
  double reflectivity;

  bool contains(std::uint32_t r, std::uint32_t c) const {
    if (r < top || c < left || r >= top + rows || c >= left + cols) return false;
    if (!ellipse) return true;
    const double dy = (r + 0.5 - top - rows / 2.0) / (rows / 2.0);
    const double dx = (c + 0.5 - left - cols / 2.0) / (cols / 2.0);
    return dy * dy + dx * dx <= 1.0;
  }

  // Bounding boxes, grown by one pixel so regions never touch.
  bool overlaps(const Region& o) const {
    return !(top + rows + 1 <= o.top || o.top + o.rows + 1 <= top ||
             left + cols + 1 <= o.left || o.left + o.cols + 1 <= left);
  }
};

}  // namespace

void SceneConfig::validate() const {
  if (width == 0 || height == 0) {
    Fail(ErrorKind::kInvalidArgument, "width and height must be positive");
  }
  if (looks < 1) Fail(ErrorKind::kInvalidArgument, "looks must be >= 1");
  if (!(contrast > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "contrast must be > 0");
  }
  if (!(std::abs(shift_y) <= 3.0) || !(std::abs(shift_x) <= 3.0)) {
    Fail(ErrorKind::kInvalidArgument, "shift must be within 3 pixels per axis");
  }
}

Raster speckle_field(std::uint32_t width, std::uint32_t height,
                     std::uint32_t looks, std::uint64_t seed) {
  if (looks < 1) Fail(ErrorKind::kInvalidArgument, "looks must be >= 1");
  Raster field(width, height);
  auto rng = substream(seed, kNoiseFirst);
  fill_speckle(field, looks, rng);
  return field;
}

float sample_bilinear(const Raster& img, double y, double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double ty = y - fy;
  const double tx = x - fx;
  const auto y0 = static_cast<std::int64_t>(fy);
  const auto x0 = static_cast<std::int64_t>(fx);
  auto px = [&](std::int64_t r, std::int64_t c) -> double {
    return img.at(mirror_index(r, img.height()), mirror_index(c, img.width()));
  };
  const double top = (1 - tx) * px(y0, x0) + tx * px(y0, x0 + 1);
  const double bottom = (1 - tx) * px(y0 + 1, x0) + tx * px(y0 + 1, x0 + 1);
  return static_cast<float>((1 - ty) * top + ty * bottom);
}

Scene gen_scene(const SceneConfig& cfg) {
  cfg.validate();
  auto layout = substream(cfg.seed, kLayout);

  const std::uint32_t short_side = std::min(cfg.width, cfg.height);
  const std::uint32_t min_extent = std::max<std::uint32_t>(3, short_side / 10);
  const std::uint32_t max_extent =
      std::max<std::uint32_t>(min_extent, short_side / 4);
  if (cfg.n_regions > 0 && max_extent > short_side) {
    Fail(ErrorKind::kInvalidArgument,
         "image is too small for regions of at least 3 pixels");
  }
  std::uniform_int_distribution<std::uint32_t> extent(min_extent, max_extent);
  std::uniform_real_distribution<double> reflect(0.5, 2.0);
  std::bernoulli_distribution shape(0.5);

  std::vector<Region> regions;
  for (std::uint32_t k = 0; k < cfg.n_regions; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      Region reg{};
      reg.rows = extent(layout);
      reg.cols = extent(layout);
      reg.top = std::uniform_int_distribution<std::uint32_t>(
          0, cfg.height - reg.rows)(layout);
      reg.left = std::uniform_int_distribution<std::uint32_t>(
          0, cfg.width - reg.cols)(layout);
      reg.ellipse = shape(layout);
      reg.reflectivity = reflect(layout);
      if (std::none_of(regions.begin(), regions.end(),
                       [&](const Region& o) { return reg.overlaps(o); })) {
        regions.push_back(reg);
        placed = true;
      }
    }
    if (!placed) {
      Fail(ErrorKind::kInvalidArgument,
           "could not place region " + std::to_string(k + 1) + " of " +
               std::to_string(cfg.n_regions) + " inside a " +
               std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
               " image after " + std::to_string(kPlacementRetries) +
               " attempts");
    }
  }

  Raster before(cfg.width, cfg.height, 1.0f);
  Raster after(cfg.width, cfg.height, 1.0f);
  Scene scene;
  scene.truth = LabelMap(cfg.width, cfg.height);
  for (std::uint32_t r = 0; r < cfg.height; ++r) {
    for (std::uint32_t c = 0; c < cfg.width; ++c) {
      for (const auto& reg : regions) {
        if (!reg.contains(r, c)) continue;
        before.at(r, c) = static_cast<float>(reg.reflectivity);
        after.at(r, c) = static_cast<float>(reg.reflectivity * cfg.contrast);
        scene.truth.at(r, c) = 1;
        break;
      }
    }
  }

  const std::uint64_t noise_seed = cfg.noise_seed.value_or(cfg.seed);
  auto noise1 = substream(noise_seed, kNoiseFirst);
  auto noise2 = substream(noise_seed, kNoiseSecond);
  Raster speckle1(cfg.width, cfg.height);
  Raster speckle2(cfg.width, cfg.height);
  fill_speckle(speckle1, cfg.looks, noise1);
  fill_speckle(speckle2, cfg.looks, noise2);

  scene.i1 = Raster(cfg.width, cfg.height);
  scene.i2 = Raster(cfg.width, cfg.height);
  for (std::uint32_t r = 0; r < cfg.height; ++r) {
    for (std::uint32_t c = 0; c < cfg.width; ++c) {
      const float shifted =
          sample_bilinear(after, r - cfg.shift_y, c - cfg.shift_x);
      scene.i1.at(r, c) =
          std::max(kIntensityFloor, before.at(r, c) * speckle1.at(r, c));
      scene.i2.at(r, c) = std::max(kIntensityFloor, shifted * speckle2.at(r, c));
    }
  }
  return scene;
}

}  // namespace smcd

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

#include <cstdint>
#include <optional>

#include "smcd/raster.hpp"

namespace smcd {

struct SceneConfig {
  std::uint32_t width = 128;
  std::uint32_t height = 128;
  std::uint32_t looks = 1;
  double shift_y = 0.0;      ///< misregistration of the second date, pixels
  double shift_x = 0.0;
  std::uint32_t n_regions = 8;
  double contrast = 4.0;     ///< reflectivity factor inside changed regions
  std::uint64_t seed = 0;
  /// Reseeds only the speckle; region layout keeps following `seed`.
  std::optional<std::uint64_t> noise_seed;

  void validate() const;
};

struct Scene {
  Raster i1;
  Raster i2;
  LabelMap truth;
};

/// Piecewise-constant reflectivity with `n_regions` rectangles/ellipses that
/// change by `contrast` between dates. Both dates carry independent unit-mean
/// gamma speckle; the second date is resampled by (shift_y, shift_x).
Scene gen_scene(const SceneConfig& cfg);

/// Unit-mean gamma(looks, 1/looks) speckle field.
Raster speckle_field(std::uint32_t width, std::uint32_t height,
                     std::uint32_t looks, std::uint64_t seed);

/// Bilinear sample of `img` at fractional (y, x), mirror-extended.
float sample_bilinear(const Raster& img, double y, double x);

}  // namespace smcd

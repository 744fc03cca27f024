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
#include <filesystem>
#include <vector>

#include "smcd/diffops.hpp"
#include "smcd/raster.hpp"

namespace smcd {

/// Maps an out-of-range index back into [0, n) by symmetric reflection
/// about the border (…, 1, 0 | 0, 1, … | n-1, n-1, n-2, …).
std::uint32_t mirror_index(std::int64_t i, std::uint32_t n);

/// Returns the side×side window around `center` in row-major order, with
/// mirror padding outside the raster.
std::vector<float> extract_patch(const Raster& img, Pixel center,
                                 std::uint32_t side);

struct ConstraintPair {
  DiffVector v;
  std::int8_t y = 0;  ///< +1 changed, -1 unchanged
  Pixel center1;      ///< site in the first image
  Pixel center2;      ///< jittered site in the second image
};

struct ConstraintSet {
  std::vector<ConstraintPair> pairs;
  std::uint32_t d = 0;
  DiffOp op = DiffOp::kLr;

  std::size_t positives() const noexcept;
  std::size_t negatives() const noexcept;
};

/// Draws n/2 changed and n/2 unchanged sites from `labels` without
/// replacement. Each site is paired with a patch of the second image centred
/// at a uniformly chosen offset in [-radius, radius]² that lands inside the
/// image on a pixel with the same label. All randomness comes from `seed`.
ConstraintSet sample_constraints(const Raster& i1, const Raster& i2,
                                 const LabelMap& labels, DiffOp op,
                                 std::uint32_t side, std::uint32_t n,
                                 std::uint32_t radius, std::uint64_t seed);

/// SMCS debug dump: "SMCS", u32 n, u32 d, u8 op, then per pair i8 y,
/// u32 row1, col1, row2, col2 and d f64 values.
void save_constraints(const ConstraintSet& cs,
                      const std::filesystem::path& path);
ConstraintSet load_constraints(const std::filesystem::path& path);

}  // namespace smcd

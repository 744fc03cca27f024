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

#include "smcd/constraints.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "smcd/error.hpp"

namespace smcd {
namespace {

constexpr std::string_view kConstraintMagic = "SMCS";

// Partial Fisher-Yates: the first k entries become a uniform sample without
// replacement.
std::vector<Pixel> draw_sites(std::vector<Pixel> pool, std::size_t k,
                              std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

// Uniform over offsets in the (2r+1)² window that stay inside the image and
// keep the label of the centre. The zero offset always qualifies.
Pixel jitter(Pixel c, std::uint32_t radius, const LabelMap& labels,
             std::mt19937_64& rng) {
  if (radius == 0) return c;
  const std::uint8_t label = labels.at(c);
  const auto r = static_cast<std::int64_t>(radius);
  std::vector<Pixel> eligible;
  eligible.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
  for (std::int64_t dy = -r; dy <= r; ++dy) {
    for (std::int64_t dx = -r; dx <= r; ++dx) {
      const std::int64_t row = c.row + dy;
      const std::int64_t col = c.col + dx;
      if (row < 0 || col < 0 || row >= labels.height() ||
          col >= labels.width()) {
        continue;
      }
      const Pixel q{static_cast<std::uint32_t>(row),
                    static_cast<std::uint32_t>(col)};
      if (labels.at(q) == label) eligible.push_back(q);
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return eligible[pick(rng)];
}

}  // namespace

std::uint32_t mirror_index(std::int64_t i, std::uint32_t n) {
  const std::int64_t period = 2 * static_cast<std::int64_t>(n);
  std::int64_t k = i % period;
  if (k < 0) k += period;
  return static_cast<std::uint32_t>(k < n ? k : period - 1 - k);
}

std::vector<float> extract_patch(const Raster& img, Pixel center,
                                 std::uint32_t side) {
  if (side == 0 || side % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument,
         "patch side must be odd, got " + std::to_string(side));
  }
  if (center.row >= img.height() || center.col >= img.width()) {
    Fail(ErrorKind::kInvalidArgument,
         "patch centre (" + std::to_string(center.row) + "," +
             std::to_string(center.col) + ") lies outside the image");
  }
  const std::int64_t half = side / 2;
  std::vector<float> patch;
  patch.reserve(static_cast<std::size_t>(side) * side);
  for (std::int64_t dy = -half; dy <= half; ++dy) {
    const std::uint32_t row = mirror_index(center.row + dy, img.height());
    for (std::int64_t dx = -half; dx <= half; ++dx) {
      patch.push_back(img.at(row, mirror_index(center.col + dx, img.width())));
    }
  }
  return patch;
}

std::size_t ConstraintSet::positives() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      pairs.begin(), pairs.end(), [](const auto& p) { return p.y > 0; }));
}

std::size_t ConstraintSet::negatives() const noexcept {
  return pairs.size() - positives();
}

ConstraintSet sample_constraints(const Raster& i1, const Raster& i2,
                                 const LabelMap& labels, DiffOp op,
                                 std::uint32_t side, std::uint32_t n,
                                 std::uint32_t radius, std::uint64_t seed) {
  if (i1.width() != i2.width() || i1.height() != i2.height() ||
      labels.width() != i1.width() || labels.height() != i1.height()) {
    Fail(ErrorKind::kDimensionMismatch,
         "images and label map must share dimensions");
  }
  if (n == 0 || n % 2 != 0) {
    Fail(ErrorKind::kInvalidArgument,
         "constraint count must be positive and even, got " + std::to_string(n));
  }
  if (side == 0 || side % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument, "patch side must be odd");
  }

  std::vector<Pixel> changed;
  std::vector<Pixel> unchanged;
  for (std::uint32_t row = 0; row < labels.height(); ++row) {
    for (std::uint32_t col = 0; col < labels.width(); ++col) {
      (labels.at(row, col) ? changed : unchanged).push_back({row, col});
    }
  }
  const std::size_t half = n / 2;
  if (changed.size() < half || unchanged.size() < half) {
    Fail(ErrorKind::kInsufficientData,
         "need " + std::to_string(half) + " pixels of each class, have " +
             std::to_string(changed.size()) + " changed and " +
             std::to_string(unchanged.size()) + " unchanged");
  }

  // Every random draw happens here, in a fixed order, before any patch is
  // touched.
  std::mt19937_64 rng(seed);
  const auto pos_sites = draw_sites(std::move(changed), half, rng);
  const auto neg_sites = draw_sites(std::move(unchanged), half, rng);

  ConstraintSet cs;
  cs.d = side * side;
  cs.op = op;
  cs.pairs.reserve(n);
  auto emit = [&](const std::vector<Pixel>& sites, std::int8_t y) {
    for (const Pixel& c1 : sites) {
      ConstraintPair pair;
      pair.y = y;
      pair.center1 = c1;
      pair.center2 = jitter(c1, radius, labels, rng);
      cs.pairs.push_back(std::move(pair));
    }
  };
  emit(pos_sites, +1);
  emit(neg_sites, -1);

  for (auto& pair : cs.pairs) {
    pair.v = apply_diff(op, extract_patch(i1, pair.center1, side),
                        extract_patch(i2, pair.center2, side));
  }
  return cs;
}

void save_constraints(const ConstraintSet& cs,
                      const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.magic(kConstraintMagic);
  w.u32(static_cast<std::uint32_t>(cs.pairs.size()));
  w.u32(cs.d);
  w.u8(static_cast<std::uint8_t>(cs.op));
  for (const auto& p : cs.pairs) {
    if (p.v.size() != cs.d) {
      Fail(ErrorKind::kDimensionMismatch, "constraint vector length mismatch");
    }
    w.i8(p.y);
    w.u32(p.center1.row);
    w.u32(p.center1.col);
    w.u32(p.center2.row);
    w.u32(p.center2.col);
    for (Eigen::Index i = 0; i < p.v.size(); ++i) w.f64(p.v[i]);
  }
  w.write_to(path);
}

ConstraintSet load_constraints(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string source = path.string();
  detail::ByteReader r(bytes, source);
  if (!r.starts_with(kConstraintMagic)) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "' is not an SMCS constraint dump");
  }
  r.skip(kConstraintMagic.size());
  const std::uint32_t n = r.u32();
  ConstraintSet cs;
  cs.d = r.u32();
  const std::uint8_t tag = r.u8();
  if (tag > 1) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': unknown operator tag " + std::to_string(tag));
  }
  cs.op = static_cast<DiffOp>(tag);
  const std::size_t record = 1 + 16 + 8 * static_cast<std::size_t>(cs.d);
  if (r.remaining() < record * n) {
    Fail(ErrorKind::kTruncated, "'" + source + "': constraint payload truncated");
  }
  cs.pairs.resize(n);
  for (auto& p : cs.pairs) {
    p.y = r.i8();
    p.center1 = {r.u32(), r.u32()};
    p.center2 = {r.u32(), r.u32()};
    p.v.resize(cs.d);
    for (Eigen::Index i = 0; i < p.v.size(); ++i) p.v[i] = r.f64();
  }
  return cs;
}

}  // namespace smcd

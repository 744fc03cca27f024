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
#include <string>

#include "smcd/diffops.hpp"
#include "smcd/raster.hpp"

namespace smcd {

/// Per-pixel score map: score(patch of i1, patch of i2) for every pixel,
/// mirror-padded at the borders. Work is split across `threads` workers
/// (0 = hardware concurrency); the result does not depend on the split.
Raster difference_image(const Raster& i1, const Raster& i2,
                        const MetricModel& model, unsigned threads = 0);

enum class ThresholdMode { kSign, kOtsu };

ThresholdMode parse_threshold_mode(const std::string& name);

/// Otsu threshold over a 256-bin histogram of min-max scaled scores.
/// Returned in score units as the lower edge of the first "changed" bin.
double otsu_threshold(const Raster& scores);

/// sign: changed iff score >= 0. otsu: changed iff the pixel's histogram bin
/// lies above the Otsu split.
LabelMap change_map(const Raster& scores, ThresholdMode mode);

/// |mean over a window×window neighbourhood of ln(i1 / i2)|. window = 1 is
/// the plain pixelwise log-ratio.
Raster baseline_lr_map(const Raster& i1, const Raster& i2,
                       std::uint32_t window);

enum class PmaDenominator {
  kChanged,    ///< MA / #changed (conventional)
  kUnchanged,  ///< MA / #unchanged, the literal alternative
};

PmaDenominator parse_pma_denominator(const std::string& name);

struct EvalReport {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t fa = 0;
  std::uint64_t ma = 0;
  double p_fa = 0.0;
  double p_ma = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;  ///< chance agreement was exactly 1
};

EvalReport evaluate(const LabelMap& pred, const LabelMap& truth,
                    PmaDenominator denom = PmaDenominator::kChanged);

/// "key=value" lines in a fixed order.
std::string format_report(const EvalReport& report);

/// One space-separated line with the same fields in the same order.
std::string format_report_line(const EvalReport& report);

}  // namespace smcd

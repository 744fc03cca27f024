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

#include "smcd/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>
#include <vector>

#include "smcd/constraints.hpp"
#include "smcd/error.hpp"

namespace smcd {
namespace {

void require_same_dims(const Raster& a, const Raster& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    Fail(ErrorKind::kDimensionMismatch,
         "image sizes differ: " + std::to_string(a.width()) + "x" +
             std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
             "x" + std::to_string(b.height()));
  }
}

}  // namespace

Raster difference_image(const Raster& i1, const Raster& i2,
                        const MetricModel& model, unsigned threads) {
  require_same_dims(i1, i2);
  model.validate();
  Raster out(i1.width(), i1.height());
  const std::uint32_t height = i1.height();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, height);

  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned worker) {
    try {
      for (std::uint32_t row = worker; row < height; row += threads) {
        for (std::uint32_t col = 0; col < i1.width(); ++col) {
          const Pixel p{row, col};
          out.at(row, col) = static_cast<float>(
              score(extract_patch(i1, p, model.patch_side),
                    extract_patch(i2, p, model.patch_side), model));
        }
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "sign") return ThresholdMode::kSign;
  if (name == "otsu") return ThresholdMode::kOtsu;
  Fail(ErrorKind::kInvalidArgument,
       "unknown threshold mode '" + name + "' (sign|otsu)");
}

namespace {

struct OtsuSplit {
  double lo = 0.0;
  double range = 0.0;
  std::size_t last_low_bin = 0;  ///< bins 0..last_low_bin form the lower class

  std::size_t bin(float v) const {
    const double t = (v - lo) / range;
    return std::min<std::size_t>(255, static_cast<std::size_t>(t * 256.0));
  }
};

OtsuSplit otsu_split(const Raster& scores) {
  const auto& d = scores.data();
  if (d.empty()) Fail(ErrorKind::kInvalidArgument, "empty score map");
  for (float v : d) {
    if (!std::isfinite(v)) Fail(ErrorKind::kNonFinite, "score map has NaN or Inf");
  }
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  OtsuSplit split;
  split.lo = *lo_it;
  split.range = static_cast<double>(*hi_it) - split.lo;
  if (!(split.range > 0.0)) {
    Fail(ErrorKind::kNumeric, "score map is constant; no Otsu threshold exists");
  }

  std::array<double, 256> hist{};
  for (float v : d) hist[split.bin(v)] += 1;
  const double total = static_cast<double>(d.size());
  double sum_all = 0.0;
  for (std::size_t i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

  double best = -1.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (std::size_t k = 0; k < 255; ++k) {
    w0 += hist[k];
    sum0 += static_cast<double>(k) * hist[k];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      split.last_low_bin = k;
    }
  }
  return split;
}

}  // namespace

double otsu_threshold(const Raster& scores) {
  const OtsuSplit split = otsu_split(scores);
  return split.lo +
         split.range * static_cast<double>(split.last_low_bin + 1) / 256.0;
}

LabelMap change_map(const Raster& scores, ThresholdMode mode) {
  LabelMap out(scores.width(), scores.height());
  const auto& d = scores.data();
  if (mode == ThresholdMode::kSign) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i])) Fail(ErrorKind::kNonFinite, "score map has NaN or Inf");
      out.data()[i] = d[i] >= 0.0f ? 1 : 0;
    }
    return out;
  }
  const OtsuSplit split = otsu_split(scores);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.data()[i] = split.bin(d[i]) > split.last_low_bin ? 1 : 0;
  }
  return out;
}

Raster baseline_lr_map(const Raster& i1, const Raster& i2,
                       std::uint32_t window) {
  require_same_dims(i1, i2);
  if (window == 0 || window % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument, "baseline window must be odd");
  }
  const std::uint32_t w = i1.width();
  const std::uint32_t h = i1.height();
  std::vector<double> lr(i1.size());
  for (std::size_t i = 0; i < lr.size(); ++i) {
    const double a = i1.data()[i];
    const double b = i2.data()[i];
    if (!(a > 0.0) || !(b > 0.0)) {
      Fail(ErrorKind::kInvalidArgument, "log-ratio baseline needs positive intensities");
    }
    lr[i] = std::log(a) - std::log(b);
  }
  Raster out(w, h);
  const std::int64_t half = window / 2;
  const double norm = 1.0 / (static_cast<double>(window) * window);
  for (std::uint32_t row = 0; row < h; ++row) {
    for (std::uint32_t col = 0; col < w; ++col) {
      double sum = 0.0;
      for (std::int64_t dy = -half; dy <= half; ++dy) {
        const std::size_t r = mirror_index(row + dy, h);
        for (std::int64_t dx = -half; dx <= half; ++dx) {
          sum += lr[r * w + mirror_index(col + dx, w)];
        }
      }
      out.at(row, col) = static_cast<float>(std::abs(sum * norm));
    }
  }
  return out;
}

PmaDenominator parse_pma_denominator(const std::string& name) {
  if (name == "changed") return PmaDenominator::kChanged;
  if (name == "unchanged") return PmaDenominator::kUnchanged;
  Fail(ErrorKind::kInvalidArgument,
       "unknown pMA denominator '" + name + "' (changed|unchanged)");
}

EvalReport evaluate(const LabelMap& pred, const LabelMap& truth,
                    PmaDenominator denom) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    Fail(ErrorKind::kDimensionMismatch, "prediction and truth sizes differ");
  }
  EvalReport rep;
  const auto& p = pred.data();
  const auto& t = truth.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (t[i]) {
      (p[i] ? rep.tp : rep.fn) += 1;
    } else {
      (p[i] ? rep.fp : rep.tn) += 1;
    }
  }
  rep.fa = rep.fp;
  rep.ma = rep.fn;
  const double changed = static_cast<double>(rep.tp + rep.fn);
  const double unchanged = static_cast<double>(rep.tn + rep.fp);
  rep.p_fa = unchanged > 0 ? rep.fa / unchanged : 0.0;
  const double ma_base = denom == PmaDenominator::kChanged ? changed : unchanged;
  rep.p_ma = ma_base > 0 ? rep.ma / ma_base : 0.0;

  // Kappa from exact integer counts: (n·agree − chance) / (n² − chance),
  // so hand-checkable cases come out correctly rounded.
  using Wide = __int128;
  const Wide n = static_cast<Wide>(p.size());
  const Wide tp = rep.tp, fp = rep.fp, fn = rep.fn, tn = rep.tn;
  const Wide chance = (tp + fp) * (tp + fn) + (tn + fn) * (tn + fp);
  const Wide num = n * (tp + tn) - chance;
  const Wide den = n * n - chance;
  if (den == 0) {
    rep.kappa_degenerate = true;
    rep.kappa = tp + tn == n ? 1.0 : 0.0;
  } else {
    rep.kappa = static_cast<double>(num) / static_cast<double>(den);
  }
  return rep;
}

std::string format_report(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "tp=%llu\nfp=%llu\nfn=%llu\ntn=%llu\nfa=%llu\nma=%llu\n"
                "p_fa=%.10f\np_ma=%.10f\nkappa=%.10f\nkappa_degenerate=%d\n",
                static_cast<unsigned long long>(r.tp),
                static_cast<unsigned long long>(r.fp),
                static_cast<unsigned long long>(r.fn),
                static_cast<unsigned long long>(r.tn),
                static_cast<unsigned long long>(r.fa),
                static_cast<unsigned long long>(r.ma), r.p_fa, r.p_ma, r.kappa,
                r.kappa_degenerate ? 1 : 0);
  return buf;
}

std::string format_report_line(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "tp=%llu fp=%llu fn=%llu tn=%llu fa=%llu ma=%llu p_fa=%.10f "
                "p_ma=%.10f kappa=%.10f kappa_degenerate=%d\n",
                static_cast<unsigned long long>(r.tp),
                static_cast<unsigned long long>(r.fp),
                static_cast<unsigned long long>(r.fn),
                static_cast<unsigned long long>(r.tn),
                static_cast<unsigned long long>(r.fa),
                static_cast<unsigned long long>(r.ma), r.p_fa, r.p_ma, r.kappa,
                r.kappa_degenerate ? 1 : 0);
  return buf;
}

}  // namespace smcd

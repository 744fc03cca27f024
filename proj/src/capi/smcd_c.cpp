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

#include "smcd/smcd.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "smcd/constraints.hpp"
#include "smcd/error.hpp"
#include "smcd/inference.hpp"
#include "smcd/raster.hpp"
#include "smcd/solver.hpp"
#include "smcd/synth.hpp"

struct smcd_raster {
  smcd::Raster value;
};
struct smcd_labels {
  smcd::LabelMap value;
};
struct smcd_constraints {
  smcd::ConstraintSet value;
};
struct smcd_model {
  smcd::MetricModel value;
};

namespace {

thread_local std::string g_last_error;

smcd_status to_status(smcd::ErrorKind kind) {
  using smcd::ErrorKind;
  switch (kind) {
    case ErrorKind::kInvalidArgument: return SMCD_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return SMCD_ERR_IO;
    case ErrorKind::kNotFound: return SMCD_ERR_NOT_FOUND;
    case ErrorKind::kMalformedHeader: return SMCD_ERR_MALFORMED_HEADER;
    case ErrorKind::kTruncated: return SMCD_ERR_TRUNCATED;
    case ErrorKind::kZeroDimension: return SMCD_ERR_ZERO_DIMENSION;
    case ErrorKind::kNonFinite: return SMCD_ERR_NON_FINITE;
    case ErrorKind::kDimensionMismatch: return SMCD_ERR_DIMENSION_MISMATCH;
    case ErrorKind::kInsufficientData: return SMCD_ERR_INSUFFICIENT_DATA;
    case ErrorKind::kNumeric: return SMCD_ERR_NUMERIC;
  }
  return SMCD_ERR_INTERNAL;
}

template <typename Fn>
smcd_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SMCD_OK;
  } catch (const smcd::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SMCD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMCD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SMCD_ERR_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* what) {
  if (p == nullptr) {
    smcd::Fail(smcd::ErrorKind::kInvalidArgument,
               std::string(what) + " must not be null");
  }
}

void require_dims(uint32_t width, uint32_t height) {
  if (width == 0 || height == 0) {
    smcd::Fail(smcd::ErrorKind::kZeroDimension,
               "width and height must be positive");
  }
}

}  // namespace

extern "C" {

const char* smcd_version(void) { return "1.0.0"; }

const char* smcd_last_error(void) { return g_last_error.c_str(); }

const char* smcd_status_name(smcd_status status) {
  switch (status) {
    case SMCD_OK: return "ok";
    case SMCD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SMCD_ERR_IO: return "i/o error";
    case SMCD_ERR_NOT_FOUND: return "not found";
    case SMCD_ERR_MALFORMED_HEADER: return "malformed header";
    case SMCD_ERR_TRUNCATED: return "truncated payload";
    case SMCD_ERR_ZERO_DIMENSION: return "zero dimension";
    case SMCD_ERR_NON_FINITE: return "non-finite value";
    case SMCD_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case SMCD_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case SMCD_ERR_NUMERIC: return "numeric failure";
    case SMCD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

smcd_status smcd_raster_create(uint32_t width, uint32_t height,
                               const float* data, smcd_raster** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    require_dims(width, height);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<float> values(n, 0.0f);
    if (data != nullptr) values.assign(data, data + n);
    *out = new smcd_raster{smcd::Raster(width, height, std::move(values))};
  });
}

smcd_status smcd_raster_load(const char* path, smcd_raster_kind kind,
                             smcd_raster** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const auto k = kind == SMCD_RASTER_RAW ? smcd::RasterKind::kRaw
                                           : smcd::RasterKind::kIntensity;
    *out = new smcd_raster{smcd::load_raster(path, k)};
  });
}

smcd_status smcd_raster_save(const smcd_raster* raster, const char* path) {
  return guarded([&] {
    require(raster, "raster");
    require(path, "path");
    smcd::save_raster(raster->value, path);
  });
}

smcd_status smcd_raster_save_preview(const smcd_raster* raster,
                                     const char* path) {
  return guarded([&] {
    require(raster, "raster");
    require(path, "path");
    smcd::save_raster_preview(raster->value, path);
  });
}

uint32_t smcd_raster_width(const smcd_raster* raster) {
  return raster ? raster->value.width() : 0;
}
uint32_t smcd_raster_height(const smcd_raster* raster) {
  return raster ? raster->value.height() : 0;
}
const float* smcd_raster_data(const smcd_raster* raster) {
  return raster ? raster->value.data().data() : nullptr;
}
void smcd_raster_free(smcd_raster* raster) { delete raster; }

smcd_status smcd_labels_create(uint32_t width, uint32_t height,
                               const uint8_t* data, smcd_labels** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    require_dims(width, height);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> values(n, 0);
    if (data != nullptr) values.assign(data, data + n);
    *out = new smcd_labels{smcd::LabelMap(width, height, std::move(values))};
  });
}

smcd_status smcd_labels_load(const char* path, smcd_labels** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new smcd_labels{smcd::load_labels(path)};
  });
}

smcd_status smcd_labels_save(const smcd_labels* labels, const char* path) {
  return guarded([&] {
    require(labels, "labels");
    require(path, "path");
    smcd::save_labels(labels->value, path);
  });
}

uint32_t smcd_labels_width(const smcd_labels* labels) {
  return labels ? labels->value.width() : 0;
}
uint32_t smcd_labels_height(const smcd_labels* labels) {
  return labels ? labels->value.height() : 0;
}
const uint8_t* smcd_labels_data(const smcd_labels* labels) {
  return labels ? labels->value.data().data() : nullptr;
}
void smcd_labels_free(smcd_labels* labels) { delete labels; }

smcd_scene_config smcd_scene_config_default(void) {
  const smcd::SceneConfig d;
  return {d.width, d.height,    d.looks,    d.shift_y,
          d.shift_x, d.n_regions, d.contrast, d.seed};
}

smcd_status smcd_generate_scene(const smcd_scene_config* config,
                                smcd_raster** i1, smcd_raster** i2,
                                smcd_labels** truth) {
  return guarded([&] {
    require(config, "config");
    require(i1, "i1");
    require(i2, "i2");
    require(truth, "truth");
    smcd::SceneConfig cfg;
    cfg.width = config->width;
    cfg.height = config->height;
    cfg.looks = config->looks;
    cfg.shift_y = config->shift_y;
    cfg.shift_x = config->shift_x;
    cfg.n_regions = config->regions;
    cfg.contrast = config->contrast;
    cfg.seed = config->seed;
    smcd::Scene scene = smcd::gen_scene(cfg);
    auto a = std::make_unique<smcd_raster>(smcd_raster{std::move(scene.i1)});
    auto b = std::make_unique<smcd_raster>(smcd_raster{std::move(scene.i2)});
    auto t = std::make_unique<smcd_labels>(smcd_labels{std::move(scene.truth)});
    *i1 = a.release();
    *i2 = b.release();
    *truth = t.release();
  });
}

smcd_status smcd_sample_constraints(const smcd_raster* i1,
                                    const smcd_raster* i2,
                                    const smcd_labels* labels, smcd_diff_op op,
                                    uint32_t patch_side, uint32_t n,
                                    uint32_t radius, uint64_t seed,
                                    smcd_constraints** out) {
  return guarded([&] {
    require(i1, "i1");
    require(i2, "i2");
    require(labels, "labels");
    require(out, "out");
    if (op != SMCD_OP_SUB && op != SMCD_OP_LR) {
      smcd::Fail(smcd::ErrorKind::kInvalidArgument, "unknown operator");
    }
    *out = new smcd_constraints{smcd::sample_constraints(
        i1->value, i2->value, labels->value, static_cast<smcd::DiffOp>(op),
        patch_side, n, radius, seed)};
  });
}

smcd_status smcd_constraints_save(const smcd_constraints* cs,
                                  const char* path) {
  return guarded([&] {
    require(cs, "constraints");
    require(path, "path");
    smcd::save_constraints(cs->value, path);
  });
}

size_t smcd_constraints_count(const smcd_constraints* cs) {
  return cs ? cs->value.pairs.size() : 0;
}
void smcd_constraints_free(smcd_constraints* cs) { delete cs; }

smcd_train_config smcd_train_config_default(void) {
  const smcd::TrainConfig d;
  return {d.c, d.tol, d.max_iters, d.psd_project ? 1 : 0};
}

smcd_status smcd_train(const smcd_constraints* cs,
                       const smcd_train_config* config, smcd_log_fn log,
                       void* log_user, smcd_model** out,
                       smcd_train_summary* summary) {
  return guarded([&] {
    require(cs, "constraints");
    require(out, "out");
    smcd::TrainConfig cfg;
    if (config != nullptr) {
      cfg.c = config->c;
      cfg.tol = config->tol;
      cfg.max_iters = config->max_iters;
      cfg.psd_project = config->psd_project != 0;
    }
    smcd::IterationCallback cb;
    if (log != nullptr) {
      cb = [&](const smcd::IterationLog& e) {
        log(smcd::format_log_line(e).c_str(), log_user);
      };
    }
    smcd::TrainResult result = smcd::train(cs->value, cfg, cb);
    if (summary != nullptr) {
      summary->iterations = result.report.iterations;
      summary->converged = result.report.converged ? 1 : 0;
      summary->xi = result.report.xi;
      summary->violation = result.report.violation;
      summary->objective = result.report.objective;
    }
    *out = new smcd_model{std::move(result.model)};
  });
}

smcd_status smcd_model_load(const char* path, smcd_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new smcd_model{smcd::load_model(path)};
  });
}

smcd_status smcd_model_save(const smcd_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    smcd::save_model(model->value, path);
  });
}

uint32_t smcd_model_patch_side(const smcd_model* model) {
  return model ? model->value.patch_side : 0;
}
smcd_diff_op smcd_model_op(const smcd_model* model) {
  return model ? static_cast<smcd_diff_op>(model->value.op) : SMCD_OP_LR;
}
double smcd_model_bias(const smcd_model* model) {
  return model ? model->value.b : 0.0;
}

smcd_status smcd_model_matrix(const smcd_model* model, double* out,
                              size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto& m = model->value.m;
    const auto d = static_cast<std::size_t>(m.rows());
    if (capacity < d * d) {
      smcd::Fail(smcd::ErrorKind::kInvalidArgument,
                 "buffer holds " + std::to_string(capacity) + " values, need " +
                     std::to_string(d * d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out[i * d + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  });
}

void smcd_model_free(smcd_model* model) { delete model; }

smcd_status smcd_difference_image(const smcd_raster* i1, const smcd_raster* i2,
                                  const smcd_model* model, smcd_raster** out) {
  return guarded([&] {
    require(i1, "i1");
    require(i2, "i2");
    require(model, "model");
    require(out, "out");
    *out = new smcd_raster{
        smcd::difference_image(i1->value, i2->value, model->value)};
  });
}

smcd_status smcd_change_map(const smcd_raster* scores, smcd_threshold_mode mode,
                            smcd_labels** out) {
  return guarded([&] {
    require(scores, "scores");
    require(out, "out");
    const auto m = mode == SMCD_THRESHOLD_OTSU ? smcd::ThresholdMode::kOtsu
                                               : smcd::ThresholdMode::kSign;
    *out = new smcd_labels{smcd::change_map(scores->value, m)};
  });
}

smcd_status smcd_baseline_lr_map(const smcd_raster* i1, const smcd_raster* i2,
                                 uint32_t window, smcd_raster** out) {
  return guarded([&] {
    require(i1, "i1");
    require(i2, "i2");
    require(out, "out");
    *out = new smcd_raster{smcd::baseline_lr_map(i1->value, i2->value, window)};
  });
}

smcd_status smcd_evaluate(const smcd_labels* pred, const smcd_labels* truth,
                          smcd_pma_denominator denom, smcd_eval_report* out) {
  return guarded([&] {
    require(pred, "pred");
    require(truth, "truth");
    require(out, "out");
    const auto d = denom == SMCD_PMA_UNCHANGED
                       ? smcd::PmaDenominator::kUnchanged
                       : smcd::PmaDenominator::kChanged;
    const smcd::EvalReport r = smcd::evaluate(pred->value, truth->value, d);
    *out = {r.tp,   r.fp,   r.fn,    r.tn, r.fa, r.ma,
            r.p_fa, r.p_ma, r.kappa, r.kappa_degenerate ? 1 : 0};
  });
}

size_t smcd_format_report(const smcd_eval_report* report,
                          smcd_report_format format, char* buf,
                          size_t capacity) {
  if (report == nullptr) return 0;
  smcd::EvalReport r;
  r.tp = report->tp;
  r.fp = report->fp;
  r.fn = report->fn;
  r.tn = report->tn;
  r.fa = report->fa;
  r.ma = report->ma;
  r.p_fa = report->p_fa;
  r.p_ma = report->p_ma;
  r.kappa = report->kappa;
  r.kappa_degenerate = report->kappa_degenerate != 0;
  const std::string text = format == SMCD_REPORT_SINGLE_LINE
                               ? smcd::format_report_line(r)
                               : smcd::format_report(r);
  if (buf != nullptr && capacity > 0) {
    const std::size_t n = std::min(text.size(), capacity - 1);
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
  return text.size();
}

}  // extern "C"

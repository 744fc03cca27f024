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

#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "smcd/smcd.h"
#include "test_util.hpp"

namespace {

struct Handles {
  smcd_raster* i1 = nullptr;
  smcd_raster* i2 = nullptr;
  smcd_labels* truth = nullptr;
  ~Handles() {
    smcd_raster_free(i1);
    smcd_raster_free(i2);
    smcd_labels_free(truth);
  }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and version") {
  CHECK(std::string(smcd_version()) == "1.0.0");
  CHECK(std::string(smcd_status_name(SMCD_OK)) == "ok");
  CHECK(std::string(smcd_status_name(SMCD_ERR_NOT_FOUND)) == "not found");
  CHECK(std::string(smcd_status_name(static_cast<smcd_status>(99))).size() > 0);
}

TEST_CASE("raster handles") {
  const float px[] = {1, 2, 3, 4, 5, 6};
  smcd_raster* r = nullptr;
  REQUIRE(smcd_raster_create(3, 2, px, &r) == SMCD_OK);
  CHECK(smcd_raster_width(r) == 3);
  CHECK(smcd_raster_height(r) == 2);
  CHECK(std::memcmp(smcd_raster_data(r), px, sizeof px) == 0);

  smcd::TempDir dir;
  const std::string path = (dir / "r.sarr").string();
  REQUIRE(smcd_raster_save(r, path.c_str()) == SMCD_OK);
  smcd_raster* back = nullptr;
  REQUIRE(smcd_raster_load(path.c_str(), SMCD_RASTER_INTENSITY, &back) == SMCD_OK);
  CHECK(std::memcmp(smcd_raster_data(back), px, sizeof px) == 0);
  smcd_raster_free(back);
  smcd_raster_free(r);

  smcd_raster* none = nullptr;
  CHECK(smcd_raster_create(0, 2, px, &none) == SMCD_ERR_ZERO_DIMENSION);
  CHECK(none == nullptr);
  CHECK(smcd_raster_create(3, 2, px, nullptr) == SMCD_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(smcd_last_error()) > 0);
  smcd_raster_free(nullptr);
}

TEST_CASE("missing and malformed inputs map to distinct statuses") {
  smcd::TempDir dir;
  smcd_model* m = nullptr;
  CHECK(smcd_model_load((dir / "nope.smcd").string().c_str(), &m) ==
        SMCD_ERR_NOT_FOUND);
  CHECK(std::string(smcd_last_error()).find("nope.smcd") != std::string::npos);
  smcd::write_text(dir / "bad.smcd", "JUNKJUNKJUNKJUNKJUNK");
  CHECK(smcd_model_load((dir / "bad.smcd").string().c_str(), &m) ==
        SMCD_ERR_MALFORMED_HEADER);
  smcd::write_text(dir / "short.sarr", std::string("SARR\x02\0\0\0\x02\0\0\0", 12));
  smcd_raster* r = nullptr;
  CHECK(smcd_raster_load((dir / "short.sarr").string().c_str(), SMCD_RASTER_RAW,
                         &r) == SMCD_ERR_TRUNCATED);
  CHECK(m == nullptr);
  CHECK(r == nullptr);
}

TEST_CASE("end to end through the C interface") {
  smcd_scene_config sc = smcd_scene_config_default();
  CHECK(sc.width == 128);
  CHECK(sc.looks == 1);
  sc.width = sc.height = 48;
  sc.looks = 4;
  sc.seed = 11;
  Handles h;
  REQUIRE(smcd_generate_scene(&sc, &h.i1, &h.i2, &h.truth) == SMCD_OK);

  smcd_constraints* cs = nullptr;
  REQUIRE(smcd_sample_constraints(h.i1, h.i2, h.truth, SMCD_OP_LR, 3, 200, 2, 0,
                                  &cs) == SMCD_OK);
  CHECK(smcd_constraints_count(cs) == 200);

  smcd_train_config tc = smcd_train_config_default();
  CHECK(tc.c == 40.0);
  CHECK(tc.psd_project != 0);
  std::vector<std::string> lines;
  auto log = [](const char* line, void* user) {
    static_cast<std::vector<std::string>*>(user)->emplace_back(line);
  };
  smcd_model* model = nullptr;
  smcd_train_summary summary{};
  REQUIRE(smcd_train(cs, &tc, log, &lines, &model, &summary) == SMCD_OK);
  CHECK(summary.converged);
  CHECK(lines.size() == summary.iterations);
  CHECK(std::count(lines.front().begin(), lines.front().end(), '\t') == 4);
  CHECK(smcd_model_patch_side(model) == 3);
  CHECK(smcd_model_op(model) == SMCD_OP_LR);

  std::vector<double> m(81);
  CHECK(smcd_model_matrix(model, m.data(), 80) == SMCD_ERR_INVALID_ARGUMENT);
  REQUIRE(smcd_model_matrix(model, m.data(), m.size()) == SMCD_OK);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) CHECK(m[i * 9 + j] == m[j * 9 + i]);
  }

  smcd_raster* scores = nullptr;
  REQUIRE(smcd_difference_image(h.i1, h.i2, model, &scores) == SMCD_OK);
  smcd_labels* pred = nullptr;
  REQUIRE(smcd_change_map(scores, SMCD_THRESHOLD_SIGN, &pred) == SMCD_OK);
  smcd_eval_report rep{};
  REQUIRE(smcd_evaluate(pred, h.truth, SMCD_PMA_CHANGED, &rep) == SMCD_OK);
  CHECK(rep.tp + rep.fp + rep.fn + rep.tn == 48u * 48u);
  CHECK(rep.kappa > 0.0);

  const size_t need = smcd_format_report(&rep, SMCD_REPORT_KEY_VALUE, nullptr, 0);
  std::string buf(need + 1, '\0');
  CHECK(smcd_format_report(&rep, SMCD_REPORT_KEY_VALUE, buf.data(), buf.size()) == need);
  CHECK(buf.rfind("tp=", 0) == 0);
  char tiny[8];
  CHECK(smcd_format_report(&rep, SMCD_REPORT_SINGLE_LINE, tiny, sizeof tiny) > 7);
  CHECK(tiny[7] == '\0');

  smcd::TempDir dir;
  const std::string mp = (dir / "m.smcd").string();
  REQUIRE(smcd_model_save(model, mp.c_str()) == SMCD_OK);
  smcd_model* loaded = nullptr;
  REQUIRE(smcd_model_load(mp.c_str(), &loaded) == SMCD_OK);
  CHECK(smcd_model_bias(loaded) == smcd_model_bias(model));

  smcd_raster* base = nullptr;
  REQUIRE(smcd_baseline_lr_map(h.i1, h.i2, 1, &base) == SMCD_OK);
  smcd_labels* base_pred = nullptr;
  REQUIRE(smcd_change_map(base, SMCD_THRESHOLD_OTSU, &base_pred) == SMCD_OK);

  smcd_labels_free(base_pred);
  smcd_raster_free(base);
  smcd_model_free(loaded);
  smcd_labels_free(pred);
  smcd_raster_free(scores);
  smcd_model_free(model);
  smcd_constraints_free(cs);
}

TEST_CASE("library errors surface as statuses") {
  smcd_scene_config sc = smcd_scene_config_default();
  sc.looks = 0;
  Handles h;
  CHECK(smcd_generate_scene(&sc, &h.i1, &h.i2, &h.truth) == SMCD_ERR_INVALID_ARGUMENT);
  CHECK(std::string(smcd_last_error()).find("looks") != std::string::npos);

  const float a[] = {1, 1, 1, 1};
  smcd_raster* r1 = nullptr;
  smcd_raster* r2 = nullptr;
  REQUIRE(smcd_raster_create(2, 2, a, &r1) == SMCD_OK);
  REQUIRE(smcd_raster_create(4, 1, a, &r2) == SMCD_OK);
  smcd_raster* out = nullptr;
  CHECK(smcd_baseline_lr_map(r1, r2, 1, &out) == SMCD_ERR_DIMENSION_MISMATCH);
  smcd_labels* l = nullptr;
  CHECK(smcd_change_map(r1, SMCD_THRESHOLD_OTSU, &l) == SMCD_ERR_NUMERIC);
  const uint8_t bad[] = {0, 2, 0, 0};
  CHECK(smcd_labels_create(2, 2, bad, &l) == SMCD_ERR_INVALID_ARGUMENT);

  const uint8_t ones[] = {1, 1, 1, 1};
  smcd_labels* all = nullptr;
  REQUIRE(smcd_labels_create(2, 2, ones, &all) == SMCD_OK);
  smcd_constraints* cs = nullptr;
  CHECK(smcd_sample_constraints(r1, r1, all, SMCD_OP_SUB, 1, 2, 0, 0, &cs) ==
        SMCD_ERR_INSUFFICIENT_DATA);
  smcd_labels_free(all);
  smcd_raster_free(r1);
  smcd_raster_free(r2);
}

}  // TEST_SUITE

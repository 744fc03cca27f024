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

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"

#include "doctest.h"
#include "smcd/diffops.hpp"
#include "smcd/inference.hpp"
#include "smcd/raster.hpp"
#include "test_util.hpp"

using namespace smcd;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the smcd binary, capturing exit code, stdout and stderr.
Run smcd_run(const TempDir& dir, const std::vector<std::string>& args) {
  std::string cmd = quote(SMCD_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string path(const TempDir& dir, const std::string& name) {
  return (dir / name).string();
}

// Small scene used by most tests; the default 128x128 scene keeps the
// sampler happy at the default patch side.
void synth(const TempDir& dir, const std::string& sub, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"synth", "--looks", "2", "--seed", "7",
                                "--out", path(dir, sub)};
  args.insert(args.end(), extra.begin(), extra.end());
  const Run r = smcd_run(dir, args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

void train(const TempDir& dir, const std::string& scene, const std::string& op,
           const std::string& out) {
  const Run r = smcd_run(dir, {"train", "--i1", path(dir, scene + "/i1.sarr"),
                               "--i2", path(dir, scene + "/i2.sarr"), "--labels",
                               path(dir, scene + "/truth.pgm"), "--op", op, "--patch",
                               "3", "--n", "400", "--quiet", "--out", path(dir, out)});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes the scene triple and is reproducible") {
  TempDir dir;
  synth(dir, "a", {"--width", "128", "--height", "128"});
  synth(dir, "b", {"--width", "128", "--height", "128"});
  for (const char* f : {"i1.sarr", "i2.sarr", "truth.pgm"}) {
    CHECK(std::filesystem::exists(dir / "a" / f));
    CHECK(read_bytes(dir / "a" / f) == read_bytes(dir / "b" / f));
  }
  const auto m = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(m["command"] == "synth");
  CHECK(m["params"]["looks"] == 2);
  CHECK(m["seed"] == 7);
  CHECK(m["outputs"].size() == 3);
}

TEST_CASE("synth rejects zero looks") {
  TempDir dir;
  const Run r = smcd_run(dir, {"synth", "--looks", "0", "--out", path(dir, "x")});
  CHECK(r.code == 1);
  CHECK(r.err.find("looks") != std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
  TempDir dir;
  CHECK(smcd_run(dir, {"synth", "--bogus"}).code == 1);
  CHECK(smcd_run(dir, {}).code == 1);
  CHECK(smcd_run(dir, {"train", "--op", "div"}).code == 1);
}

TEST_CASE("train defaults are echoed in the manifest") {
  TempDir dir;
  synth(dir, "s");
  const Run r = smcd_run(dir, {"train", "--i1", path(dir, "s/i1.sarr"), "--i2",
                               path(dir, "s/i2.sarr"), "--labels", path(dir, "s/truth.pgm"),
                               "--dry-run", "--out", path(dir, "m.smcd")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.err.find("memory-heavy") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "m.smcd"));
  const auto m = nlohmann::json::parse(slurp(dir / "m.smcd.manifest.json"));
  CHECK(m["params"]["c"] == 40.0);
  CHECK(m["params"]["n"] == 2000);
  CHECK(m["params"]["patch"] == 23);
  CHECK(m["params"]["radius"] == 2);
  CHECK(m["params"]["op"] == "lr");
}

TEST_CASE("train variants, log and determinism") {
  TempDir dir;
  synth(dir, "s", {"--width", "64", "--height", "64"});
  train(dir, "s", "lr", "lr1.smcd");
  train(dir, "s", "lr", "lr2.smcd");
  train(dir, "s", "sub", "sub.smcd");
  CHECK(read_bytes(dir / "lr1.smcd") == read_bytes(dir / "lr2.smcd"));
  CHECK(load_model((dir / "lr1.smcd").string()).op == DiffOp::kLr);
  CHECK(load_model((dir / "sub.smcd").string()).op == DiffOp::kSub);

  const Run r = smcd_run(dir, {"train", "--i1", path(dir, "s/i1.sarr"), "--i2",
                               path(dir, "s/i2.sarr"), "--labels", path(dir, "s/truth.pgm"),
                               "--patch", "3", "--n", "100", "--out", path(dir, "v.smcd")});
  REQUIRE(r.code == 0);
  CHECK(r.err.rfind("iter\tworking_set\txi\tviolation\tobjective\n", 0) == 0);
  CHECK(r.err.find("\n1\t0\t0\t1\t0\n") != std::string::npos);
}

TEST_CASE("train propagates data errors") {
  TempDir dir;
  synth(dir, "s", {"--width", "32", "--height", "32", "--regions", "1"});
  const Run r = smcd_run(dir, {"train", "--i1", path(dir, "s/i1.sarr"), "--i2",
                               path(dir, "s/i2.sarr"), "--labels", path(dir, "s/truth.pgm"),
                               "--patch", "3", "--n", "4000", "--out", path(dir, "m.smcd")});
  CHECK(r.code == 2);
  CHECK(r.err.find("insufficient") != std::string::npos);
  const Run odd = smcd_run(dir, {"train", "--i1", path(dir, "s/i1.sarr"), "--i2",
                                 path(dir, "s/i2.sarr"), "--labels",
                                 path(dir, "s/truth.pgm"), "--patch", "4", "--n", "10",
                                 "--out", path(dir, "m.smcd")});
  CHECK(odd.code == 1);
}

TEST_CASE("infer then eval matches the library pipeline") {
  TempDir dir;
  synth(dir, "s", {"--width", "64", "--height", "64"});
  train(dir, "s", "lr", "m.smcd");
  Run r = smcd_run(dir, {"infer", "--i1", path(dir, "s/i1.sarr"), "--i2",
                         path(dir, "s/i2.sarr"), "--model", path(dir, "m.smcd"),
                         "--out", path(dir, "out/run")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"run.scores.sarr", "run.scores.pgm", "run.change.pgm",
                        "run.manifest.json"}) {
    CHECK(std::filesystem::exists(dir / "out" / f));
  }
  r = smcd_run(dir, {"eval", "--pred", path(dir, "out/run.change.pgm"), "--truth",
                     path(dir, "s/truth.pgm")});
  REQUIRE(r.code == 0);

  const Raster i1 = load_raster(path(dir, "s/i1.sarr"));
  const Raster i2 = load_raster(path(dir, "s/i2.sarr"));
  const MetricModel model = load_model(path(dir, "m.smcd"));
  const Raster scores = difference_image(i1, i2, model);
  CHECK(load_raster(path(dir, "out/run.scores.sarr"), RasterKind::kRaw) == scores);
  const EvalReport rep = evaluate(change_map(scores, ThresholdMode::kSign),
                                  load_labels(path(dir, "s/truth.pgm")));
  CHECK(r.out == format_report(rep));
}

TEST_CASE("sign mode on identical dates with negative bias finds no change") {
  TempDir dir;
  synth(dir, "s", {"--width", "32", "--height", "32"});
  save_model(MetricModel::from_matrix(Eigen::MatrixXd::Identity(9, 9), -0.25,
                                      DiffOp::kLr, 3),
             path(dir, "m.smcd"));
  const Run r = smcd_run(dir, {"infer", "--i1", path(dir, "s/i1.sarr"), "--i2",
                               path(dir, "s/i1.sarr"), "--model", path(dir, "m.smcd"),
                               "--mode", "sign", "--out", path(dir, "x")});
  REQUIRE(r.code == 0);
  CHECK(load_labels(path(dir, "x.change.pgm")).count_changed() == 0);
}

TEST_CASE("missing and malformed models are reported differently") {
  TempDir dir;
  synth(dir, "s", {"--width", "32", "--height", "32"});
  const std::vector<std::string> base{"infer", "--i1", path(dir, "s/i1.sarr"),
                                      "--i2", path(dir, "s/i2.sarr"), "--out",
                                      path(dir, "x"), "--model"};
  auto args = base;
  args.push_back(path(dir, "none.smcd"));
  const Run missing = smcd_run(dir, args);
  write_text(dir / "bad.smcd", "SMCX not a model at all");
  args = base;
  args.push_back(path(dir, "bad.smcd"));
  const Run bad = smcd_run(dir, args);
  CHECK(missing.code == 2);
  CHECK(bad.code == 2);
  CHECK(missing.err.find("not found") != std::string::npos);
  CHECK(bad.err.find("malformed header") != std::string::npos);
  CHECK(missing.err != bad.err);

  save_model(MetricModel::from_matrix(Eigen::MatrixXd::Identity(9, 9), 0.0,
                                      DiffOp::kLr, 3),
             path(dir, "ok.smcd"));
  const Run mismatch = smcd_run(
      dir, {"infer", "--i1", path(dir, "s/i1.sarr"), "--i2", path(dir, "s/truth.pgm"),
            "--model", path(dir, "ok.smcd"), "--out", path(dir, "y")});
  CHECK(mismatch.code == 0);  // 32x32 PGM is a valid intensity raster too
}

TEST_CASE("eval reports") {
  TempDir dir;
  synth(dir, "s", {"--width", "40", "--height", "30"});
  const std::string t = path(dir, "s/truth.pgm");
  Run r = smcd_run(dir, {"eval", "--pred", t, "--truth", t, "--format", "line"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kappa=1.0000000000") != std::string::npos);

  LabelMap none(40, 30);
  save_labels(none, path(dir, "none.pgm"));
  r = smcd_run(dir, {"eval", "--pred", path(dir, "none.pgm"), "--truth", t});
  const Run lit = smcd_run(dir, {"eval", "--pred", path(dir, "none.pgm"), "--truth", t,
                                 "--pma-denominator", "unchanged"});
  REQUIRE(r.code == 0);
  REQUIRE(lit.code == 0);
  CHECK(r.out.find("p_ma=1.0000000000") != std::string::npos);
  CHECK(lit.out.find("p_ma=1.0000000000") == std::string::npos);

  const LabelMap truth = load_labels(t);
  std::uint64_t sum = 0;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) {
    for (const char* k : {"tp=", "fp=", "fn=", "tn="}) {
      if (line.rfind(k, 0) == 0) sum += std::stoull(line.substr(3));
    }
  }
  CHECK(sum == 40u * 30u);
  CHECK(truth.count_changed() > 0);

  save_labels(LabelMap(5, 5), path(dir, "small.pgm"));
  CHECK(smcd_run(dir, {"eval", "--pred", path(dir, "small.pgm"), "--truth", t}).code == 2);
  CHECK(smcd_run(dir, {"eval", "--pred", t, "--truth", t, "--pma-denominator", "x"}).code == 1);
}

TEST_CASE("baseline composes, repeats and validates") {
  TempDir dir;
  synth(dir, "s", {"--width", "64", "--height", "64"});
  const std::vector<std::string> args{"baseline", "--i1", path(dir, "s/i1.sarr"),
                                      "--i2", path(dir, "s/i2.sarr"), "--truth",
                                      path(dir, "s/truth.pgm"), "--out", path(dir, "b")};
  const Run a = smcd_run(dir, args);
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const auto first = read_bytes(dir / "b.scores.sarr");
  const Run b = smcd_run(dir, args);
  CHECK(a.out == b.out);
  CHECK(read_bytes(dir / "b.scores.sarr") == first);

  const Raster i1 = load_raster(path(dir, "s/i1.sarr"));
  const Raster i2 = load_raster(path(dir, "s/i2.sarr"));
  const EvalReport rep =
      evaluate(change_map(baseline_lr_map(i1, i2, 1), ThresholdMode::kOtsu),
               load_labels(path(dir, "s/truth.pgm")));
  CHECK(a.out == format_report(rep));

  auto missing = args;
  missing[2] = path(dir, "nope.sarr");
  CHECK(smcd_run(dir, missing).code == 2);
  auto even = args;
  even.insert(even.end(), {"--window", "2"});
  CHECK(smcd_run(dir, even).code == 1);
}

TEST_CASE("manifests replay byte-identically") {
  TempDir dir;
  synth(dir, "s", {"--width", "48", "--height", "48", "--shift-y", "0.8",
                   "--shift-x", "-0.6"});
  const auto i1 = read_bytes(dir / "s" / "i1.sarr");
  const auto i2 = read_bytes(dir / "s" / "i2.sarr");
  std::filesystem::remove(dir / "s" / "i1.sarr");
  std::filesystem::remove(dir / "s" / "i2.sarr");
  Run r = smcd_run(dir, {"--from-manifest", path(dir, "s/manifest.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_bytes(dir / "s" / "i1.sarr") == i1);
  CHECK(read_bytes(dir / "s" / "i2.sarr") == i2);

  train(dir, "s", "sub", "m.smcd");
  const auto model = read_bytes(dir / "m.smcd");
  std::filesystem::remove(dir / "m.smcd");
  r = smcd_run(dir, {"--from-manifest", path(dir, "m.smcd.manifest.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_bytes(dir / "m.smcd") == model);

  CHECK(smcd_run(dir, {"--from-manifest", path(dir, "absent.json")}).code == 2);
  write_text(dir / "junk.json", "{not json");
  CHECK(smcd_run(dir, {"--from-manifest", path(dir, "junk.json")}).code == 2);
}

}  // TEST_SUITE

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

// smcd: command-line front end over the C API.
//
//   smcd synth    generate a speckled scene pair with ground truth
//   smcd train    sample constraint pairs and learn a metric
//   smcd infer    score an image pair and threshold it into a change map
//   smcd eval     compare a change map with ground truth
//   smcd baseline pixelwise log-ratio + Otsu, evaluated against truth
//
// Every run that writes files also writes a JSON manifest; passing it back
// via `smcd --from-manifest FILE` repeats the run with the same arguments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smcd/smcd.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class CommandError : public std::runtime_error {
 public:
  CommandError(smcd_status status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  smcd_status status() const { return status_; }

 private:
  smcd_status status_;
};

int exit_code_for(smcd_status status) {
  switch (status) {
    case SMCD_OK: return kOk;
    case SMCD_ERR_INVALID_ARGUMENT: return kUsage;
    case SMCD_ERR_NUMERIC:
    case SMCD_ERR_INTERNAL: return kNumeric;
    default: return kData;
  }
}

void check(smcd_status status, const std::string& context) {
  if (status != SMCD_OK) {
    throw CommandError(status, context + ": " + smcd_status_name(status) +
                                   ": " + smcd_last_error());
  }
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using RasterPtr = std::unique_ptr<smcd_raster, Deleter<smcd_raster, smcd_raster_free>>;
using LabelsPtr = std::unique_ptr<smcd_labels, Deleter<smcd_labels, smcd_labels_free>>;
using ModelPtr = std::unique_ptr<smcd_model, Deleter<smcd_model, smcd_model_free>>;
using ConstraintsPtr =
    std::unique_ptr<smcd_constraints, Deleter<smcd_constraints, smcd_constraints_free>>;

RasterPtr load_raster(const std::string& path, smcd_raster_kind kind) {
  smcd_raster* r = nullptr;
  check(smcd_raster_load(path.c_str(), kind, &r), "loading " + path);
  return RasterPtr(r);
}

LabelsPtr load_labels(const std::string& path) {
  smcd_labels* l = nullptr;
  check(smcd_labels_load(path.c_str(), &l), "loading " + path);
  return LabelsPtr(l);
}

void ensure_parent(const fs::path& file) {
  const fs::path parent = file.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) {
    throw CommandError(SMCD_ERR_IO, "cannot create directory '" +
                                        parent.string() + "': " + ec.message());
  }
}

std::string report_text(const smcd_eval_report& rep, smcd_report_format fmt) {
  std::string text(smcd_format_report(&rep, fmt, nullptr, 0), '\0');
  smcd_format_report(&rep, fmt, text.data(), text.size() + 1);
  return text;
}

// Params are stored in flag order; the replay argv is rebuilt from them so
// the manifest cannot drift from what the run used.
struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  json params = json::object();
  std::vector<std::string> outputs;

  template <typename T>
  void set(const std::string& key, const T& value) {
    params[key] = value;
  }

  std::vector<std::string> argv() const {
    std::vector<std::string> args{command};
    for (const auto& [key, value] : params.items()) {
      if (value.is_boolean()) {
        if (value.get<bool>()) args.push_back("--" + key);
      } else {
        args.push_back("--" + key);
        args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
      }
    }
    return args;
  }

  void write(const fs::path& path) const {
    json doc;
    doc["tool"] = "smcd";
    doc["version"] = smcd_version();
    doc["command"] = command;
    doc["params"] = params;
    if (params.contains("seed")) doc["seed"] = params["seed"];
    doc["outputs"] = outputs;
    doc["argv"] = argv();
    ensure_parent(path);
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out) throw CommandError(SMCD_ERR_IO, "cannot write manifest '" + path.string() + "'");
  }
};

struct SynthOptions {
  smcd_scene_config scene = smcd_scene_config_default();
  std::string out = ".";
  std::string manifest;
};

struct TrainOptions {
  std::string i1, i2, labels;
  std::string op = "lr";
  unsigned patch = 23;
  unsigned n = 2000;
  double c = 40.0;
  unsigned radius = 2;
  std::uint64_t seed = 0;
  double tol = smcd_train_config_default().tol;
  unsigned max_iters = smcd_train_config_default().max_iters;
  bool no_psd = false;
  bool quiet = false;
  bool dry_run = false;
  std::string dump_constraints;
  std::string out = "model.smcd";
  std::string manifest;
};

struct InferOptions {
  std::string i1, i2, model;
  std::string mode = "sign";
  std::string out = "infer";
  std::string manifest;
};

struct EvalOptions {
  std::string pred, truth;
  std::string pma_denominator = "changed";
  std::string format = "kv";
  std::string manifest;
};

struct BaselineOptions {
  std::string i1, i2, truth;
  unsigned window = 1;
  std::string pma_denominator = "changed";
  std::string format = "kv";
  std::string out = "baseline";
  std::string manifest;
};

smcd_pma_denominator pma_of(const std::string& s) {
  return s == "unchanged" ? SMCD_PMA_UNCHANGED : SMCD_PMA_CHANGED;
}
smcd_report_format format_of(const std::string& s) {
  return s == "line" ? SMCD_REPORT_SINGLE_LINE : SMCD_REPORT_KEY_VALUE;
}

std::string with_suffix(const std::string& prefix, const char* suffix) {
  return prefix + suffix;
}

int run_synth(const SynthOptions& o) {
  smcd_raster* a = nullptr;
  smcd_raster* b = nullptr;
  smcd_labels* t = nullptr;
  check(smcd_generate_scene(&o.scene, &a, &b, &t), "generating scene");
  RasterPtr i1(a), i2(b);
  LabelsPtr truth(t);

  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandError(SMCD_ERR_IO, "cannot create '" + dir.string() + "': " + ec.message());
  const std::string p1 = (dir / "i1.sarr").string();
  const std::string p2 = (dir / "i2.sarr").string();
  const std::string pt = (dir / "truth.pgm").string();
  check(smcd_raster_save(i1.get(), p1.c_str()), "writing " + p1);
  check(smcd_raster_save(i2.get(), p2.c_str()), "writing " + p2);
  check(smcd_labels_save(truth.get(), pt.c_str()), "writing " + pt);

  Manifest m("synth");
  m.set("width", o.scene.width);
  m.set("height", o.scene.height);
  m.set("looks", o.scene.looks);
  m.set("shift-y", o.scene.shift_y);
  m.set("shift-x", o.scene.shift_x);
  m.set("regions", o.scene.regions);
  m.set("contrast", o.scene.contrast);
  m.set("seed", o.scene.seed);
  m.set("out", o.out);
  m.outputs = {p1, p2, pt};
  m.write(o.manifest.empty() ? dir / "manifest.json" : fs::path(o.manifest));
  return kOk;
}

int run_train(const TrainOptions& o) {
  if (o.op != "lr" && o.op != "sub") {
    throw CommandError(SMCD_ERR_INVALID_ARGUMENT, "--op must be 'lr' or 'sub'");
  }
  if (o.patch > 9) {
    std::cerr << "warning: --patch " << o.patch
              << " lifts each pair to " << (o.patch * o.patch) * (o.patch * o.patch) + 1
              << " features; this is memory-heavy (desk-scale runs use --patch 5 or 7)\n";
  }
  auto i1 = load_raster(o.i1, SMCD_RASTER_INTENSITY);
  auto i2 = load_raster(o.i2, SMCD_RASTER_INTENSITY);
  auto labels = load_labels(o.labels);

  smcd_constraints* raw_cs = nullptr;
  check(smcd_sample_constraints(i1.get(), i2.get(), labels.get(),
                                o.op == "sub" ? SMCD_OP_SUB : SMCD_OP_LR, o.patch,
                                o.n, o.radius, o.seed, &raw_cs),
        "sampling constraints");
  ConstraintsPtr cs(raw_cs);
  if (!o.dump_constraints.empty()) {
    ensure_parent(o.dump_constraints);
    check(smcd_constraints_save(cs.get(), o.dump_constraints.c_str()),
          "writing " + o.dump_constraints);
  }

  Manifest m("train");
  m.set("i1", o.i1);
  m.set("i2", o.i2);
  m.set("labels", o.labels);
  m.set("op", o.op);
  m.set("patch", o.patch);
  m.set("n", o.n);
  m.set("c", o.c);
  m.set("radius", o.radius);
  m.set("seed", o.seed);
  m.set("tol", o.tol);
  m.set("max-iters", o.max_iters);
  m.set("no-psd", o.no_psd);
  m.set("quiet", o.quiet);
  m.set("dry-run", o.dry_run);
  if (!o.dump_constraints.empty()) m.set("dump-constraints", o.dump_constraints);
  m.set("out", o.out);
  const fs::path manifest_path =
      o.manifest.empty() ? fs::path(o.out + ".manifest.json") : fs::path(o.manifest);
  if (o.dry_run) {
    std::cerr << "dry run: sampled " << smcd_constraints_count(cs.get())
              << " pairs; skipping training\n";
    if (!o.dump_constraints.empty()) m.outputs = {o.dump_constraints};
    m.write(manifest_path);
    return kOk;
  }

  smcd_train_config cfg = smcd_train_config_default();
  cfg.c = o.c;
  cfg.tol = o.tol;
  cfg.max_iters = o.max_iters;
  cfg.psd_project = o.no_psd ? 0 : 1;
  smcd_log_fn log = nullptr;
  if (!o.quiet) {
    std::cerr << "iter\tworking_set\txi\tviolation\tobjective\n";
    log = [](const char* line, void*) { std::cerr << line << '\n'; };
  }
  smcd_model* raw_model = nullptr;
  smcd_train_summary summary{};
  check(smcd_train(cs.get(), &cfg, log, nullptr, &raw_model, &summary), "training");
  ModelPtr model(raw_model);
  if (!summary.converged) {
    std::cerr << "warning: stopped after " << summary.iterations
              << " iterations with violation " << summary.violation
              << " (tol " << o.tol << ")\n";
  }

  ensure_parent(o.out);
  check(smcd_model_save(model.get(), o.out.c_str()), "writing " + o.out);

  m.outputs = {o.out};
  if (!o.dump_constraints.empty()) m.outputs.push_back(o.dump_constraints);
  m.write(manifest_path);
  return kOk;
}

int run_infer(const InferOptions& o) {
  if (o.mode != "sign" && o.mode != "otsu") {
    throw CommandError(SMCD_ERR_INVALID_ARGUMENT, "--mode must be 'sign' or 'otsu'");
  }
  smcd_model* raw_model = nullptr;
  check(smcd_model_load(o.model.c_str(), &raw_model), "loading model " + o.model);
  ModelPtr model(raw_model);
  auto i1 = load_raster(o.i1, SMCD_RASTER_INTENSITY);
  auto i2 = load_raster(o.i2, SMCD_RASTER_INTENSITY);

  smcd_raster* raw_scores = nullptr;
  check(smcd_difference_image(i1.get(), i2.get(), model.get(), &raw_scores),
        "computing difference image");
  RasterPtr scores(raw_scores);
  smcd_labels* raw_map = nullptr;
  check(smcd_change_map(scores.get(),
                        o.mode == "otsu" ? SMCD_THRESHOLD_OTSU : SMCD_THRESHOLD_SIGN,
                        &raw_map),
        "thresholding");
  LabelsPtr map(raw_map);

  const std::string scores_path = with_suffix(o.out, ".scores.sarr");
  const std::string preview_path = with_suffix(o.out, ".scores.pgm");
  const std::string change_path = with_suffix(o.out, ".change.pgm");
  ensure_parent(scores_path);
  check(smcd_raster_save(scores.get(), scores_path.c_str()), "writing " + scores_path);
  check(smcd_raster_save_preview(scores.get(), preview_path.c_str()),
        "writing " + preview_path);
  check(smcd_labels_save(map.get(), change_path.c_str()), "writing " + change_path);

  Manifest m("infer");
  m.set("i1", o.i1);
  m.set("i2", o.i2);
  m.set("model", o.model);
  m.set("mode", o.mode);
  m.set("out", o.out);
  m.outputs = {scores_path, preview_path, change_path};
  m.write(o.manifest.empty() ? fs::path(o.out + ".manifest.json") : fs::path(o.manifest));
  return kOk;
}

int run_eval(const EvalOptions& o) {
  auto pred = load_labels(o.pred);
  auto truth = load_labels(o.truth);
  smcd_eval_report rep{};
  check(smcd_evaluate(pred.get(), truth.get(), pma_of(o.pma_denominator), &rep),
        "evaluating");
  std::cout << report_text(rep, format_of(o.format));
  if (!o.manifest.empty()) {
    Manifest m("eval");
    m.set("pred", o.pred);
    m.set("truth", o.truth);
    m.set("pma-denominator", o.pma_denominator);
    m.set("format", o.format);
    m.set("manifest", o.manifest);
    m.write(o.manifest);
  }
  return kOk;
}

int run_baseline(const BaselineOptions& o) {
  auto i1 = load_raster(o.i1, SMCD_RASTER_INTENSITY);
  auto i2 = load_raster(o.i2, SMCD_RASTER_INTENSITY);
  auto truth = load_labels(o.truth);

  smcd_raster* raw_scores = nullptr;
  check(smcd_baseline_lr_map(i1.get(), i2.get(), o.window, &raw_scores),
        "computing log-ratio map");
  RasterPtr scores(raw_scores);
  smcd_labels* raw_map = nullptr;
  check(smcd_change_map(scores.get(), SMCD_THRESHOLD_OTSU, &raw_map), "thresholding");
  LabelsPtr map(raw_map);
  smcd_eval_report rep{};
  check(smcd_evaluate(map.get(), truth.get(), pma_of(o.pma_denominator), &rep),
        "evaluating");

  const std::string scores_path = with_suffix(o.out, ".scores.sarr");
  const std::string preview_path = with_suffix(o.out, ".scores.pgm");
  const std::string change_path = with_suffix(o.out, ".change.pgm");
  ensure_parent(scores_path);
  check(smcd_raster_save(scores.get(), scores_path.c_str()), "writing " + scores_path);
  check(smcd_raster_save_preview(scores.get(), preview_path.c_str()),
        "writing " + preview_path);
  check(smcd_labels_save(map.get(), change_path.c_str()), "writing " + change_path);
  std::cout << report_text(rep, format_of(o.format));

  Manifest m("baseline");
  m.set("i1", o.i1);
  m.set("i2", o.i2);
  m.set("truth", o.truth);
  m.set("window", o.window);
  m.set("pma-denominator", o.pma_denominator);
  m.set("format", o.format);
  m.set("out", o.out);
  m.outputs = {scores_path, preview_path, change_path};
  m.write(o.manifest.empty() ? fs::path(o.out + ".manifest.json") : fs::path(o.manifest));
  return kOk;
}

// Turns `smcd --from-manifest FILE` into the argv recorded in FILE.
std::optional<std::vector<std::string>> replay_args(int argc, char** argv) {
  if (argc < 2 || std::string(argv[1]) != "--from-manifest") return std::nullopt;
  if (argc != 3) {
    throw CommandError(SMCD_ERR_INVALID_ARGUMENT, "usage: smcd --from-manifest FILE");
  }
  std::ifstream in(argv[2]);
  if (!in) {
    throw CommandError(SMCD_ERR_NOT_FOUND,
                       std::string("cannot open manifest '") + argv[2] + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
    return doc.at("argv").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw CommandError(SMCD_ERR_MALFORMED_HEADER,
                       std::string("bad manifest '") + argv[2] + "': " + e.what());
  }
}

const std::vector<std::string> kDiffOps{"lr", "sub"};
const std::vector<std::string> kModes{"sign", "otsu"};
const std::vector<std::string> kPma{"changed", "unchanged"};
const std::vector<std::string> kFormats{"kv", "line"};

int run(int argc, char** argv) {
  std::vector<std::string> args;
  if (auto replay = replay_args(argc, argv)) {
    args = std::move(*replay);
  } else {
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  }

  CLI::App app{"Spatial metric learning for SAR change detection", "smcd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", smcd_version());

  SynthOptions synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a speckled scene pair with ground truth");
  cmd_synth->add_option("--width", synth.scene.width, "Image width")->capture_default_str();
  cmd_synth->add_option("--height", synth.scene.height, "Image height")->capture_default_str();
  cmd_synth->add_option("--looks", synth.scene.looks, "Speckle looks (>= 1)")->capture_default_str();
  cmd_synth->add_option("--shift-y", synth.scene.shift_y, "Row misregistration of date 2")->capture_default_str();
  cmd_synth->add_option("--shift-x", synth.scene.shift_x, "Column misregistration of date 2")->capture_default_str();
  cmd_synth->add_option("--regions", synth.scene.regions, "Changed-region count")->capture_default_str();
  cmd_synth->add_option("--contrast", synth.scene.contrast, "Reflectivity ratio inside changes")->capture_default_str();
  cmd_synth->add_option("--seed", synth.scene.seed, "Random seed")->capture_default_str();
  cmd_synth->add_option("--out", synth.out, "Output directory")->capture_default_str();
  cmd_synth->add_option("--manifest", synth.manifest, "Manifest path (default OUT/manifest.json)");

  TrainOptions train;
  auto* cmd_train = app.add_subcommand("train", "Learn a change metric from constraint pairs");
  cmd_train->add_option("--i1", train.i1, "First-date image")->required();
  cmd_train->add_option("--i2", train.i2, "Second-date image")->required();
  cmd_train->add_option("--labels", train.labels, "Ground-truth PGM")->required();
  cmd_train->add_option("--op", train.op, "Difference operator")->check(CLI::IsMember(kDiffOps))->capture_default_str();
  cmd_train->add_option("--patch", train.patch, "Odd patch side")->capture_default_str();
  cmd_train->add_option("--n", train.n, "Constraint pairs (even)")->capture_default_str();
  cmd_train->add_option("--c", train.c, "Regularization C")->capture_default_str();
  cmd_train->add_option("--radius", train.radius, "Jitter radius in pixels")->capture_default_str();
  cmd_train->add_option("--seed", train.seed, "Sampling seed")->capture_default_str();
  cmd_train->add_option("--tol", train.tol, "Cutting-plane tolerance")->capture_default_str();
  cmd_train->add_option("--max-iters", train.max_iters, "Cutting-plane iteration cap")->capture_default_str();
  cmd_train->add_flag("--no-psd", train.no_psd, "Keep M as solved (skip PSD projection)");
  cmd_train->add_flag("--quiet", train.quiet, "Suppress per-iteration log");
  cmd_train->add_flag("--dry-run", train.dry_run, "Sample constraints and write the manifest without training");
  cmd_train->add_option("--dump-constraints", train.dump_constraints, "Write the SMCS constraint dump");
  cmd_train->add_option("--out", train.out, "Model file")->capture_default_str();
  cmd_train->add_option("--manifest", train.manifest, "Manifest path (default OUT.manifest.json)");

  InferOptions infer;
  auto* cmd_infer = app.add_subcommand("infer", "Compute the difference image and change map");
  cmd_infer->add_option("--i1", infer.i1, "First-date image")->required();
  cmd_infer->add_option("--i2", infer.i2, "Second-date image")->required();
  cmd_infer->add_option("--model", infer.model, "SMCD model file")->required();
  cmd_infer->add_option("--mode", infer.mode, "Thresholding mode")->check(CLI::IsMember(kModes))->capture_default_str();
  cmd_infer->add_option("--out", infer.out, "Output prefix")->capture_default_str();
  cmd_infer->add_option("--manifest", infer.manifest, "Manifest path (default OUT.manifest.json)");

  EvalOptions eval;
  auto* cmd_eval = app.add_subcommand("eval", "Score a change map against ground truth");
  cmd_eval->add_option("--pred", eval.pred, "Predicted change map (PGM)")->required();
  cmd_eval->add_option("--truth", eval.truth, "Ground truth (PGM)")->required();
  cmd_eval->add_option("--pma-denominator", eval.pma_denominator, "pMA denominator")->check(CLI::IsMember(kPma))->capture_default_str();
  cmd_eval->add_option("--format", eval.format, "kv or line")->check(CLI::IsMember(kFormats))->capture_default_str();
  cmd_eval->add_option("--manifest", eval.manifest, "Also write a manifest here");

  BaselineOptions baseline;
  auto* cmd_baseline = app.add_subcommand("baseline", "Log-ratio + Otsu baseline");
  cmd_baseline->add_option("--i1", baseline.i1, "First-date image")->required();
  cmd_baseline->add_option("--i2", baseline.i2, "Second-date image")->required();
  cmd_baseline->add_option("--truth", baseline.truth, "Ground truth (PGM)")->required();
  cmd_baseline->add_option("--window", baseline.window, "Odd averaging window")->capture_default_str();
  cmd_baseline->add_option("--pma-denominator", baseline.pma_denominator, "pMA denominator")->check(CLI::IsMember(kPma))->capture_default_str();
  cmd_baseline->add_option("--format", baseline.format, "kv or line")->check(CLI::IsMember(kFormats))->capture_default_str();
  cmd_baseline->add_option("--out", baseline.out, "Output prefix")->capture_default_str();
  cmd_baseline->add_option("--manifest", baseline.manifest, "Manifest path (default OUT.manifest.json)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (*cmd_synth) return run_synth(synth);
  if (*cmd_train) return run_train(train);
  if (*cmd_infer) return run_infer(infer);
  if (*cmd_eval) return run_eval(eval);
  return run_baseline(baseline);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CommandError& e) {
    std::cerr << "smcd: " << e.what() << '\n';
    return exit_code_for(e.status());
  } catch (const std::exception& e) {
    std::cerr << "smcd: " << e.what() << '\n';
    return kNumeric;
  }
}

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

#include "smcd/diffops.hpp"

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "smcd/error.hpp"

namespace smcd {
namespace {

constexpr std::string_view kModelMagic = "SMCD";

void check_lengths(std::span<const float> x1, std::span<const float> x2) {
  if (x1.size() != x2.size()) {
    Fail(ErrorKind::kDimensionMismatch,
         "patch lengths differ: " + std::to_string(x1.size()) + " vs " +
             std::to_string(x2.size()));
  }
}

}  // namespace

std::string_view to_string(DiffOp op) {
  return op == DiffOp::kSub ? "sub" : "lr";
}

DiffOp parse_diff_op(std::string_view name) {
  if (name == "sub" || name == "SUB") return DiffOp::kSub;
  if (name == "lr" || name == "LR") return DiffOp::kLr;
  Fail(ErrorKind::kInvalidArgument,
       "unknown difference operator '" + std::string(name) + "' (sub|lr)");
}

DiffVector diff_sub(std::span<const float> x1, std::span<const float> x2) {
  check_lengths(x1, x2);
  DiffVector v(static_cast<Eigen::Index>(x1.size()));
  for (std::size_t i = 0; i < x1.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        static_cast<double>(x1[i]) - static_cast<double>(x2[i]);
  }
  return v;
}

DiffVector diff_lr(std::span<const float> x1, std::span<const float> x2) {
  check_lengths(x1, x2);
  DiffVector v(static_cast<Eigen::Index>(x1.size()));
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (!(x1[i] > 0.0f) || !(x2[i] > 0.0f)) {
      Fail(ErrorKind::kInvalidArgument,
           "log-ratio needs positive samples (got " + std::to_string(x1[i]) +
               ", " + std::to_string(x2[i]) + ")");
    }
    v[static_cast<Eigen::Index>(i)] =
        std::log(static_cast<double>(x1[i])) - std::log(static_cast<double>(x2[i]));
  }
  return v;
}

DiffVector apply_diff(DiffOp op, std::span<const float> x1,
                      std::span<const float> x2) {
  return op == DiffOp::kSub ? diff_sub(x1, x2) : diff_lr(x1, x2);
}

double mahalanobis(const DiffVector& v, const Eigen::MatrixXd& m) {
  if (m.rows() != v.size() || m.cols() != v.size()) {
    Fail(ErrorKind::kDimensionMismatch,
         "metric is " + std::to_string(m.rows()) + "x" +
             std::to_string(m.cols()) + " but vector has length " +
             std::to_string(v.size()));
  }
  return v.dot(m * v);
}

Eigen::VectorXd lift(const DiffVector& v) {
  const Eigen::Index d = v.size();
  Eigen::VectorXd u(d * d + 1);
  u[0] = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) u[1 + j * d + i] = v[i] * v[j];
  }
  return u;
}

MetricModel MetricModel::from_matrix(const Eigen::MatrixXd& m, double b,
                                     DiffOp op, std::uint32_t patch_side) {
  MetricModel model;
  model.m = 0.5 * (m + m.transpose());
  model.b = b;
  model.op = op;
  model.patch_side = patch_side;
  model.validate();
  return model;
}

void MetricModel::validate() const {
  if (patch_side == 0 || patch_side % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument, "patch side must be odd");
  }
  const Eigen::Index d = dim();
  if (m.rows() != d || m.cols() != d) {
    Fail(ErrorKind::kDimensionMismatch,
         "metric matrix must be " + std::to_string(d) + "x" +
             std::to_string(d) + " for patch side " +
             std::to_string(patch_side));
  }
  if (!m.allFinite() || !std::isfinite(b)) {
    Fail(ErrorKind::kNonFinite, "metric model contains NaN or Inf");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      if (m(i, j) != m(j, i)) {
        Fail(ErrorKind::kInvalidArgument, "metric matrix is not symmetric");
      }
    }
  }
}

double score(std::span<const float> x1, std::span<const float> x2,
             const MetricModel& model) {
  if (x1.size() != model.dim()) {
    Fail(ErrorKind::kDimensionMismatch,
         "patch length " + std::to_string(x1.size()) +
             " does not match model dimension " + std::to_string(model.dim()));
  }
  return mahalanobis(apply_diff(model.op, x1, x2), model.m) + model.b;
}

void save_model(const MetricModel& model, const std::filesystem::path& path) {
  model.validate();
  detail::ByteWriter w;
  w.magic(kModelMagic);
  w.u32(model.patch_side);
  w.u8(static_cast<std::uint8_t>(model.op));
  w.f64(model.b);
  const Eigen::Index d = model.dim();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) w.f64(model.m(i, j));
  }
  w.write_to(path);
}

MetricModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string source = path.string();
  detail::ByteReader r(bytes, source);
  if (!r.starts_with(kModelMagic)) {
    Fail(ErrorKind::kMalformedHeader, "'" + source + "' is not an SMCD model");
  }
  r.skip(kModelMagic.size());
  MetricModel model;
  model.patch_side = r.u32();
  if (model.patch_side == 0 || model.patch_side % 2 == 0 ||
      model.patch_side > 255) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': invalid patch side " +
             std::to_string(model.patch_side));
  }
  const std::uint8_t tag = r.u8();
  if (tag > 1) {
    Fail(ErrorKind::kMalformedHeader,
         "'" + source + "': unknown operator tag " + std::to_string(tag));
  }
  model.op = static_cast<DiffOp>(tag);
  model.b = r.f64();
  const Eigen::Index d = model.dim();
  model.m.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) model.m(i, j) = r.f64();
  }
  model.validate();
  return model;
}

}  // namespace smcd

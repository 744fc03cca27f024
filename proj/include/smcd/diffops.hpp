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
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace smcd {

/// Patch-pair difference operator.
enum class DiffOp : std::uint8_t {
  kSub = 0,  ///< x1 - x2
  kLr = 1,   ///< ln(x1 / x2)
};

std::string_view to_string(DiffOp op);
DiffOp parse_diff_op(std::string_view name);

/// Elementwise difference of two patches, evaluated in f64.
using DiffVector = Eigen::VectorXd;

DiffVector diff_sub(std::span<const float> x1, std::span<const float> x2);

/// Requires strictly positive inputs; a nonpositive sample means the
/// intensity floor was bypassed upstream and is reported as an error.
DiffVector diff_lr(std::span<const float> x1, std::span<const float> x2);

DiffVector apply_diff(DiffOp op, std::span<const float> x1,
                      std::span<const float> x2);

/// vᵀ M v.
double mahalanobis(const DiffVector& v, const Eigen::MatrixXd& m);

/// The lifted feature (1, vec(v vᵀ)) with column-major vec. Its dot product
/// with w = (b, vec(M)) is vᵀ M v + b.
Eigen::VectorXd lift(const DiffVector& v);

/// A learned change metric: score(x1, x2) = diff(x1, x2)ᵀ M diff(x1, x2) + b.
struct MetricModel {
  Eigen::MatrixXd m;
  double b = 0.0;
  DiffOp op = DiffOp::kLr;
  std::uint32_t patch_side = 1;

  /// Builds a model from an arbitrary square matrix, keeping only its
  /// symmetric part (M + Mᵀ) / 2.
  static MetricModel from_matrix(const Eigen::MatrixXd& m, double b, DiffOp op,
                                 std::uint32_t patch_side);

  std::uint32_t dim() const noexcept { return patch_side * patch_side; }

  /// Throws unless the matrix is d×d, exactly symmetric and finite.
  void validate() const;
};

/// Decision value; >= 0 means "changed".
double score(std::span<const float> x1, std::span<const float> x2,
             const MetricModel& model);

/// SMCD layout: "SMCD", u32 patch_side, u8 op, f64 b, then d² f64 values of
/// M row-major, little-endian.
void save_model(const MetricModel& model, const std::filesystem::path& path);
MetricModel load_model(const std::filesystem::path& path);

}  // namespace smcd

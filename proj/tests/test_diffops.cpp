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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "smcd/diffops.hpp"
#include "smcd/error.hpp"
#include "test_util.hpp"

using namespace smcd;

namespace {

std::vector<float> random_patch(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<float> u(0.01f, 10.0f);
  std::vector<float> x(d);
  for (auto& v : x) v = u(rng);
  return x;
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
  }
  return m;
}

}  // namespace

TEST_SUITE("diffops") {

TEST_CASE("diff_sub") {
  const std::vector<float> a{3, 5};
  const std::vector<float> b{1, 2};
  CHECK(diff_sub(a, a).isZero(0.0));
  CHECK(diff_sub(a, b) == Eigen::Vector2d(2, 3));
  CHECK(error_kind([&] { diff_sub(a, std::vector<float>{1}); }) ==
        ErrorKind::kDimensionMismatch);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto x1 = random_patch(rng, 9);
    const auto x2 = random_patch(rng, 9);
    CHECK(diff_sub(x1, x2) == -diff_sub(x2, x1));
  }
}

TEST_CASE("diff_lr") {
  const float e = static_cast<float>(std::exp(1.0));
  const std::vector<float> a{2, 8};
  CHECK(diff_lr(a, a).isZero(0.0));

  const auto v = diff_lr(std::vector<float>{e, 1}, std::vector<float>{1, e});
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(v[1] == doctest::Approx(-1.0).epsilon(1e-7));

  const auto w = diff_lr(a, std::vector<float>{1, 2});
  CHECK(w[0] == doctest::Approx(0.69314718).epsilon(1e-8));
  CHECK(w[1] == doctest::Approx(1.38629436).epsilon(1e-8));

  CHECK(error_kind([&] { diff_lr(a, std::vector<float>{1}); }) ==
        ErrorKind::kDimensionMismatch);
  CHECK(error_kind([&] { diff_lr(a, std::vector<float>{0, 1}); }) ==
        ErrorKind::kInvalidArgument);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto x1 = random_patch(rng, 9);
    const auto x2 = random_patch(rng, 9);
    CHECK(diff_lr(x1, x2) == -diff_lr(x2, x1));
  }
}

TEST_CASE("mahalanobis") {
  CHECK(mahalanobis(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity()) == 5.0);
  CHECK(mahalanobis(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Random()) == 0.0);
  CHECK(mahalanobis(Eigen::Vector2d(1, 1), Eigen::Matrix2d::Ones()) == 4.0);
  CHECK(error_kind([] {
          mahalanobis(Eigen::Vector3d::Ones(), Eigen::Matrix2d::Identity());
        }) == ErrorKind::kDimensionMismatch);
}

TEST_CASE("subtraction metric is the plain Mahalanobis form") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto x1 = random_patch(rng, 9);
    const auto x2 = random_patch(rng, 9);
    const Eigen::MatrixXd m = random_symmetric(rng, 9);
    Eigen::VectorXd a(9), b(9);
    for (int k = 0; k < 9; ++k) {
      a[k] = x1[k];
      b[k] = x2[k];
    }
    const Eigen::VectorXd diff = a - b;
    CHECK(mahalanobis(diff_sub(x1, x2), m) == diff.dot(m * diff));
  }
}

TEST_CASE("score") {
  MetricModel lr = MetricModel::from_matrix(Eigen::MatrixXd::Identity(9, 9),
                                            -1.0, DiffOp::kLr, 3);
  const std::vector<float> x(9, 4.0f);
  CHECK(score(x, x, lr) == -1.0);

  MetricModel toy = MetricModel::from_matrix(Eigen::MatrixXd::Constant(1, 1, 0.5),
                                             -1.0, DiffOp::kSub, 1);
  CHECK(score(std::vector<float>{3}, std::vector<float>{1}, toy) == 1.0);
  CHECK(error_kind([&] { score(x, x, toy); }) == ErrorKind::kDimensionMismatch);

  std::mt19937_64 rng(4);
  for (const DiffOp op : {DiffOp::kSub, DiffOp::kLr}) {
    MetricModel model =
        MetricModel::from_matrix(random_symmetric(rng, 9), 0.3, op, 3);
    for (int i = 0; i < 50; ++i) {
      const auto x1 = random_patch(rng, 9);
      const auto x2 = random_patch(rng, 9);
      CHECK(score(x1, x2, model) == score(x2, x1, model));
    }
  }
}

TEST_CASE("lift") {
  const Eigen::VectorXd u = lift(Eigen::Vector2d(1, 2));
  CHECK(u.size() == 5);
  CHECK(u == (Eigen::VectorXd(5) << 1, 1, 2, 2, 4).finished());

  const Eigen::VectorXd z = lift(Eigen::Vector3d::Zero());
  CHECK(z.size() == 10);
  CHECK(z[0] == 1.0);
  CHECK(z.tail(9).isZero(0.0));

  // Column-major vec: entry (i, j) sits at 1 + j*d + i.
  const Eigen::VectorXd c = lift(Eigen::Vector3d(1, 2, 3));
  CHECK(c[1 + 2 * 3 + 0] == 3.0);
  CHECK(c[1 + 0 * 3 + 2] == 3.0);
}

TEST_CASE("lifted dot products and w·lift") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index d = 1 + i % 12;
    Eigen::VectorXd v(d), w(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      v[k] = g(rng);
      w[k] = g(rng);
    }
    const double expect = 1.0 + std::pow(v.dot(w), 2);
    CHECK(lift(v).dot(lift(w)) == doctest::Approx(expect).epsilon(1e-9));

    const Eigen::MatrixXd m = random_symmetric(rng, d);
    const double b = g(rng);
    Eigen::VectorXd wvec(d * d + 1);
    wvec[0] = b;
    wvec.tail(d * d) = Eigen::Map<const Eigen::VectorXd>(m.data(), d * d);
    CHECK(wvec.dot(lift(v)) ==
          doctest::Approx(mahalanobis(v, m) + b).epsilon(1e-10));
  }
}

TEST_CASE("MetricModel symmetrization and validation") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(9, 9);
  m(0, 1) = 4.0;
  const MetricModel model = MetricModel::from_matrix(m, 0.0, DiffOp::kSub, 3);
  CHECK(model.m(0, 1) == 2.0);
  CHECK(model.m(1, 0) == 2.0);

  MetricModel broken = model;
  broken.m(2, 3) = 1.0;
  CHECK(error_kind([&] { broken.validate(); }) == ErrorKind::kInvalidArgument);
  broken = model;
  broken.patch_side = 4;
  CHECK(error_kind([&] { broken.validate(); }) == ErrorKind::kInvalidArgument);
  broken = model;
  broken.patch_side = 5;
  CHECK(error_kind([&] { broken.validate(); }) == ErrorKind::kDimensionMismatch);
}

TEST_CASE("model file") {
  TempDir dir;
  std::mt19937_64 rng(6);
  const MetricModel model =
      MetricModel::from_matrix(random_symmetric(rng, 9), -0.75, DiffOp::kLr, 3);
  save_model(model, dir / "m.smcd");

  const auto bytes = read_bytes(dir / "m.smcd");
  CHECK(bytes.size() == 4 + 4 + 1 + 8 + 81 * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SMCD");
  CHECK(bytes[4] == 3);
  CHECK(bytes[8] == 1);

  const MetricModel back = load_model(dir / "m.smcd");
  CHECK(back.m == model.m);
  CHECK(back.b == model.b);
  CHECK(back.op == model.op);
  CHECK(back.patch_side == model.patch_side);

  CHECK(error_kind([&] { load_model(dir / "none.smcd"); }) == ErrorKind::kNotFound);
  write_text(dir / "bad.smcd", "SMCX0000000000000000");
  CHECK(error_kind([&] { load_model(dir / "bad.smcd"); }) ==
        ErrorKind::kMalformedHeader);
  std::string cut(bytes.begin(), bytes.end() - 8);
  write_text(dir / "cut.smcd", cut);
  CHECK(error_kind([&] { load_model(dir / "cut.smcd"); }) == ErrorKind::kTruncated);
}

TEST_CASE("operator names") {
  CHECK(parse_diff_op("sub") == DiffOp::kSub);
  CHECK(parse_diff_op("LR") == DiffOp::kLr);
  CHECK(to_string(DiffOp::kLr) == "lr");
  CHECK(error_kind([] { parse_diff_op("ratio"); }) == ErrorKind::kInvalidArgument);
}

}  // TEST_SUITE

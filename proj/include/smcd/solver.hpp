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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smcd/constraints.hpp"
#include "smcd/diffops.hpp"

namespace smcd {

struct TrainConfig {
  double c = 40.0;              ///< regularization weight on the shared slack
  double tol = 1e-3;            ///< stop once the worst cut is violated by less
  std::uint32_t max_iters = 1000;
  bool psd_project = true;

  void validate() const;
};

/// Constraint pairs mapped to lifted features u_k = (1, vec(v_k v_kᵀ)), one
/// row per pair, with labels y_k.
struct LiftedSet {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> u;
  std::vector<std::int8_t> y;

  std::size_t size() const noexcept { return y.size(); }
};

LiftedSet lift_constraints(const ConstraintSet& cs);

/// One aggregated cut of the one-slack problem: wᵀa ≥ r − ξ, where
/// a = (1/N) Σ c_k y_k u_k and r = (1/N) Σ c_k.
struct WorkingConstraint {
  Eigen::VectorXd a;
  double r = 0.0;
};

struct SolverState {
  std::vector<WorkingConstraint> working_set;
  std::vector<double> alpha;  ///< dual weight per working constraint
  Eigen::VectorXd w;          ///< (b, vec(M))
  double xi = 0.0;
  Eigen::MatrixXd gram;       ///< a_s · a_t over the working set
};

struct Cut {
  std::vector<std::uint8_t> selected;  ///< c_k
  double violation = 0.0;
  WorkingConstraint constraint;
};

/// The cut maximizing (1/N)Σc_k − (1/N)wᵀΣc_k y_k u_k − ξ: c_k = 1 exactly
/// for pairs with margin y_k wᵀu_k < 1.
Cut find_most_violated(const SolverState& state, const LiftedSet& lifted);

struct QpSolution {
  std::vector<double> alpha;
  Eigen::VectorXd w;
  double xi = 0.0;
  double dual_objective = 0.0;
  double kkt_residual = 0.0;
  std::uint64_t iterations = 0;
};

/// Solves max_α Σα_t r_t − ½‖Σα_t a_t‖² s.t. α ≥ 0, Σα ≤ c over the
/// working set, to a KKT residual below 1e-8.
QpSolution solve_working_qp(std::span<const WorkingConstraint> working_set,
                            double c);

/// Same, with a precomputed Gram matrix and an optional warm start (missing
/// trailing entries start at zero).
QpSolution solve_working_qp(std::span<const WorkingConstraint> working_set,
                            const Eigen::MatrixXd& gram, double c,
                            std::span<const double> warm_alpha = {});

/// Frobenius-nearest positive semidefinite matrix: eigendecompose, clamp
/// negative eigenvalues to zero, reconstruct. Reads the lower triangle.
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m);

/// ½‖w‖² + (C/N) Σ max(0, 1 − y_k wᵀu_k).
double n_slack_objective(const Eigen::VectorXd& w, const LiftedSet& lifted,
                         double c);

/// Minimizes ½b² + (C/N) Σ max(0, 1 − y_k(v_kᵀ M v_k + b)) over b alone.
/// Used after PSD projection, which shifts every score and leaves the solved
/// bias stale.
double refit_bias(const Eigen::MatrixXd& m, const ConstraintSet& cs, double c);

struct IterationLog {
  std::uint32_t iteration = 0;
  std::size_t working_set_size = 0;
  double xi = 0.0;
  double violation = 0.0;
  double objective = 0.0;
};

/// Tab-separated: iteration, working-set size, xi, violation, objective.
std::string format_log_line(const IterationLog& entry);

struct TrainReport {
  std::uint32_t iterations = 0;
  bool converged = false;
  double xi = 0.0;
  double violation = 0.0;   ///< of the last cut examined
  double objective = 0.0;   ///< ½‖w‖² + Cξ on the final working set
};

struct TrainResult {
  MetricModel model;
  TrainReport report;
  Eigen::VectorXd w;        ///< raw solver output, before symmetrization
};

using IterationCallback = std::function<void(const IterationLog&)>;

/// Solver output for an arbitrary difference dimension d.
struct MetricFit {
  Eigen::MatrixXd m;        ///< symmetric, projected when cfg.psd_project
  double b = 0.0;
  TrainReport report;
  Eigen::VectorXd w;        ///< raw solver output, before symmetrization
};

MetricFit fit_metric(const ConstraintSet& cs, const TrainConfig& cfg,
                     const IterationCallback& on_iteration = {});

/// One-slack cutting-plane training of (M, b). The bias lives in w[0] and is
/// regularized together with M. With psd_project, M is projected after the
/// loop and b is re-optimized against the projected M. cs.d must be the area
/// of an odd square patch; fit_metric takes any d.
TrainResult train(const ConstraintSet& cs, const TrainConfig& cfg,
                  const IterationCallback& on_iteration = {});

}  // namespace smcd

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

#include "smcd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "smcd/error.hpp"

namespace smcd {
namespace {

constexpr double kKktTolerance = 1e-10;
constexpr std::uint64_t kMaxQpSteps = 20'000'000;
constexpr std::uint64_t kGradientRefresh = 4096;
constexpr double kMinCurvature = 1e-15;

Eigen::MatrixXd gram_of(std::span<const WorkingConstraint> ws) {
  const auto t = static_cast<Eigen::Index>(ws.size());
  Eigen::MatrixXd g(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      g(i, j) = g(j, i) = ws[i].a.dot(ws[j].a);
    }
  }
  return g;
}

// Primal active-set method on the faces of the simplex {β ≥ 0, Σβ = c}.
// Each face problem max rᵀβ − ½βᵀKβ, 1ᵀβ = c is solved exactly through its
// KKT system; a ridge of relative size 1e-12 keeps K_SS invertible when cuts
// are collinear. The result is polished and certified by the pairwise loop.
void active_set_phase(const Eigen::MatrixXd& gram, const Eigen::VectorXd& r,
                      double c, Eigen::VectorXd& beta) {
  const Eigen::Index n = beta.size();
  const double ridge =
      1e-12 * std::max(1.0, gram.size() ? gram.diagonal().maxCoeff() : 0.0);
  auto entry = [&](Eigen::Index i, Eigen::Index j) {
    const double k = (i == 0 || j == 0) ? 0.0 : gram(i - 1, j - 1);
    return i == j ? k + ridge : k;
  };
  auto rhs = [&](Eigen::Index i) { return i == 0 ? 0.0 : r[i - 1]; };

  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (beta[i] > 0.0) support.push_back(i);
  }

  const Eigen::Index max_steps = 4 * n + 64;
  for (Eigen::Index step = 0; step < max_steps; ++step) {
    const auto m = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd k(m, m);
    Eigen::VectorXd rs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      rs[a] = rhs(support[a]);
      for (Eigen::Index b = 0; b < m; ++b) k(a, b) = entry(support[a], support[b]);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return;
    const Eigen::VectorXd y = llt.solve(Eigen::VectorXd::Ones(m));
    // Solves (K_SS + ridge) β + λ1 = u, 1ᵀβ = s.
    auto face_solve = [&](const Eigen::VectorXd& u, double s, double& lam) {
      const Eigen::VectorXd x = llt.solve(u);
      lam = (x.sum() - s) / y.sum();
      return Eigen::VectorXd(x - lam * y);
    };
    double lambda = 0.0;
    Eigen::VectorXd target = face_solve(rs, c, lambda);
    // Refine against the unregularized system.
    k.diagonal().array() -= ridge;
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd res =
          rs - k * target - lambda * Eigen::VectorXd::Ones(m);
      double dl = 0.0;
      target += face_solve(res, c - target.sum(), dl);
      lambda += dl;
    }
    if (!target.allFinite()) return;

    if (target.minCoeff() >= 0.0) {
      for (Eigen::Index a = 0; a < m; ++a) beta[support[a]] = target[a];
      // Most attractive coordinate outside the face.
      Eigen::Index enter = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (beta[i] > 0.0 || std::find(support.begin(), support.end(), i) != support.end()) {
          continue;
        }
        double g = rhs(i) - lambda;
        for (Eigen::Index a = 0; a < m; ++a) g -= entry(i, support[a]) * target[a];
        if (g > best) {
          best = g;
          enter = i;
        }
      }
      if (enter < 0 || best <= kKktTolerance * 1e-2) return;
      support.push_back(enter);
      continue;
    }

    // Move towards the face optimum until the first coordinate leaves.
    double t_max = 1.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      const double from = beta[support[a]];
      if (target[a] < from && target[a] < 0.0) {
        t_max = std::min(t_max, from / (from - target[a]));
      }
    }
    std::vector<Eigen::Index> kept;
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index i = support[a];
      const double v = beta[i] + t_max * (target[a] - beta[i]);
      const bool blocking = target[a] < 0.0 &&
                            beta[i] <= t_max * (beta[i] - target[a]) * (1 + 1e-12);
      beta[i] = blocking || v <= 0.0 ? 0.0 : v;
      if (beta[i] > 0.0) kept.push_back(i);
    }
    if (kept.size() == support.size()) return;
    if (kept.empty()) {
      beta[0] = c;
      kept.push_back(0);
    }
    support = std::move(kept);
  }
}

// Pairwise (SMO-style) ascent on the simplex {β ≥ 0, Σβ = c}, where β_0 is
// the slack of the inequality Σα ≤ c and carries a zero constraint vector.
// Each step moves mass from the lowest-gradient active coordinate to the
// highest-gradient one along the exact line maximizer.
QpSolution solve_dual(std::span<const WorkingConstraint> ws,
                      const Eigen::MatrixXd& gram, double c,
                      std::span<const double> warm) {
  const auto t = static_cast<Eigen::Index>(ws.size());
  if (t == 0) Fail(ErrorKind::kInvalidArgument, "working set is empty");
  if (gram.rows() != t || gram.cols() != t) {
    Fail(ErrorKind::kDimensionMismatch, "Gram matrix does not match working set");
  }

  Eigen::VectorXd r(t);
  for (Eigen::Index i = 0; i < t; ++i) r[i] = ws[i].r;

  // beta[0] is the slack; beta[i + 1] is alpha_i.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(t + 1);
  double used = 0.0;
  for (Eigen::Index i = 0; i < t && i < static_cast<Eigen::Index>(warm.size());
       ++i) {
    beta[i + 1] = std::max(0.0, warm[i]);
    used += beta[i + 1];
  }
  if (used > c) {
    beta.tail(t) *= c / used;
    used = c;
  }
  beta[0] = c - used;

  auto kernel = [&](Eigen::Index i, Eigen::Index j) {
    return (i == 0 || j == 0) ? 0.0 : gram(i - 1, j - 1);
  };

  active_set_phase(gram, r, c, beta);
  beta = beta.cwiseMax(0.0);
  beta *= c / beta.sum();

  Eigen::VectorXd grad(t + 1);
  auto refresh = [&] {
    grad[0] = 0.0;
    grad.tail(t) = r - gram * beta.tail(t);
  };
  refresh();

  QpSolution sol;
  double gap = std::numeric_limits<double>::infinity();
  for (sol.iterations = 0; sol.iterations < kMaxQpSteps; ++sol.iterations) {
    if (sol.iterations > 0 && sol.iterations % kGradientRefresh == 0) refresh();
    Eigen::Index up = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i <= t; ++i) {
      if (grad[i] > grad[up]) up = i;
      if (beta[i] > 0.0) lowest = std::min(lowest, grad[i]);
    }
    gap = grad[up] - lowest;
    if (gap <= kKktTolerance) break;

    // Second-order choice of the donor: largest gain of the exact line step.
    Eigen::Index down = -1;
    double best_gain = -1.0;
    double down_curvature = 0.0;
    for (Eigen::Index i = 0; i <= t; ++i) {
      if (!(beta[i] > 0.0) || i == up) continue;
      const double diff = grad[up] - grad[i];
      if (!(diff > 0.0)) continue;
      double curv = kernel(up, up) + kernel(i, i) - 2.0 * kernel(up, i);
      if (!(curv > kMinCurvature)) curv = kMinCurvature;
      const double gain = std::min(diff * diff / curv, 2.0 * diff * beta[i]);
      if (gain > best_gain) {
        best_gain = gain;
        down = i;
        down_curvature = curv;
      }
    }
    const double diff = grad[up] - grad[down];
    double step = std::min(beta[down], diff / down_curvature);
    beta[up] += step;
    beta[down] = (step == beta[down]) ? 0.0 : beta[down] - step;
    for (Eigen::Index s = 1; s <= t; ++s) {
      grad[s] -= step * (kernel(s, up) - kernel(s, down));
    }
  }
  refresh();
  {
    double hi = grad.maxCoeff();
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i <= t; ++i) {
      if (beta[i] > 0.0) lo = std::min(lo, grad[i]);
    }
    gap = hi - lo;
  }
  if (!(gap < 1e-8)) {
    Fail(ErrorKind::kNumeric,
         "working-set QP did not converge (KKT residual " +
             std::to_string(gap) + ")");
  }

  sol.alpha.assign(beta.data() + 1, beta.data() + 1 + t);
  sol.w = Eigen::VectorXd::Zero(ws[0].a.size());
  for (Eigen::Index i = 0; i < t; ++i) {
    if (sol.alpha[i] != 0.0) sol.w += sol.alpha[i] * ws[i].a;
  }
  const Eigen::VectorXd alpha = beta.tail(t);
  sol.dual_objective = alpha.dot(r) - 0.5 * alpha.dot(gram * alpha);
  // r_t − wᵀa_t is exactly the gradient of each working coordinate.
  sol.xi = std::max(0.0, grad.tail(t).maxCoeff());
  sol.kkt_residual = gap;
  return sol;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(c > 0.0)) Fail(ErrorKind::kInvalidArgument, "C must be positive");
  if (!(tol > 0.0)) Fail(ErrorKind::kInvalidArgument, "tol must be positive");
  if (max_iters < 1) {
    Fail(ErrorKind::kInvalidArgument, "max_iters must be at least 1");
  }
}

LiftedSet lift_constraints(const ConstraintSet& cs) {
  LiftedSet lifted;
  const auto n = static_cast<Eigen::Index>(cs.pairs.size());
  const Eigen::Index d = cs.d;
  lifted.u.resize(n, d * d + 1);
  lifted.y.reserve(cs.pairs.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& p = cs.pairs[k];
    if (p.v.size() != d) {
      Fail(ErrorKind::kDimensionMismatch,
           "constraint " + std::to_string(k) + " has length " +
               std::to_string(p.v.size()) + ", expected " + std::to_string(d));
    }
    if (!p.v.allFinite()) {
      Fail(ErrorKind::kNonFinite,
           "constraint " + std::to_string(k) + " has non-finite entries");
    }
    if (p.y != 1 && p.y != -1) {
      Fail(ErrorKind::kInvalidArgument, "constraint labels must be +1 or -1");
    }
    lifted.u.row(k) = lift(p.v).transpose();
    lifted.y.push_back(p.y);
  }
  return lifted;
}

Cut find_most_violated(const SolverState& state, const LiftedSet& lifted) {
  if (state.w.size() != lifted.u.cols()) {
    Fail(ErrorKind::kDimensionMismatch,
         "w has length " + std::to_string(state.w.size()) +
             " but lifted features have " + std::to_string(lifted.u.cols()));
  }
  const auto n = static_cast<Eigen::Index>(lifted.size());
  const Eigen::VectorXd margins = lifted.u * state.w;

  Cut cut;
  cut.selected.assign(lifted.size(), 0);
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lifted.y[k] * margins[k] < 1.0) {
      cut.selected[k] = 1;
      weights[k] = lifted.y[k];
      ++count;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  cut.constraint.a = (lifted.u.transpose() * weights) * inv_n;
  cut.constraint.r = static_cast<double>(count) * inv_n;
  cut.violation =
      cut.constraint.r - state.w.dot(cut.constraint.a) - state.xi;
  return cut;
}

QpSolution solve_working_qp(std::span<const WorkingConstraint> working_set,
                            double c) {
  return solve_dual(working_set, gram_of(working_set), c, {});
}

QpSolution solve_working_qp(std::span<const WorkingConstraint> working_set,
                            const Eigen::MatrixXd& gram, double c,
                            std::span<const double> warm_alpha) {
  return solve_dual(working_set, gram, c, warm_alpha);
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    Fail(ErrorKind::kDimensionMismatch, "PSD projection needs a square matrix");
  }
  if (!m.allFinite()) {
    Fail(ErrorKind::kNonFinite, "PSD projection input contains NaN or Inf");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) {
    Fail(ErrorKind::kNumeric, "eigendecomposition failed");
  }
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out =
      eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double n_slack_objective(const Eigen::VectorXd& w, const LiftedSet& lifted,
                         double c) {
  const Eigen::VectorXd margins = lifted.u * w;
  double hinge = 0.0;
  for (Eigen::Index k = 0; k < margins.size(); ++k) {
    hinge += std::max(0.0, 1.0 - lifted.y[k] * margins[k]);
  }
  return 0.5 * w.squaredNorm() +
         c * hinge / static_cast<double>(lifted.size());
}

double refit_bias(const Eigen::MatrixXd& m, const ConstraintSet& cs,
                  double c) {
  std::vector<double> q;
  q.reserve(cs.pairs.size());
  for (const auto& p : cs.pairs) q.push_back(mahalanobis(p.v, m));
  const double scale = c / static_cast<double>(q.size());
  // Derivative of ½b² + (C/N)Σ max(0, 1 − y_k(q_k + b)); strictly increasing
  // in b, with its root inside [−C, C].
  auto slope = [&](double b) {
    double active = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int y = cs.pairs[k].y;
      if (y * (q[k] + b) < 1.0) active += y;
    }
    return b - scale * active;
  };
  double lo = -c;
  double hi = c;
  for (int i = 0; i < 200 && lo < hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string format_log_line(const IterationLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%u\t%zu\t%.10g\t%.10g\t%.10g", e.iteration,
                e.working_set_size, e.xi, e.violation, e.objective);
  return buf;
}

MetricFit fit_metric(const ConstraintSet& cs, const TrainConfig& cfg,
                     const IterationCallback& on_iteration) {
  cfg.validate();
  if (cs.pairs.empty()) {
    Fail(ErrorKind::kInsufficientData, "constraint set is empty");
  }
  const std::size_t pos = cs.positives();
  if (pos == 0 || pos == cs.pairs.size()) {
    Fail(ErrorKind::kInsufficientData,
         "constraint set needs both changed and unchanged pairs");
  }
  const LiftedSet lifted = lift_constraints(cs);
  SolverState state;
  state.w = Eigen::VectorXd::Zero(lifted.u.cols());

  TrainReport report;
  for (std::uint32_t iter = 1; iter <= cfg.max_iters; ++iter) {
    Cut cut = find_most_violated(state, lifted);
    report.iterations = iter;
    report.violation = cut.violation;
    const double objective = 0.5 * state.w.squaredNorm() + cfg.c * state.xi;
    if (on_iteration) {
      on_iteration({iter, state.working_set.size(), state.xi, cut.violation,
                    objective});
    }
    if (!state.working_set.empty() && cut.violation < cfg.tol) {
      report.converged = true;
      break;
    }

    const auto t = static_cast<Eigen::Index>(state.working_set.size());
    state.working_set.push_back(std::move(cut.constraint));
    Eigen::MatrixXd grown(t + 1, t + 1);
    grown.topLeftCorner(t, t) = state.gram;
    for (Eigen::Index s = 0; s <= t; ++s) {
      grown(t, s) = grown(s, t) =
          state.working_set[t].a.dot(state.working_set[s].a);
    }
    state.gram = std::move(grown);

    QpSolution sol =
        solve_working_qp(state.working_set, state.gram, cfg.c, state.alpha);
    state.alpha = std::move(sol.alpha);
    state.w = std::move(sol.w);
    state.xi = sol.xi;
  }
  if (!report.converged) {
    // Re-examine the final iterate so the reported violation describes the
    // returned model.
    report.violation = find_most_violated(state, lifted).violation;
    report.converged = report.violation < cfg.tol;
  }
  report.xi = state.xi;
  report.objective = 0.5 * state.w.squaredNorm() + cfg.c * state.xi;

  const Eigen::Index d = cs.d;
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(state.w.data() + 1, d, d);
  m = 0.5 * (m + m.transpose());
  double b = state.w[0];
  if (cfg.psd_project) {
    m = psd_project(m);
    b = refit_bias(m, cs, cfg.c);
  }

  MetricFit fit;
  fit.m = 0.5 * (m + m.transpose());
  fit.b = b;
  fit.report = report;
  fit.w = std::move(state.w);
  return fit;
}

TrainResult train(const ConstraintSet& cs, const TrainConfig& cfg,
                  const IterationCallback& on_iteration) {
  const std::uint32_t side =
      static_cast<std::uint32_t>(std::lround(std::sqrt(double(cs.d))));
  if (side * side != cs.d || side % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument,
         "constraint dimension " + std::to_string(cs.d) +
             " is not the area of an odd square patch");
  }
  MetricFit fit = fit_metric(cs, cfg, on_iteration);
  TrainResult result;
  result.model = MetricModel::from_matrix(fit.m, fit.b, cs.op, side);
  result.report = fit.report;
  result.w = std::move(fit.w);
  return result;
}

}  // namespace smcd

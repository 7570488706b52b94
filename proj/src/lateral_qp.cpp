#include "evade/lateral_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evade {

using Eigen::MatrixXd;
using Eigen::VectorXd;

KinematicLimits KinematicLimits::from_adhesion(double vy_max, double mu, double g,
                                               double fraction, double j_max) {
  KinematicLimits k;
  k.v_max = vy_max;
  k.a_max = fraction * mu * g;
  k.j_max = j_max;
  return k;
}

VectorXd LateralTrajectory::stacked() const {
  VectorXd y(4 * static_cast<Eigen::Index>(states.size()));
  for (size_t t = 0; t < states.size(); ++t) {
    const auto k = 4 * static_cast<Eigen::Index>(t);
    y[k] = states[t].y;
    y[k + 1] = states[t].vy;
    y[k + 2] = states[t].ay;
    y[k + 3] = states[t].jy;
  }
  return y;
}

double LateralTrajectory::max_abs_ay() const {
  double m = 0.0;
  for (const auto& s : states) m = std::max(m, std::abs(s.ay));
  return m;
}

Eigen::Matrix<double, 3, 8> dynamics_block(double ts) {
  Eigen::Matrix<double, 3, 8> a;
  // clang-format off
  a << 1, ts, 0.5 * ts * ts, 0,  -1,  0,  0, 0,
       0,  1, ts,            0,   0, -1,  0, 0,
       0,  0, 1,             ts,  0,  0, -1, 0;
  // clang-format on
  return a;
}

QpProblem assemble(const StepBounds& bounds, const std::vector<CostWeights>& weights, double ts) {
  const auto n_end = static_cast<int>(bounds.y_min.size());
  if (n_end < 1) throw std::invalid_argument("assemble: empty horizon");
  if (!(ts > 0.0)) throw std::invalid_argument("assemble: ts must be > 0");
  auto check = [n_end](const std::vector<double>& v, const char* name) {
    if (static_cast<int>(v.size()) != n_end) {
      throw std::invalid_argument(std::string("assemble: ") + name + " has wrong length");
    }
  };
  check(bounds.y_max, "y_max");
  check(bounds.v_min, "v_min");
  check(bounds.v_max, "v_max");
  check(bounds.a_min, "a_min");
  check(bounds.a_max, "a_max");
  check(bounds.j_min, "j_min");
  check(bounds.j_max, "j_max");
  if (static_cast<int>(weights.size()) != n_end) {
    throw std::invalid_argument("assemble: weights have wrong length");
  }
  for (const auto& w : weights) {
    if (w.p < 0.0 || w.q < 0.0 || w.r < 0.0) {
      throw std::invalid_argument("assemble: weights must be non-negative");
    }
  }

  QpProblem qp;
  qp.n_end = n_end;
  qp.ts = ts;
  const int n = 4 * n_end;
  qp.H = MatrixXd::Zero(n, n);
  qp.F = VectorXd::Zero(n);
  qp.B_min.resize(n);
  qp.B_max.resize(n);
  for (int t = 0; t < n_end; ++t) {
    const int k = 4 * t;
    qp.H(k + 1, k + 1) = 2.0 * weights[t].p;
    qp.H(k + 2, k + 2) = 2.0 * weights[t].q;
    qp.H(k + 3, k + 3) = 2.0 * weights[t].r;
    qp.B_min.segment<4>(k) << bounds.y_min[t], bounds.v_min[t], bounds.a_min[t], bounds.j_min[t];
    qp.B_max.segment<4>(k) << bounds.y_max[t], bounds.v_max[t], bounds.a_max[t], bounds.j_max[t];
  }
  const int m = 3 * (n_end - 1);
  qp.A = MatrixXd::Zero(m, n);
  qp.b = VectorXd::Zero(m);
  const auto block = dynamics_block(ts);
  for (int t = 0; t + 1 < n_end; ++t) qp.A.block<3, 8>(3 * t, 4 * t) = block;
  return qp;
}

QpProblem assemble(const SafetyEnvelope& env, const KinematicLimits& lim, const CostWeights& w) {
  const auto n_end = static_cast<size_t>(env.size());
  StepBounds b;
  b.y_min = env.y_min;
  b.y_max = env.y_max;
  b.v_min.assign(n_end, -lim.v_max);
  b.v_max.assign(n_end, lim.v_max);
  b.a_min.assign(n_end, -lim.a_max);
  b.a_max.assign(n_end, lim.a_max);
  b.j_min.assign(n_end, -lim.j_max);
  b.j_max.assign(n_end, lim.j_max);
  if (lim.settle_at_end && n_end > 1) {
    b.v_min.back() = b.v_max.back() = 0.0;
    b.a_min.back() = b.a_max.back() = 0.0;
  }
  return assemble(b, std::vector<CostWeights>(n_end, w), env.ts);
}

QpProblem pin_initial(const QpProblem& problem, const LateralState& init) {
  QpProblem p = problem;
  p.B_min.head<4>() << init.y, init.vy, init.ay, init.jy;
  p.B_max.head<4>() = p.B_min.head<4>();
  return p;
}

PlanResult solve(const QpProblem& problem, const LateralState& init,
                 const QpSolverSettings& settings) {
  const QpProblem pinned = pin_initial(problem, init);
  BoxEqQp qp{pinned.H, pinned.F, pinned.A, pinned.b, pinned.B_min, pinned.B_max};
  const QpSolution sol = solve_box_eq_qp(qp, settings);

  PlanResult out;
  out.status = sol.status;
  out.detail = sol.detail;
  if (sol.status == QpStatus::Infeasible) {
    out.infeasible_step = sol.blocking_variable >= 0 ? sol.blocking_variable / 4 : -1;
    return out;
  }
  if (sol.status != QpStatus::Solved) return out;

  auto& traj = out.trajectory;
  traj.states.resize(problem.n_end);
  for (int t = 0; t < problem.n_end; ++t) {
    traj.states[t] = {sol.x[4 * t], sol.x[4 * t + 1], sol.x[4 * t + 2], sol.x[4 * t + 3]};
  }
  traj.objective = sol.objective;
  traj.stats = {sol.iterations, sol.kkt_residual, sol.polished};
  return out;
}

namespace {

// Lawson-Hanson active-set NNLS: argmin ||Cx - d|| subject to x >= 0.
VectorXd nonnegative_least_squares(const MatrixXd& c, const VectorXd& d) {
  const auto k = c.cols();
  VectorXd x = VectorXd::Zero(k);
  if (k == 0) return x;
  std::vector<bool> passive(static_cast<size_t>(k), false);
  const double tol = 1e-12 * std::max(1.0, c.lpNorm<Eigen::Infinity>() * d.lpNorm<Eigen::Infinity>());

  auto solve_passive = [&](VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (passive[i]) idx.push_back(i);
    }
    z = VectorXd::Zero(k);
    if (idx.empty()) return;
    MatrixXd sub(c.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = c.col(idx[j]);
    const VectorXd zs = sub.completeOrthogonalDecomposition().solve(d);
    for (size_t j = 0; j < idx.size(); ++j) z[idx[j]] = zs[static_cast<Eigen::Index>(j)];
  };

  for (int outer = 0; outer < 3 * k + 10; ++outer) {
    const VectorXd w = c.transpose() * (d - c * x);
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!passive[i] && w[i] > tol && (best < 0 || w[i] > w[best])) best = i;
    }
    if (best < 0) break;
    passive[best] = true;
    VectorXd z;
    for (int inner = 0; inner < 3 * k + 10; ++inner) {
      solve_passive(z);
      double alpha = 1.0;
      bool blocked = false;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[i] && z[i] <= 0.0) {
          blocked = true;
          alpha = std::min(alpha, x[i] / (x[i] - z[i]));
        }
      }
      if (!blocked) break;
      x += alpha * (z - x);
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[i] && x[i] <= tol) {
          passive[i] = false;
          x[i] = 0.0;
        }
      }
    }
    x = z;
  }
  return x;
}

}  // namespace

ValidationReport validate(const LateralTrajectory& traj, const QpProblem& problem) {
  ValidationReport rep;
  const int n = problem.size();
  if (static_cast<int>(traj.states.size()) != problem.n_end) {
    rep.dynamics = rep.bounds = rep.stationarity = std::numeric_limits<double>::infinity();
    return rep;
  }
  const VectorXd x = traj.stacked();
  if (problem.A.rows() > 0) rep.dynamics = (problem.A * x - problem.b).lpNorm<Eigen::Infinity>();

  constexpr double active_tol = 1e-7;
  std::vector<int> active;
  std::vector<int> side;  // +1 lower, -1 upper, 0 pinned
  for (int i = 0; i < n; ++i) {
    if (i < 4) {
      active.push_back(i);
      side.push_back(0);
      continue;
    }
    rep.bounds = std::max({rep.bounds, problem.B_min[i] - x[i], x[i] - problem.B_max[i]});
    if (problem.B_max[i] - problem.B_min[i] <= active_tol) {
      active.push_back(i);
      side.push_back(0);
    } else if (x[i] - problem.B_min[i] <= active_tol) {
      active.push_back(i);
      side.push_back(1);
    } else if (problem.B_max[i] - x[i] <= active_tol) {
      active.push_back(i);
      side.push_back(-1);
    }
  }

  // Multipliers: grad = A' nu + sum over active bounds of mu_i e_i.  Equality rows and
  // pinned variables carry free multipliers and are projected out; the one-sided
  // bounds then need mu >= 0 (sign folded into the column), found by NNLS.  Degenerate
  // active sets make the multipliers non-unique, so a plain least-squares fit is not enough.
  const VectorXd grad = problem.H * x + problem.F;
  const auto m = problem.A.rows();
  std::vector<int> free_cols, signed_cols;
  std::vector<double> signs;
  for (size_t k = 0; k < active.size(); ++k) {
    if (side[k] == 0) {
      free_cols.push_back(active[k]);
    } else {
      signed_cols.push_back(active[k]);
      signs.push_back(side[k]);
    }
  }
  MatrixXd eq = MatrixXd::Zero(n, m + static_cast<Eigen::Index>(free_cols.size()));
  if (m > 0) eq.leftCols(m) = problem.A.transpose();
  for (size_t k = 0; k < free_cols.size(); ++k) eq(free_cols[k], m + static_cast<Eigen::Index>(k)) = 1.0;

  MatrixXd basis;  // orthonormal basis of range(eq)
  if (eq.cols() > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(eq);
    qr.setThreshold(1e-12);
    const auto rank = qr.rank();
    basis = MatrixXd(qr.householderQ()).leftCols(rank);
  } else {
    basis = MatrixXd::Zero(n, 0);
  }
  auto project = [&](const VectorXd& v) -> VectorXd { return v - basis * (basis.transpose() * v); };

  MatrixXd c(n, static_cast<Eigen::Index>(signed_cols.size()));
  for (size_t k = 0; k < signed_cols.size(); ++k) {
    VectorXd e = VectorXd::Zero(n);
    e[signed_cols[k]] = signs[k];
    c.col(static_cast<Eigen::Index>(k)) = project(e);
  }
  const VectorXd g = project(grad);
  const VectorXd mu = nonnegative_least_squares(c, g);
  rep.stationarity = (g - c * mu).lpNorm<Eigen::Infinity>();
  return rep;
}

double envelope_violation(const LateralTrajectory& traj, const SafetyEnvelope& env) {
  double worst = 0.0;
  const auto n = std::min(traj.states.size(), env.y_min.size());
  for (size_t k = 0; k < n; ++k) {
    worst = std::max({worst, env.y_min[k] - traj.states[k].y, traj.states[k].y - env.y_max[k]});
  }
  return worst;
}

}  // namespace evade

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "evade/drivable_area.hpp"
#include "evade/qp_solver.hpp"

namespace evade {

struct LateralState {
  double y = 0.0;
  double vy = 0.0;
  double ay = 0.0;
  double jy = 0.0;
};

/// Uniform kinematic limits for v_y, a_y and j_y.
struct KinematicLimits {
  double v_max = 2.0;
  double a_max = 2.7468;  // 0.4 * mu * g with mu = 0.7
  double j_max = 10.0;
  // Pin v_y = a_y = 0 on the last step so the maneuver ends in lane keeping.
  bool settle_at_end = true;

  static KinematicLimits from_adhesion(double vy_max, double mu, double g = 9.81,
                                       double fraction = 0.4, double j_max = 10.0);
};

struct CostWeights {
  double p = 1.0;    // lateral speed
  double q = 10.0;   // lateral acceleration
  double r = 100.0;  // lateral jerk

  bool operator==(const CostWeights&) const = default;
};

/// Per-step bounds, stacked the same way as the decision vector.
struct StepBounds {
  std::vector<double> y_min, y_max, v_min, v_max, a_min, a_max, j_min, j_max;
};

/// Stacked QP over Y = [phi(0), ..., phi(N_end-1)], phi = (y, v_y, a_y, j_y).
struct QpProblem {
  int n_end = 0;
  double ts = 0.05;
  Eigen::MatrixXd H;      // 4N x 4N, blocks diag(0, 2p, 2q, 2r)
  Eigen::VectorXd F;      // zero
  Eigen::MatrixXd A;      // 3(N-1) x 4N, one a_nb block per step pair
  Eigen::VectorXd b;      // zero
  Eigen::VectorXd B_min;
  Eigen::VectorXd B_max;

  int size() const { return 4 * n_end; }
};

struct SolverStats {
  int iterations = 0;
  double kkt_residual = 0.0;
  bool polished = false;
};

struct LateralTrajectory {
  std::vector<LateralState> states;
  double objective = 0.0;
  SolverStats stats;

  Eigen::VectorXd stacked() const;
  double max_abs_ay() const;
};

struct PlanResult {
  QpStatus status = QpStatus::IterationLimit;
  LateralTrajectory trajectory;  // valid when status == Solved
  int infeasible_step = -1;      // certificate for Infeasible
  std::string detail;

  bool ok() const { return status == QpStatus::Solved; }
};

struct ValidationReport {
  double dynamics = 0.0;      // max |AY - b|
  double bounds = 0.0;        // max bound violation (steps after the pinned first one)
  double stationarity = 0.0;  // max KKT gradient residual incl. multiplier sign errors
  double initial = 0.0;       // mismatch of step 0 against the pinned state, when checked

  bool within(double eq_tol = 1e-8, double bound_tol = 1e-8, double stat_tol = 1e-6) const {
    return dynamics <= eq_tol && bounds <= bound_tol && stationarity <= stat_tol;
  }
};

/// The 3x8 block coupling phi(t) and phi(t+1).
Eigen::Matrix<double, 3, 8> dynamics_block(double ts);

QpProblem assemble(const StepBounds& bounds, const std::vector<CostWeights>& weights, double ts);
QpProblem assemble(const SafetyEnvelope& envelope, const KinematicLimits& limits,
                   const CostWeights& weights);

/// Copy of the problem with step 0 fixed to `init`.
QpProblem pin_initial(const QpProblem& problem, const LateralState& init);

PlanResult solve(const QpProblem& problem, const LateralState& init,
                 const QpSolverSettings& settings = {});

/// Residuals recomputed from the trajectory alone.  Step 0 is treated as pinned.
ValidationReport validate(const LateralTrajectory& traj, const QpProblem& problem);

/// Envelope check on the planner grid.
double envelope_violation(const LateralTrajectory& traj, const SafetyEnvelope& envelope);

}  // namespace evade

#pragma once

#include <Eigen/Dense>

#include <string>

namespace evade {

/// min 1/2 x'Hx + f'x  s.t.  Ax = b,  lower <= x <= upper.
/// Infinite bounds are allowed; lower == upper fixes a variable.
struct BoxEqQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  void check_dimensions() const;
};

enum class QpStatus { Solved, Infeasible, IterationLimit };

const char* to_string(QpStatus status);

struct QpSolverSettings {
  int max_iterations = 100;
  double tolerance = 1e-10;  // scaled primal/dual residual and complementarity target
  double stall_tolerance = 1e-7;  // accepted when the iteration stalls before `tolerance`
  double infeasibility_tolerance = 1e-7;
  bool polish = true;
};

struct QpSolution {
  QpStatus status = QpStatus::IterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;  // max of reduced stationarity, primal and complementarity residuals
  bool polished = false;
  int blocking_variable = -1;  // for Infeasible: a variable whose bounds cannot be met
  std::string detail;
};

/// Eliminates the equalities with an orthonormal null-space basis, then runs a
/// Mehrotra predictor-corrector interior-point method on the remaining bound
/// rows.  The result is polished by an equality-constrained solve on the
/// detected active set.  When the interior-point iteration fails, a
/// minimum-violation phase-one problem separates Infeasible from IterationLimit.
QpSolution solve_box_eq_qp(const BoxEqQp& qp, const QpSolverSettings& settings = {});

}  // namespace evade

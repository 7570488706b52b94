#pragma once

// Reference computations used only by tests and the CLI selftest.  None of these
// share code paths with the library routines they check.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evade/lateral_qp.hpp"

namespace evade::oracle {

/// Raw planner data.  Bound vectors are stacked like the decision vector and may
/// hold infinities; step 0 is pinned to `init` separately.
struct LateralInstance {
  int n_end = 0;
  double ts = 0.0;
  CostWeights weights;
  LateralState init;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int finite_rows = 0;

  /// The same instance through the library's assembly path, step 0 pinned.
  QpProblem to_problem() const;
};

/// Random planner instance with N in [3, 10], Ts in [0.1, 0.5], a random pinned
/// initial state and at most `max_rows` finite bounds that a random trajectory meets.
LateralInstance random_instance(std::mt19937_64& rng, int max_rows = 6);

struct BruteForceResult {
  bool feasible = false;
  double objective = 0.0;
  Eigen::VectorXd y;
  long subproblems = 0;
};

/// Exact minimum by enumerating every active-bound assignment in the reduced
/// space of free jerks.  Exponential in the number of finite bound rows.
BruteForceResult brute_force(const LateralInstance& instance);

/// Hazard time by forward integration of ego and obstacle positions.
std::optional<double> integrate_hazard_time(double v_ego, double v_obj, double a_obj, double gap,
                                            double dt = 1e-5, double t_max = 60.0);

/// Stopping distance for a dead time, linear ramp and hold, from piecewise
/// analytic integration of the deceleration profile.
double ramp_stopping_distance(double v0, double a, double tau1, double tau2);

/// Eq.-style closed form: dead time plus half the ramp at full speed, then v^2/2a.
double closed_form_stopping_distance(double v0, double a, double tau1, double tau2);

double kmh(double value);  // km/h to m/s

struct SelftestLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The builtin invariant and oracle checks shared by the selftest command.
std::vector<SelftestLine> run_selftest(std::uint64_t seed = 20240611, int qp_instances = 200);

}  // namespace evade::oracle

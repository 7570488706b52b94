#include "evade/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace evade {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

void BoxEqQp::check_dimensions() const {
  const auto n = H.rows();
  if (H.cols() != n || f.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("qp: H, f and bounds must agree on the variable count");
  }
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n)) {
    throw std::invalid_argument("qp: A must be m x n with b of length m");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// min 1/2 w'Qw + c'w  s.t.  Gw >= h
struct InequalityQp {
  MatrixXd Q;
  VectorXd c;
  MatrixXd G;
  VectorXd h;
};

struct IpmResult {
  bool converged = false;
  VectorXd w, s, lambda;
  int iterations = 0;
  double residual = kInf;
};

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

IpmResult interior_point(const InequalityQp& p, const QpSolverSettings& settings) {
  const auto n = p.Q.rows();
  const auto m = p.G.rows();
  IpmResult r;
  r.w = VectorXd::Zero(n);

  if (n == 0 && m == 0) {
    r.converged = true;
    r.residual = 0.0;
    return r;
  }
  const double regularization =
      1e-11 * std::max(1.0, n > 0 ? p.Q.diagonal().cwiseAbs().maxCoeff() : 0.0);
  if (m == 0) {
    Eigen::LDLT<MatrixXd> ldlt(p.Q + regularization * MatrixXd::Identity(n, n));
    r.w = ldlt.solve(-p.c);
    r.residual = (p.Q * r.w + p.c).lpNorm<Eigen::Infinity>();
    r.converged = r.residual <= 1e-8 * (1.0 + p.c.lpNorm<Eigen::Infinity>());
    return r;
  }

  r.s = (p.G * r.w - p.h).cwiseMax(1.0);
  r.lambda = VectorXd::Ones(m);
  const double scale_c = 1.0 + p.c.lpNorm<Eigen::Infinity>();
  const double scale_h = 1.0 + p.h.lpNorm<Eigen::Infinity>();
  // Ill-conditioned normal equations can wreck a late step; keep the best iterate seen.
  IpmResult best;

  for (int it = 0; it < settings.max_iterations; ++it) {
    r.iterations = it;
    const VectorXd r_d = p.Q * r.w + p.c - p.G.transpose() * r.lambda;
    const VectorXd r_p = p.G * r.w - r.s - p.h;
    const double mu = r.s.dot(r.lambda) / static_cast<double>(m);
    const double dual_res = r_d.lpNorm<Eigen::Infinity>() / scale_c;
    const double primal_res = r_p.lpNorm<Eigen::Infinity>() / scale_h;
    const double gap = mu / (scale_c * scale_h);
    r.residual = std::max({dual_res, primal_res, gap});
    if (r.residual <= settings.tolerance) {
      r.converged = true;
      return r;
    }
    if (!std::isfinite(r.residual)) break;
    if (r.residual < best.residual) best = r;
    if (r.lambda.maxCoeff() > 1e14 || r.w.lpNorm<Eigen::Infinity>() > 1e14) break;

    const VectorXd d = r.lambda.cwiseQuotient(r.s);
    MatrixXd M = p.Q + p.G.transpose() * d.asDiagonal() * p.G;
    M.diagonal().array() += regularization;
    Eigen::LDLT<MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) break;

    auto newton = [&](const VectorXd& r_c, VectorXd& dw, VectorXd& ds, VectorXd& dl) {
      const VectorXd rhs =
          -r_d + p.G.transpose() * (r_c - r.lambda.cwiseProduct(r_p)).cwiseQuotient(r.s);
      dw = ldlt.solve(rhs);
      ds = p.G * dw + r_p;
      dl = (r_c - r.lambda.cwiseProduct(ds)).cwiseQuotient(r.s);
    };

    VectorXd dw, ds, dl;
    const VectorXd sl = r.s.cwiseProduct(r.lambda);
    newton(-sl, dw, ds, dl);
    const double alpha_aff = std::min(max_step(r.s, ds), max_step(r.lambda, dl));
    const double mu_aff =
        (r.s + alpha_aff * ds).dot(r.lambda + alpha_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    const VectorXd r_c = -sl - ds.cwiseProduct(dl) + VectorXd::Constant(m, sigma * mu);
    newton(r_c, dw, ds, dl);
    const double tau = std::max(0.99, 1.0 - mu);
    const double alpha = std::min(1.0, tau * std::min(max_step(r.s, ds), max_step(r.lambda, dl)));
    if (alpha < 1e-14) break;
    r.w += alpha * dw;
    r.s += alpha * ds;
    r.lambda += alpha * dl;
    r.iterations = it + 1;
  }
  // Stalled in floating point close to the optimum: the polish step finishes the job.
  best.iterations = r.iterations;
  best.converged = best.residual <= settings.stall_tolerance;
  return best;
}

// Equality-constrained solve on the rows judged active at the interior-point
// solution.  Returns false when the active-set guess does not satisfy KKT.
bool polish(const InequalityQp& p, const IpmResult& ipm, VectorXd& w_out, double& residual) {
  const auto n = p.Q.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < p.G.rows(); ++i) {
    if (ipm.s[i] < ipm.lambda[i]) active.push_back(i);
  }
  const auto na = static_cast<Eigen::Index>(active.size());
  MatrixXd K = MatrixXd::Zero(n + na, n + na);
  VectorXd rhs(n + na);
  K.topLeftCorner(n, n) = p.Q;
  rhs.head(n) = -p.c;
  for (Eigen::Index k = 0; k < na; ++k) {
    K.block(0, n + k, n, 1) = -p.G.row(active[k]).transpose();
    K.block(n + k, 0, 1, n) = p.G.row(active[k]);
    rhs[n + k] = p.h[active[k]];
  }
  Eigen::FullPivLU<MatrixXd> lu(K);
  const VectorXd sol = lu.solve(rhs);
  const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * scale) return false;

  const VectorXd w = sol.head(n);
  const VectorXd slack = p.G * w - p.h;
  const double feas_tol = 1e-11 * (1.0 + p.h.lpNorm<Eigen::Infinity>());
  if (slack.size() > 0 && slack.minCoeff() < -feas_tol) return false;
  for (Eigen::Index k = 0; k < na; ++k) {
    if (sol[n + k] < -1e-9 * (1.0 + p.c.lpNorm<Eigen::Infinity>())) return false;
  }
  VectorXd grad = p.Q * w + p.c;
  for (Eigen::Index k = 0; k < na; ++k) grad -= sol[n + k] * p.G.row(active[k]).transpose();
  residual = grad.lpNorm<Eigen::Infinity>();
  w_out = w;
  return true;
}

}  // namespace

QpSolution solve_box_eq_qp(const BoxEqQp& qp, const QpSolverSettings& settings) {
  qp.check_dimensions();
  const auto n = qp.H.rows();
  QpSolution out;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.lower[i] > qp.upper[i]) {
      out.status = QpStatus::Infeasible;
      out.blocking_variable = static_cast<int>(i);
      out.detail = "empty bound interval";
      return out;
    }
  }

  // Fixed variables join the equality system.
  std::vector<Eigen::Index> fixed;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(qp.lower[i]) || !std::isfinite(qp.upper[i])) continue;
    const double width = qp.upper[i] - qp.lower[i];
    if (width <= 1e-14 * std::max(1.0, std::abs(qp.lower[i]))) fixed.push_back(i);
  }
  const auto m_eq = qp.A.rows();
  const auto m_all = m_eq + static_cast<Eigen::Index>(fixed.size());
  MatrixXd E = MatrixXd::Zero(m_all, n);
  VectorXd e(m_all);
  if (m_eq > 0) {
    E.topRows(m_eq) = qp.A;
    e.head(m_eq) = qp.b;
  }
  for (size_t k = 0; k < fixed.size(); ++k) {
    E(m_eq + static_cast<Eigen::Index>(k), fixed[k]) = 1.0;
    e[m_eq + static_cast<Eigen::Index>(k)] = 0.5 * (qp.lower[fixed[k]] + qp.upper[fixed[k]]);
  }

  // x = x0 + Z w with Z an orthonormal basis of null(E).
  VectorXd x0 = VectorXd::Zero(n);
  MatrixXd Z = MatrixXd::Identity(n, n);
  if (m_all > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(E.transpose());
    qr.setThreshold(1e-12);
    const auto rank = qr.rank();
    const MatrixXd Qfull = qr.householderQ() * MatrixXd::Identity(n, n);
    Z = Qfull.rightCols(n - rank);
    x0 = E.completeOrthogonalDecomposition().solve(e);
    const double eq_res = (E * x0 - e).lpNorm<Eigen::Infinity>();
    if (eq_res > 1e-9 * (1.0 + e.lpNorm<Eigen::Infinity>())) {
      out.status = QpStatus::Infeasible;
      out.detail = "inconsistent equality constraints";
      out.blocking_variable = fixed.empty() ? -1 : static_cast<int>(fixed.front());
      return out;
    }
  }

  std::vector<bool> is_fixed(n, false);
  for (auto i : fixed) is_fixed[i] = true;

  // Bound rows in the reduced space.
  std::vector<Eigen::Index> row_var;
  std::vector<double> row_sign;
  const double zero_row = 1e-12;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (is_fixed[i]) continue;
    if (Z.row(i).lpNorm<Eigen::Infinity>() <= zero_row) {
      // The equalities determine this variable; check it instead of keeping a constant row.
      const double tol = 1e-9 * (1.0 + std::abs(x0[i]));
      if (x0[i] < qp.lower[i] - tol || x0[i] > qp.upper[i] + tol) {
        out.status = QpStatus::Infeasible;
        out.blocking_variable = static_cast<int>(i);
        out.detail = "variable fixed by the equalities violates its bounds";
        return out;
      }
      continue;
    }
    if (std::isfinite(qp.lower[i])) { row_var.push_back(i); row_sign.push_back(1.0); }
    if (std::isfinite(qp.upper[i])) { row_var.push_back(i); row_sign.push_back(-1.0); }
  }
  const auto m_in = static_cast<Eigen::Index>(row_var.size());
  InequalityQp red;
  red.Q = Z.transpose() * qp.H * Z;
  red.Q = 0.5 * (red.Q + red.Q.transpose());
  red.c = Z.transpose() * (qp.H * x0 + qp.f);
  red.G.resize(m_in, Z.cols());
  red.h.resize(m_in);
  for (Eigen::Index r = 0; r < m_in; ++r) {
    const auto i = row_var[r];
    red.G.row(r) = row_sign[r] * Z.row(i);
    red.h[r] = row_sign[r] > 0 ? qp.lower[i] - x0[i] : x0[i] - qp.upper[i];
  }

  const IpmResult ipm = interior_point(red, settings);
  out.iterations = ipm.iterations;

  if (!ipm.converged) {
    // Phase one: minimise the largest bound violation t >= 0.
    InequalityQp ph;
    const auto nz = red.Q.rows();
    ph.Q = MatrixXd::Zero(nz + 1, nz + 1);
    ph.c = VectorXd::Zero(nz + 1);
    ph.c[nz] = 1.0;
    ph.G = MatrixXd::Zero(m_in + 1, nz + 1);
    ph.G.topLeftCorner(m_in, nz) = red.G;
    ph.G.block(0, nz, m_in, 1).setOnes();
    ph.G(m_in, nz) = 1.0;
    ph.h = VectorXd::Zero(m_in + 1);
    ph.h.head(m_in) = red.h;
    QpSolverSettings ph_settings = settings;
    ph_settings.max_iterations = std::max(settings.max_iterations, 200);
    ph_settings.tolerance = 1e-9;
    const IpmResult feas = interior_point(ph, ph_settings);
    out.iterations += feas.iterations;
    const double violation = feas.w.size() > 0 ? feas.w[nz] : kInf;
    if (feas.converged && violation > settings.infeasibility_tolerance) {
      out.status = QpStatus::Infeasible;
      const double lmax = m_in > 0 ? feas.lambda.head(m_in).maxCoeff() : 0.0;
      for (Eigen::Index r = 0; r < m_in; ++r) {
        if (feas.lambda[r] > 1e-6 * lmax) {
          out.blocking_variable = std::max(out.blocking_variable, static_cast<int>(row_var[r]));
        }
      }
      out.detail = "minimum bound violation " + std::to_string(violation);
    } else {
      out.status = QpStatus::IterationLimit;
      out.detail = feas.converged ? "interior point stalled on a feasible problem"
                                  : "phase one did not converge";
    }
    out.kkt_residual = ipm.residual;
    return out;
  }

  VectorXd w = ipm.w;
  out.kkt_residual = ipm.residual;
  if (settings.polish && w.size() > 0) {
    VectorXd wp;
    double res = 0.0;
    if (polish(red, ipm, wp, res)) {
      w = wp;
      out.polished = true;
      out.kkt_residual = res;
    }
  }
  out.x = x0 + Z * w;
  for (size_t k = 0; k < fixed.size(); ++k) {
    out.x[fixed[k]] = e[m_eq + static_cast<Eigen::Index>(k)];
  }
  out.objective = 0.5 * out.x.dot(qp.H * out.x) + qp.f.dot(out.x);
  out.status = QpStatus::Solved;
  return out;
}

}  // namespace evade

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace qtherm::detail {

struct LmOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-13;   // relative parameter change
  double cost_tolerance = 1e-15;   // relative cost change
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jacobian;  // at the returned parameters
};

/// Minimizes |r(x)|^2 with Marquardt's diagonal scaling.
/// `residuals(x)` returns r; `jacobian(x)` returns dr/dx.
inline LmResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian, Eigen::VectorXd x,
    const LmOptions& opts = {}) {
  LmResult out;
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  Eigen::MatrixXd J = jacobian(x);
  double lambda = opts.initial_damping;

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-300 || cost == 0.0) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        A(i, i) += lambda * std::max(JtJ(i, i), 1e-300);
      }
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd x_new = x + step;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double cost_new = r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new <= cost) {
        const double rel_cost = (cost - cost_new) / std::max(cost, 1e-300);
        const double rel_step = step.norm() / std::max(x.norm(), 1e-300);
        x = x_new;
        r = r_new;
        cost = cost_new;
        J = jacobian(x);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (rel_step < opts.step_tolerance || rel_cost < opts.cost_tolerance) {
          out.converged = true;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      // No descent direction at any damping: we sit at a (numerical) minimum.
      out.converged = true;
      break;
    }
    if (out.converged) {
      ++it;
      break;
    }
  }

  out.params = std::move(x);
  out.cost = cost;
  out.iterations = it;
  out.jacobian = std::move(J);
  return out;
}

}  // namespace qtherm::detail

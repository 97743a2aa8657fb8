#include "nvspec/levmar.hpp"

#include <cmath>

namespace nvspec {

Eigen::MatrixXd numerical_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                   double rel_step) {
  const Eigen::VectorXd r0 = fn(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(std::abs(x[j]), 1.0);
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return jac;
}

LeastSquaresResult fit_least_squares(const ResidualFn& fn, Eigen::VectorXd init,
                                     const LeastSquaresOptions& options) {
  LeastSquaresResult result;
  Eigen::VectorXd x = std::move(init);
  Eigen::VectorXd r = fn(x);
  double cost = 0.5 * r.squaredNorm();
  double lambda = options.lambda0;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = numerical_jacobian(fn, x, options.jacobian_step);
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      result.converged = true;
      result.message = "gradient below tolerance";
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;

    bool accepted = false;
    while (lambda < 1e14) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index d = 0; d < damped.rows(); ++d) {
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      const Eigen::VectorXd x_try = x + delta;
      const Eigen::VectorXd r_try = fn(x_try);
      const double cost_try = 0.5 * r_try.squaredNorm();
      if (cost_try < cost && std::isfinite(cost_try)) {
        const double rel_drop = (cost - cost_try) / std::max(cost, 1e-300);
        x = x_try;
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_drop < options.cost_tol) {
          result.converged = true;
          result.message = "cost change below tolerance";
        }
        break;
      }
      lambda *= 2.0;
    }
    if (!accepted) {
      result.converged = cost == 0.0 || grad.lpNorm<Eigen::Infinity>() < 1e3 * options.gradient_tol;
      result.message = result.converged ? "stalled at a flat minimum" : "damping exhausted";
      break;
    }
    if (result.converged) break;
  }
  if (!result.converged && iter == options.max_iterations) {
    result.message = "iteration limit reached";
  }

  result.params = x;
  result.iterations = iter;
  result.cost = cost;

  const Eigen::MatrixXd jac = numerical_jacobian(fn, x, options.jacobian_step);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const Eigen::Index dof = std::max<Eigen::Index>(1, r.size() - x.size());
  const double s2 = 2.0 * cost / static_cast<double>(dof);
  Eigen::MatrixXd inv = jtj;
  inv = jtj.completeOrthogonalDecomposition().pseudoInverse();
  result.covariance = inv * s2;
  result.stderrs = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return result;
}

int rank_deficient_direction(const Eigen::MatrixXd& jacobian, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0) return -1;
  if (sv[sv.size() - 1] > tol * sv[0]) return -1;
  Eigen::Index which = 0;
  svd.matrixV().col(sv.size() - 1).cwiseAbs().maxCoeff(&which);
  return static_cast<int>(which);
}

}  // namespace nvspec

// Damped least squares (Levenberg-Marquardt) with central-difference
// Jacobians, on plain Eigen types.
#ifndef NVSPEC_LEVMAR_HPP
#define NVSPEC_LEVMAR_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace nvspec {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double cost_tol = 1e-10;      // relative cost decrease per accepted step
  double gradient_tol = 1e-8;   // infinity norm of J^T r
  double jacobian_step = 1e-6;  // relative central-difference step
  double lambda0 = 1e-3;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  bool converged = false;
  int iterations = 0;
  double cost = 0.0;  // 0.5 * |r|^2
  Eigen::MatrixXd covariance;
  Eigen::VectorXd stderrs;
  std::string message;
};

Eigen::MatrixXd numerical_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                   double rel_step = 1e-6);

LeastSquaresResult fit_least_squares(const ResidualFn& fn, Eigen::VectorXd init,
                                     const LeastSquaresOptions& options = {});

// Index of the parameter dominating the null direction of a rank-deficient
// Jacobian, or -1 when J has full column rank at the given tolerance.
int rank_deficient_direction(const Eigen::MatrixXd& jacobian, double tol = 1e-9);

}  // namespace nvspec

#endif  // NVSPEC_LEVMAR_HPP

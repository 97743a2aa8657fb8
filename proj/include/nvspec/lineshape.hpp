// Homogeneous (driven two-level steady state) and inhomogeneous
// (Gaussian-convolved) lineshapes.
#ifndef NVSPEC_LINESHAPE_HPP
#define NVSPEC_LINESHAPE_HPP

#include <Eigen/Core>
#include <cmath>

#include "nvspec/model.hpp"

namespace nvspec {

// Steady-state excited population of a coupled pair under decay:
// W^2 / (4 dr^2 + 2 W^2 + gamma^2), bounded by 1/2.
// The fully degenerate 0/0 case returns 0 and raises the flag when given.
template <typename Scalar>
Scalar steady_state_population(Scalar rabi_w, Scalar detuning_r, Scalar gamma_star,
                               bool* degenerate = nullptr) {
  if (rabi_w < Scalar(0) || gamma_star < Scalar(0)) {
    throw std::domain_error("steady_state_population: rabi_w and gamma_star must be >= 0");
  }
  if (degenerate) *degenerate = false;
  const Scalar denom = Scalar(4) * detuning_r * detuning_r +
                       Scalar(2) * rabi_w * rabi_w + gamma_star * gamma_star;
  if (denom == Scalar(0)) {
    if (degenerate) *degenerate = true;
    return Scalar(0);
  }
  return rabi_w * rabi_w / denom;
}

// Full width at half maximum of the homogeneous line: sqrt(2 W^2 + gamma^2).
template <typename Scalar>
Scalar lorentzian_fwhm(Scalar rabi_w, Scalar gamma_star) {
  if (rabi_w < Scalar(0) || gamma_star < Scalar(0)) {
    throw std::domain_error("lorentzian_fwhm: inputs must be >= 0");
  }
  return std::sqrt(Scalar(2) * rabi_w * rabi_w + gamma_star * gamma_star);
}

inline double gaussian_fwhm(double sigma) {
  return 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma;
}

struct PeakShape {
  double center = 0.0;           // MHz
  double rabi_w = 0.0;           // MHz
  double gamma_star = 0.0;       // MHz
  double sigma = 0.0;            // MHz, Gaussian std; 0 means bare homogeneous line
  double amplitude_scale = 1.0;  // dimensionless
};

// Convolution of the homogeneous line with a unit-area Gaussian, by direct
// quadrature on an internal grid of spacing min(gamma, sigma)/10 truncated at
// +-6 sigma. sigma = 0 returns the bare line exactly. Emits a resolution
// warning when the requested grid is coarser than the narrowest feature.
Eigen::ArrayXd voigt_profile(const PeakShape& peak, const Eigen::ArrayXd& grid,
                             Notes* notes = nullptr);

}  // namespace nvspec

#endif  // NVSPEC_LINESHAPE_HPP

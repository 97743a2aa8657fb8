#include "nvspec/lineshape.hpp"

#include <sstream>

namespace nvspec {

namespace {

void check_grid_increasing(const Eigen::ArrayXd& grid, const char* where) {
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ValidationError(std::string(where) + ": grid must be strictly increasing");
    }
  }
}

}  // namespace

Eigen::ArrayXd voigt_profile(const PeakShape& peak, const Eigen::ArrayXd& grid,
                             Notes* notes) {
  if (peak.rabi_w < 0 || peak.gamma_star < 0 || peak.sigma < 0) {
    throw std::domain_error("voigt_profile: widths must be >= 0");
  }
  check_grid_increasing(grid, "voigt_profile");

  // Resolution guard against aliasing the narrowest feature.
  if (grid.size() >= 2) {
    double max_spacing = 0.0;
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
      max_spacing = std::max(max_spacing, grid[i] - grid[i - 1]);
    }
    double finest = std::numeric_limits<double>::infinity();
    if (peak.gamma_star > 0) finest = std::min(finest, peak.gamma_star);
    if (peak.sigma > 0) finest = std::min(finest, peak.sigma);
    const double fwhm = lorentzian_fwhm(peak.rabi_w, peak.gamma_star);
    if (fwhm > 0) finest = std::min(finest, fwhm / 10.0);
    if (std::isfinite(finest) && max_spacing > finest) {
      std::ostringstream os;
      os << "voigt_profile: grid spacing " << max_spacing
         << " MHz is coarser than the narrowest feature " << finest << " MHz";
      note_warn(notes, os.str());
    }
  }

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(grid.size());
  if (peak.sigma == 0.0) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      out[i] = peak.amplitude_scale *
               steady_state_population(peak.rabi_w, grid[i] - peak.center, peak.gamma_star);
    }
    return out;
  }

  // Discrete Gaussian kernel, weights normalized to unit sum so the sigma -> 0
  // limit matches the bare line.
  double h = peak.sigma / 10.0;
  if (peak.gamma_star > 0) h = std::min(h, peak.gamma_star / 10.0);
  const int half = std::min(static_cast<int>(std::ceil(6.0 * peak.sigma / h)), 100000);
  h = 6.0 * peak.sigma / half;
  Eigen::ArrayXd offsets(2 * half + 1);
  Eigen::ArrayXd weights(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    const double x = k * h;
    offsets[k + half] = x;
    weights[k + half] = std::exp(-0.5 * x * x / (peak.sigma * peak.sigma));
  }
  weights /= weights.sum();

  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d0 = grid[i] - peak.center;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < offsets.size(); ++k) {
      acc += weights[k] *
             steady_state_population(peak.rabi_w, d0 - offsets[k], peak.gamma_star);
    }
    out[i] = peak.amplitude_scale * acc;
  }
  return out;
}

}  // namespace nvspec

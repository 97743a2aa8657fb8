// Inverse problems: peak fitting, splitting-vs-power regression, the shared
// multi-peak amplitude fit, and dipole arithmetic / geometry.
#ifndef NVSPEC_ESTIMATION_HPP
#define NVSPEC_ESTIMATION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nvspec/levmar.hpp"
#include "nvspec/model.hpp"
#include "nvspec/spectra.hpp"

namespace nvspec {

enum class PeakModel { Gaussian, Lorentzian, Voigt };

struct PeakFit {
  PeakModel model = PeakModel::Gaussian;
  double center = 0.0;        // MHz
  double width = 0.0;         // Gaussian std, Lorentzian FWHM, or Voigt total FWHM
  double sigma = 0.0;         // Gaussian part (Voigt pair)
  double lorentz_fwhm = 0.0;  // Lorentzian part (Voigt pair)
  double amplitude = 0.0;     // peak height above baseline
  double baseline = 0.0;
  double center_stderr = 0.0;
  double width_stderr = 0.0;
  double amplitude_stderr = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Nonlinear least squares of the chosen model plus a constant baseline over
// the samples inside [window_min, window_max]. Requires at least seven
// samples and a single interior maximum; multi-modal windows are rejected
// with guidance to narrow the window.
PeakFit fit_peak(const Spectrum& spectrum, double window_min, double window_max,
                 PeakModel model);

struct SlopeFit {
  double slope = 0.0;   // MHz / sqrt(mW)
  double stderr = 0.0;
  Eigen::VectorXd residuals;
};

// Least squares through the origin in sqrt(power). Needs >= 3 samples with
// positive powers.
SlopeFit fit_splitting_vs_power(const std::vector<std::pair<double, double>>& samples);

struct SidebandPeakId {
  int branch = +1;  // +1 or -1
  int n = 0;
};

struct SidebandDataPoint {
  SidebandPeakId peak;
  double power_mw = 0.0;
  double amplitude = 0.0;  // arbitrary units, same scale as the forward model
};

// Parameters measured independently and held fixed during the fit.
struct SidebandFixed {
  double k_rabi = 0.0;      // MHz/sqrt(mW)
  double omega_d = 0.0;     // MHz
  double detuning = 0.0;    // MHz, drive frequency minus doublet splitting
  double gamma_star = 15.0; // MHz
};

struct SidebandParams {
  double k_stark_x = 0.0;  // MHz/sqrt(mW)
  double k_stark_y = 0.0;  // MHz/sqrt(mW)
  double rabi_x = 0.0;     // MHz
  double rabi_y = 0.0;     // MHz
  double pl_ratio = 0.0;
};

struct SidebandFitResult {
  SidebandParams params;
  Eigen::VectorXd stderrs;     // same order as parameter_names()
  Eigen::MatrixXd covariance;
  double gof = 0.0;            // residual RMS per degree of freedom
  bool converged = false;
  int iterations = 0;
  static const std::vector<std::string>& parameter_names();
};

// Forward model for one tracked peak amplitude at one power.
double sideband_peak_amplitude(const SidebandPeakId& peak, double power_mw,
                               const SidebandParams& params, const SidebandFixed& fixed);

// Shared-parameter fit of the tracked-amplitude table. Needs >= 6 distinct
// peaks across >= 4 powers. A rank-deficient Jacobian is reported by the name
// of the unidentifiable parameter.
SidebandFitResult fit_sideband_amplitudes(const std::vector<SidebandDataPoint>& data,
                                          const SidebandFixed& fixed,
                                          std::optional<SidebandParams> init = std::nullopt);

// Transverse magnetic field (uT) from a magnetic Rabi frequency (MHz).
double field_from_magnetic_rabi(double rabi_m_mhz,
                                double gyro_mhz_per_mt = kGyromagneticMHzPerMT);

struct DipoleEstimate {
  double mu_debye = 0.0;
  double splitting_mhz = 0.0;
  double field_kv_per_m = 0.0;
  double uncertainty_debye = 0.0;
};

// mu[D] = h * splitting / field / (1 Debye).
DipoleEstimate dipole_from_splitting(double splitting_mhz, double field_kv_per_m);

// Optional orientation-uncertainty propagation: the dipole is tilted by a
// fixed angle from the symmetry axis, the azimuth is sampled uniformly with a
// seeded generator, and the field projection onto the dipole direction sets
// the per-sample estimate.
struct OrientationSampling {
  double tilt_deg = 25.0;
  double field_axial_kv_m = 0.0;
  double field_transverse_kv_m = 0.0;
  int n_samples = 20000;
  std::uint64_t seed = 1;
};

DipoleEstimate dipole_with_orientation(double splitting_mhz,
                                       const OrientationSampling& sampling);

using DipoleVector = Eigen::Vector3d;  // Debye, {strain axis, in-plane, symmetry axis}

struct DipoleGeometry {
  double magnitude = 0.0;
  double parallel = 0.0;       // component along the symmetry axis
  double perpendicular = 0.0;
  std::optional<double> angle_deg;  // to the symmetry axis; empty for the zero vector
};

DipoleGeometry dipole_geometry(const DipoleVector& v);

double pair_angle_deg(const DipoleVector& a, const DipoleVector& b);

}  // namespace nvspec

#endif  // NVSPEC_ESTIMATION_HPP

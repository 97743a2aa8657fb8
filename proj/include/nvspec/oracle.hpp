// Brute-force time-domain integration of the full time-dependent master
// equation in the lab frame. No rotating-frame reduction is applied, so this
// module independently validates every closed-form result in the dressed and
// lineshape modules.
//
// Basis ordering is {|0>, |Ex>, |Ey>}. Hamiltonians are in angular units
// (rad/us): every MHz quantity is multiplied by 2*pi here and only here.
#ifndef NVSPEC_ORACLE_HPP
#define NVSPEC_ORACLE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nvspec/model.hpp"
#include "nvspec/spectra.hpp"

namespace nvspec {

using DensityMatrix = Eigen::MatrixXcd;

struct IntegrationConfig {
  double dt_us = 0.0;           // 0 selects 1/(100 * largest angular frequency)
  double t_transient_us = 0.0;  // 0 selects ten excited-state lifetimes
  double t_average_us = 0.0;    // 0 selects eight drive periods
  std::string method = "rk4";
  double drive_phase = 0.0;     // rad, common phase offset of the mw tone
};

struct Trajectory {
  std::vector<double> t_us;
  std::vector<DensityMatrix> rho;
};

struct DensityDiagnostics {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |tr(rho) - 1|
  double min_eigenvalue = 0.0;
};

DensityDiagnostics density_diagnostics(const DensityMatrix& rho);

// Largest frequency (MHz) appearing in H(t) for this bundle; an optional scan
// grid extends the laser frequency range.
double max_frequency_mhz(const ModelBundle& bundle, const Eigen::ArrayXd* grid = nullptr);

// H(t) = static levels + laser coupling + mw transition drive + diagonal mw
// modulation, Hermitian by construction, in rad/us.
Eigen::Matrix3cd build_hamiltonian(const ModelBundle& bundle, double t_us,
                                   double drive_phase = 0.0);

// Fixed-step RK4 evolution over [0, t_transient + t_average], sampling every
// sample_stride steps (initial state included). rho0 must be a 3x3 density
// matrix. Refuses to run when the step fails the stability rule
// dt <= 1/(50 * largest angular frequency).
Trajectory integrate(const ModelBundle& bundle, const IntegrationConfig& config,
                     const DensityMatrix& rho0, int sample_stride = 1);

// For each laser frequency on the grid: integrate past the transient from the
// ground state, then average the total excited population over an integer
// number of drive periods. Returns the homogeneous spectrum (no Gaussian
// smoothing). Flags points whose two final period averages still differ by
// more than 1e-4 relative.
Spectrum steady_state_scan(const ModelBundle& bundle, const Eigen::ArrayXd& grid,
                           const IntegrationConfig& config = {}, Notes* notes = nullptr);

}  // namespace nvspec

#endif  // NVSPEC_ORACLE_HPP

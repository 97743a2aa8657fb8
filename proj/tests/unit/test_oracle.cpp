#include <doctest.h>

#include <cmath>

#include "nvspec/lineshape.hpp"
#include "nvspec/oracle.hpp"

using namespace nvspec;

namespace {

Eigen::ArrayXd linspace(double lo, double hi, int n) {
  Eigen::ArrayXd g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

ModelBundle quiet_bundle() {
  LevelDiagram levels{400.0, 0.0, {}};
  LaserField laser;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  return make_bundle(levels, {}, laser, shape);
}

// Quadratic refinement of the maximum of a sampled curve.
double refine_peak(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  Eigen::Index k = 0;
  y.maxCoeff(&k);
  if (k == 0 || k + 1 == y.size()) return x[k];
  const double denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
  if (denom == 0.0) return x[k];
  return x[k] + 0.5 * (y[k - 1] - y[k + 1]) / denom * (x[1] - x[0]);
}

}  // namespace

TEST_CASE("hamiltonian with no couplings is the bare diagonal") {
  const ModelBundle b = quiet_bundle();
  const Eigen::Matrix3cd h = build_hamiltonian(b, 0.37);
  CHECK(h(0, 0) == std::complex<double>(0.0, 0.0));
  CHECK(h(1, 1).real() == doctest::Approx(2.0 * kPi * 400.0).epsilon(1e-14));
  CHECK(h(2, 2).real() == doctest::Approx(0.0).scale(1.0));
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diagonal modulation at time zero adds the full amplitudes") {
  ModelBundle b = quiet_bundle();
  b.drive.omega_d = 470.0;
  b.drive.power_mw = 1.0;
  b.drive.k_stark_x = 11.7;
  b.drive.k_stark_y = 19.4;
  const Eigen::Matrix3cd h = build_hamiltonian(b, 0.0);
  CHECK(h(1, 1).real() == doctest::Approx(2.0 * kPi * (400.0 + 11.7)).epsilon(1e-12));
  CHECK(h(2, 2).real() == doctest::Approx(2.0 * kPi * 19.4).epsilon(1e-12));
}

TEST_CASE("transition-drive element is bounded by pi times the coupling") {
  ModelBundle b = quiet_bundle();
  b.drive.omega_d = 470.0;
  b.drive.power_mw = 4.0;
  b.drive.k_rabi = 10.7;
  const double bound = kPi * b.drive.rabi_d() * (1.0 + 1e-12);
  for (double t : {0.0, 1e-4, 3e-4, 0.01, 0.3}) {
    const Eigen::Matrix3cd h = build_hamiltonian(b, t);
    CHECK(std::abs(h(1, 2)) <= bound);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("spontaneous decay reproduces the exponential lifetime") {
  ModelBundle b = quiet_bundle();
  b.shape.gamma_star = 1e3 / (2.0 * kPi * 10.5);  // rate of a 10.5 ns lifetime
  DensityMatrix rho0 = Eigen::Matrix3cd::Zero();
  rho0(2, 2) = 1.0;
  IntegrationConfig config;
  config.t_average_us = 0.05;
  const Trajectory traj = integrate(b, config, rho0, 100);
  REQUIRE(traj.t_us.size() > 5);
  for (std::size_t i = 0; i < traj.t_us.size(); ++i) {
    const double expected = std::exp(-traj.t_us[i] / 0.0105);
    CHECK(traj.rho[i](2, 2).real() == doctest::Approx(expected).epsilon(1e-6).scale(1.0));
    CHECK(std::abs(traj.rho[i].trace().real() - 1.0) < 1e-8);
  }
}

TEST_CASE("resonant laser with no decay drives full Rabi cycles") {
  LevelDiagram levels{400.0, 0.0, {}};
  LaserField laser;
  laser.rabi_y = 5.0;
  LineshapeParams shape;
  shape.gamma_star = 0.0;
  const ModelBundle b = make_bundle(levels, {}, laser, shape);
  DensityMatrix rho0 = Eigen::Matrix3cd::Zero();
  rho0(0, 0) = 1.0;
  IntegrationConfig config;
  config.t_average_us = 0.2;  // one full population cycle at 5 MHz
  const Trajectory traj = integrate(b, config, rho0, 157);
  for (std::size_t i = 0; i < traj.t_us.size(); ++i) {
    const double phase = kPi * 5.0 * traj.t_us[i];
    const double expected = std::sin(phase) * std::sin(phase);
    CHECK(traj.rho[i](2, 2).real() == doctest::Approx(expected).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("integrator preserves the density-matrix invariants while driven") {
  LevelDiagram levels{500.0, 0.0, {}};
  DriveField drive;
  drive.omega_d = 470.0;
  drive.power_mw = 1.0;
  drive.k_rabi = 60.0;
  drive.k_stark_x = 250.0;
  drive.k_stark_y = 400.0;
  LaserField laser;
  laser.omega_l = 30.0;
  laser.rabi_x = 3.0;
  laser.rabi_y = 3.0;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  const ModelBundle b = make_bundle(levels, drive, laser, shape);
  DensityMatrix rho0 = Eigen::Matrix3cd::Zero();
  rho0(0, 0) = 1.0;
  IntegrationConfig config;
  config.t_average_us = 0.12;
  const Trajectory traj = integrate(b, config, rho0, 500);
  for (const DensityMatrix& rho : traj.rho) {
    const DensityDiagnostics d = density_diagnostics(rho);
    CHECK(d.hermiticity_error < 1e-10);
    CHECK(d.trace_error < 1e-8);
    CHECK(d.min_eigenvalue > -1e-8);
  }
}

TEST_CASE("integrator rejects bad initial states and unstable steps") {
  const ModelBundle b = quiet_bundle();
  DensityMatrix rho0 = Eigen::Matrix3cd::Zero();
  rho0(0, 0) = 0.6;  // trace 0.6
  IntegrationConfig config;
  config.t_average_us = 0.01;
  CHECK_THROWS_AS(integrate(b, config, rho0, 1), ValidationError);

  DensityMatrix ok = Eigen::Matrix3cd::Zero();
  ok(0, 0) = 1.0;
  IntegrationConfig coarse;
  coarse.t_average_us = 0.01;
  coarse.dt_us = 1.0;  // far beyond the stability rule for a 400 MHz level
  CHECK_THROWS_AS(integrate(b, coarse, ok, 1), ValidationError);
}

TEST_CASE("undriven scan matches the closed-form line within one percent") {
  LevelDiagram levels{400.0, 0.0, {}};
  LaserField laser;
  laser.rabi_y = 10.0;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  const ModelBundle b = make_bundle(levels, {}, laser, shape);
  const Eigen::ArrayXd grid = linspace(-60.0, 60.0, 21);
  Notes notes;
  IntegrationConfig config;
  config.t_transient_us = 20.0 / (2.0 * kPi * 15.0);  // settle well below the flag level
  const Spectrum sp = steady_state_scan(b, grid, config, &notes);
  CHECK(notes.warnings.empty());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double expected = steady_state_population(10.0, grid[i], 15.0);
    CHECK(sp.intensity[i] == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("resonant transition drive splits the line by the coupling") {
  LevelDiagram levels{600.0, 0.0, {}};
  DriveField drive;
  drive.omega_d = 600.0;
  drive.power_mw = 1.0;
  drive.k_rabi = 273.2;
  LaserField laser;
  laser.rabi_y = 6.0;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  const ModelBundle b = make_bundle(levels, drive, laser, shape);

  const Eigen::ArrayXd upper = linspace(129.0, 144.0, 16);
  const Eigen::ArrayXd lower = linspace(-144.0, -129.0, 16);
  const double p_up = refine_peak(upper, steady_state_scan(b, upper).intensity);
  const double p_dn = refine_peak(lower, steady_state_scan(b, lower).intensity);
  CHECK(p_up - p_dn == doctest::Approx(273.2).epsilon(3.0 / 273.2));
}

TEST_CASE("halving the step changes reported populations below 1e-6") {
  LevelDiagram levels{200.0, 0.0, {}};
  DriveField drive;
  drive.omega_d = 150.0;
  drive.power_mw = 1.0;
  drive.k_rabi = 40.0;
  drive.k_stark_y = 60.0;
  LaserField laser;
  laser.rabi_y = 5.0;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  const ModelBundle b = make_bundle(levels, drive, laser, shape);
  const Eigen::ArrayXd grid = linspace(-20.0, 20.0, 3);

  IntegrationConfig fine;
  const Spectrum coarse_sp = steady_state_scan(b, grid, fine);
  fine.dt_us = std::stod(coarse_sp.params_echo.at("oracle.dt_us")) / 2.0;
  const Spectrum fine_sp = steady_state_scan(b, grid, fine);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(coarse_sp.intensity[i] - fine_sp.intensity[i]) < 1e-6);
  }
}

TEST_CASE("scan is invariant under a drive phase shift") {
  LevelDiagram levels{200.0, 0.0, {}};
  DriveField drive;
  drive.omega_d = 150.0;
  drive.power_mw = 1.0;
  drive.k_stark_y = 90.0;
  LaserField laser;
  laser.rabi_y = 5.0;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  const ModelBundle b = make_bundle(levels, drive, laser, shape);
  const Eigen::ArrayXd grid = linspace(-10.0, 160.0, 5);

  IntegrationConfig base;
  IntegrationConfig shifted;
  shifted.drive_phase = kPi / 3.0;
  const Spectrum a = steady_state_scan(b, grid, base);
  const Spectrum c = steady_state_scan(b, grid, shifted);
  const double scale = std::max(a.intensity.maxCoeff(), 1e-12);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(a.intensity[i] - c.intensity[i]) / scale < 1e-4);
  }
}

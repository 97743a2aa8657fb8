#include "nvspec/oracle.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "nvspec/parallel.hpp"

namespace nvspec {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr std::complex<double> kMinusI{0.0, -1.0};

// -i[H, rho] + gamma * sum_e D[|0><e|](rho), everything in rad/us.
// With Hermitian H and rho the commutator is H*rho - (H*rho)^dagger.
inline void lindblad_rhs(const Eigen::Matrix3cd& H, const Eigen::Matrix3cd& rho,
                         double gamma_ang, Eigen::Matrix3cd& out) {
  const Eigen::Matrix3cd M = H * rho;
  out.noalias() = kMinusI * (M - M.adjoint());
  const double g2 = 0.5 * gamma_ang;
  out(0, 0) += gamma_ang * (rho(1, 1).real() + rho(2, 2).real());
  out(0, 1) -= g2 * rho(0, 1);
  out(1, 0) -= g2 * rho(1, 0);
  out(0, 2) -= g2 * rho(0, 2);
  out(2, 0) -= g2 * rho(2, 0);
  out(1, 1) -= gamma_ang * rho(1, 1);
  out(2, 2) -= gamma_ang * rho(2, 2);
  out(1, 2) -= gamma_ang * rho(1, 2);
  out(2, 1) -= gamma_ang * rho(2, 1);
}

struct Stepper {
  ModelBundle bundle;
  double gamma_ang = 0.0;
  double drive_phase = 0.0;
  double rabi_d = 0.0, a_x = 0.0, a_y = 0.0;

  explicit Stepper(const ModelBundle& b, double phase)
      : bundle(b),
        gamma_ang(kTwoPi * b.shape.gamma_star),
        drive_phase(phase),
        rabi_d(b.drive.rabi_d()),
        a_x(b.drive.stark_x()),
        a_y(b.drive.stark_y()) {}

  Eigen::Matrix3cd hamiltonian(double t_us) const {
    Eigen::Matrix3cd H = Eigen::Matrix3cd::Zero();
    H(1, 1) = kTwoPi * bundle.levels.omega_x;
    H(2, 2) = kTwoPi * bundle.levels.omega_y;

    const double laser_phase = kTwoPi * bundle.laser.omega_l * t_us;
    const std::complex<double> el(std::cos(laser_phase), std::sin(laser_phase));
    H(0, 1) += kPi * bundle.laser.rabi_x * el;
    H(0, 2) += kPi * bundle.laser.rabi_y * el;

    const double mw_phase = kTwoPi * bundle.drive.omega_d * t_us + drive_phase;
    if (rabi_d != 0.0) {
      // Co-rotating with the x<->y transition (omega_x > omega_y), so a tone
      // at the splitting is resonant.
      const std::complex<double> ed(std::cos(mw_phase), -std::sin(mw_phase));
      H(1, 2) += kPi * rabi_d * ed;
    }
    if (a_x != 0.0 || a_y != 0.0) {
      const double mod = std::cos(mw_phase);
      H(1, 1) += kTwoPi * a_x * mod;
      H(2, 2) += kTwoPi * a_y * mod;
    }
    H(1, 0) = std::conj(H(0, 1));
    H(2, 0) = std::conj(H(0, 2));
    H(2, 1) = std::conj(H(1, 2));
    return H;
  }

  void step(double t_us, double dt, Eigen::Matrix3cd& rho) const {
    Eigen::Matrix3cd k1, k2, k3, k4, tmp;
    const Eigen::Matrix3cd h0 = hamiltonian(t_us);
    lindblad_rhs(h0, rho, gamma_ang, k1);
    const Eigen::Matrix3cd hm = hamiltonian(t_us + 0.5 * dt);
    tmp = rho + (0.5 * dt) * k1;
    lindblad_rhs(hm, tmp, gamma_ang, k2);
    tmp = rho + (0.5 * dt) * k2;
    lindblad_rhs(hm, tmp, gamma_ang, k3);
    const Eigen::Matrix3cd h1 = hamiltonian(t_us + dt);
    tmp = rho + dt * k3;
    lindblad_rhs(h1, tmp, gamma_ang, k4);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

bool drive_active(const ModelBundle& b) {
  return b.drive.omega_d > 0.0 &&
         (b.drive.rabi_d() != 0.0 || b.drive.stark_x() != 0.0 || b.drive.stark_y() != 0.0);
}

double resolve_dt(const ModelBundle& bundle, const Eigen::ArrayXd* grid,
                  const IntegrationConfig& config) {
  const double omega_max = kTwoPi * max_frequency_mhz(bundle, grid);
  const double dt_auto = 1.0 / (100.0 * omega_max);
  const double dt = config.dt_us > 0.0 ? config.dt_us : dt_auto;
  if (dt > 1.0 / (50.0 * omega_max)) {
    std::ostringstream os;
    os << "oracle: dt = " << dt << " us fails the stability rule dt <= "
       << 1.0 / (50.0 * omega_max) << " us for this model; refusing to run";
    throw ValidationError(os.str());
  }
  return dt;
}

}  // namespace

DensityDiagnostics density_diagnostics(const DensityMatrix& rho) {
  DensityDiagnostics d;
  d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
  const Eigen::MatrixXcd sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
  d.min_eigenvalue = solver.eigenvalues().minCoeff();
  return d;
}

double max_frequency_mhz(const ModelBundle& bundle, const Eigen::ArrayXd* grid) {
  double f = 1.0;  // floor keeps the step rule finite for an all-zero model
  f = std::max(f, std::abs(bundle.levels.omega_x));
  f = std::max(f, std::abs(bundle.levels.omega_y));
  f = std::max(f, std::abs(bundle.laser.omega_l));
  if (grid && grid->size() > 0) {
    f = std::max(f, std::abs((*grid)[0]));
    f = std::max(f, std::abs((*grid)[grid->size() - 1]));
  }
  f = std::max(f, bundle.laser.rabi_x);
  f = std::max(f, bundle.laser.rabi_y);
  f = std::max(f, bundle.shape.gamma_star);
  const double rabi_d = bundle.drive.rabi_d();
  const double a_x = bundle.drive.stark_x();
  const double a_y = bundle.drive.stark_y();
  if (rabi_d != 0.0 || a_x != 0.0 || a_y != 0.0) {
    f = std::max(f, std::abs(bundle.drive.omega_d));
    f = std::max(f, rabi_d);
    f = std::max(f, a_x);
    f = std::max(f, a_y);
  }
  return f;
}

Eigen::Matrix3cd build_hamiltonian(const ModelBundle& bundle, double t_us,
                                   double drive_phase) {
  return Stepper(bundle, drive_phase).hamiltonian(t_us);
}

Trajectory integrate(const ModelBundle& bundle, const IntegrationConfig& config,
                     const DensityMatrix& rho0, int sample_stride) {
  if (rho0.rows() != 3 || rho0.cols() != 3) {
    throw ValidationError("integrate: expected a 3x3 density matrix");
  }
  const DensityDiagnostics diag = density_diagnostics(rho0);
  if (diag.hermiticity_error > 1e-10 || diag.trace_error > 1e-8 ||
      diag.min_eigenvalue < -1e-8) {
    throw ValidationError("integrate: rho0 violates density-matrix invariants");
  }
  if (sample_stride < 1) throw ValidationError("integrate: sample_stride must be >= 1");
  if (config.method != "rk4") throw ValidationError("integrate: unknown method " + config.method);

  const double duration = config.t_transient_us + config.t_average_us;
  if (!(duration > 0.0)) throw ValidationError("integrate: duration must be > 0");

  const double dt = resolve_dt(bundle, nullptr, config);
  const long steps = static_cast<long>(std::ceil(duration / dt));

  Stepper stepper(bundle, config.drive_phase);
  Eigen::Matrix3cd rho = rho0;

  Trajectory traj;
  traj.t_us.reserve(steps / sample_stride + 2);
  traj.rho.reserve(steps / sample_stride + 2);
  traj.t_us.push_back(0.0);
  traj.rho.push_back(rho);
  for (long k = 0; k < steps; ++k) {
    stepper.step(k * dt, dt, rho);
    if ((k + 1) % sample_stride == 0 || k + 1 == steps) {
      traj.t_us.push_back((k + 1) * dt);
      traj.rho.push_back(rho);
    }
  }
  return traj;
}

Spectrum steady_state_scan(const ModelBundle& bundle, const Eigen::ArrayXd& grid,
                           const IntegrationConfig& config, Notes* notes) {
  if (grid.size() < 1) throw ValidationError("steady_state_scan: empty grid");
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ValidationError("steady_state_scan: grid must be strictly increasing");
    }
  }
  if (!(bundle.shape.gamma_star > 0.0)) {
    throw ValidationError("steady_state_scan: gamma_star must be > 0 for a steady state");
  }

  const double lifetime = 1.0 / (kTwoPi * bundle.shape.gamma_star);
  const double transient_min = 10.0 * lifetime;
  // Optical coherences relax at half the population rate, so the default
  // settles ten of those slower periods; ten population lifetimes stays the
  // hard floor but leaves ~1e-3 residuals that would trip the flag below.
  double t_transient = config.t_transient_us > 0.0 ? config.t_transient_us
                                                   : 2.0 * transient_min;
  if (t_transient < transient_min) {
    throw ValidationError("steady_state_scan: t_transient below ten lifetimes");
  }

  const double dt = resolve_dt(bundle, &grid, config);
  const bool has_tone = drive_active(bundle);
  const double period = has_tone ? 1.0 / bundle.drive.omega_d : lifetime;
  const double t_average = config.t_average_us > 0.0 ? config.t_average_us
                           : has_tone ? 8.0 * period
                                      : lifetime;
  // Average over an integer number of tone periods, snapped to whole steps.
  const int n_chunks = has_tone ? std::max(2, (int)std::lround(t_average / period)) : 8;
  const long chunk_steps =
      std::max<long>(1, std::lround((has_tone ? period : t_average / n_chunks) / dt));
  const long transient_steps = static_cast<long>(std::ceil(t_transient / dt));

  Stepper stepper(bundle, config.drive_phase);

  Eigen::ArrayXd intensity = Eigen::ArrayXd::Zero(grid.size());
  std::vector<unsigned char> flags(grid.size(), 0);

  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t idx) {
    Stepper local = stepper;
    local.bundle.laser.omega_l = grid[static_cast<Eigen::Index>(idx)];
    Eigen::Matrix3cd rho = Eigen::Matrix3cd::Zero();
    rho(0, 0) = 1.0;

    double t = 0.0;
    for (long k = 0; k < transient_steps; ++k, t += dt) local.step(t, dt, rho);

    auto excited = [&rho]() { return rho(1, 1).real() + rho(2, 2).real(); };
    double total = 0.0;
    double prev_chunk = -1.0, last_chunk = -1.0;
    for (int chunk = 0; chunk < n_chunks; ++chunk) {
      double acc = 0.5 * excited();
      for (long k = 0; k < chunk_steps; ++k, t += dt) {
        local.step(t, dt, rho);
        acc += (k + 1 == chunk_steps) ? 0.5 * excited() : excited();
      }
      const double mean = acc / chunk_steps;
      prev_chunk = last_chunk;
      last_chunk = mean;
      total += mean;
    }
    intensity[static_cast<Eigen::Index>(idx)] = total / n_chunks;
    if (prev_chunk >= 0.0) {
      const double scale = std::max({std::abs(prev_chunk), std::abs(last_chunk), 1e-12});
      if (std::abs(last_chunk - prev_chunk) / scale > 1e-4) {
        flags[idx] = 1;
      }
    }
  });

  if (notes) {
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (flags[i]) {
        std::ostringstream os;
        os << "steady_state_scan: no steady state at omega_l = "
           << grid[static_cast<Eigen::Index>(i)]
           << " MHz (consecutive period averages differ by > 1e-4)";
        notes->warn(os.str());
      }
    }
  }

  Spectrum sp;
  sp.kind = SpectrumKind::PLE;
  sp.axis = grid;
  sp.intensity = intensity;
  append_bundle_echo(bundle, sp.params_echo);
  sp.params_echo["oracle.dt_us"] = echo_num(dt);
  sp.params_echo["oracle.t_transient_us"] = echo_num(t_transient);
  sp.params_echo["oracle.t_average_us"] = echo_num(t_average);
  sp.params_echo["oracle.drive_phase_rad"] = echo_num(config.drive_phase);
  sp.params_echo["oracle.method"] = config.method;
  sp.params_echo["spectrum.kind"] = "ple";
  return sp;
}

}  // namespace nvspec

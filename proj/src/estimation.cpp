#include "nvspec/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "nvspec/bessel.hpp"
#include "nvspec/dressed.hpp"
#include "nvspec/lineshape.hpp"

namespace nvspec {

namespace {

// Unit-height Lorentzian of full width at half maximum fwhm.
double lorentz_unit(double x, double fwhm) {
  const double u = 2.0 * x / fwhm;
  return 1.0 / (1.0 + u * u);
}

// Unnormalized Gaussian-convolved Lorentzian, kernel weights summing to 1.
double voigt_unit(double x, double sigma, double lorentz_fwhm) {
  if (sigma < 1e-9) return lorentz_unit(x, std::max(lorentz_fwhm, 1e-9));
  if (lorentz_fwhm < 1e-9) return std::exp(-0.5 * x * x / (sigma * sigma));
  double h = std::min(sigma, lorentz_fwhm / 2.0) / 10.0;
  int half = static_cast<int>(std::ceil(6.0 * sigma / h));
  if (half > 2000) {
    half = 2000;
    h = 6.0 * sigma / half;
  }
  double acc = 0.0, wsum = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double d = k * h;
    const double w = std::exp(-0.5 * d * d / (sigma * sigma));
    acc += w * lorentz_unit(x - d, lorentz_fwhm);
    wsum += w;
  }
  return acc / wsum;
}

double voigt_total_fwhm(double sigma, double lorentz_fwhm) {
  const double fg = gaussian_fwhm(sigma);
  return 0.5346 * lorentz_fwhm +
         std::sqrt(0.2166 * lorentz_fwhm * lorentz_fwhm + fg * fg);
}

struct WindowData {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

WindowData take_window(const Spectrum& spectrum, double wmin, double wmax) {
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < spectrum.axis.size(); ++i) {
    if (spectrum.axis[i] >= wmin && spectrum.axis[i] <= wmax) {
      xs.push_back(spectrum.axis[i]);
      ys.push_back(spectrum.intensity[i]);
    }
  }
  if (xs.size() < 7) {
    throw ValidationError("fit_peak: need at least 7 samples inside the window");
  }
  WindowData data;
  data.x = Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size());
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size());
  return data;
}

}  // namespace

PeakFit fit_peak(const Spectrum& spectrum, double window_min, double window_max,
                 PeakModel model) {
  const WindowData data = take_window(spectrum, window_min, window_max);
  const Eigen::Index m = data.x.size();

  const double ymax = data.y.maxCoeff();
  const double ymin = data.y.minCoeff();
  const double range = ymax - ymin;
  if (!(range > 1e-12 * std::max(std::abs(ymax), 1.0))) {
    throw ValidationError("fit_peak: window is flat, no peak to fit");
  }

  Eigen::Index peak_idx = 0;  // lowest frequency wins ties
  for (Eigen::Index i = 0; i < m; ++i) {
    if (data.y[i] > data.y[peak_idx]) peak_idx = i;
  }
  if (peak_idx == 0 || peak_idx == m - 1) {
    throw ValidationError("fit_peak: maximum sits on the window edge, no interior peak");
  }

  int modes = 0;
  for (Eigen::Index i = 1; i + 1 < m; ++i) {
    if (data.y[i] > data.y[i - 1] && data.y[i] > data.y[i + 1] &&
        data.y[i] > ymin + 0.5 * range) {
      ++modes;
    }
  }
  if (modes >= 2) {
    throw ValidationError(
        "fit_peak: window contains two maxima above half range; narrow the window to "
        "isolate one peak");
  }

  // Initialization: argmax center, half-max crossings for the width.
  const double c0 = data.x[peak_idx];
  const double b0 = ymin;
  const double a0 = range;
  const double half_level = b0 + 0.5 * a0;
  double left = data.x[0], right = data.x[m - 1];
  for (Eigen::Index i = peak_idx; i >= 1; --i) {
    if (data.y[i - 1] <= half_level) {
      const double t = (half_level - data.y[i - 1]) / (data.y[i] - data.y[i - 1]);
      left = data.x[i - 1] + t * (data.x[i] - data.x[i - 1]);
      break;
    }
  }
  for (Eigen::Index i = peak_idx; i + 1 < m; ++i) {
    if (data.y[i + 1] <= half_level) {
      const double t = (half_level - data.y[i + 1]) / (data.y[i] - data.y[i + 1]);
      right = data.x[i + 1] - t * (data.x[i + 1] - data.x[i]);
      break;
    }
  }
  double fwhm0 = right - left;
  if (!(fwhm0 > 0.0)) fwhm0 = (data.x[m - 1] - data.x[0]) / 4.0;

  ResidualFn residuals;
  Eigen::VectorXd init;
  switch (model) {
    case PeakModel::Gaussian: {
      init = Eigen::VectorXd(4);
      init << c0, fwhm0 / gaussian_fwhm(1.0), a0, b0;
      residuals = [data](const Eigen::VectorXd& p) {
        const double sig = std::abs(p[1]);
        Eigen::VectorXd r(data.x.size());
        for (Eigen::Index i = 0; i < data.x.size(); ++i) {
          const double d = data.x[i] - p[0];
          r[i] = p[3] + p[2] * std::exp(-0.5 * d * d / (sig * sig)) - data.y[i];
        }
        return r;
      };
      break;
    }
    case PeakModel::Lorentzian: {
      init = Eigen::VectorXd(4);
      init << c0, fwhm0, a0, b0;
      residuals = [data](const Eigen::VectorXd& p) {
        const double w = std::abs(p[1]);
        Eigen::VectorXd r(data.x.size());
        for (Eigen::Index i = 0; i < data.x.size(); ++i) {
          r[i] = p[3] + p[2] * lorentz_unit(data.x[i] - p[0], w) - data.y[i];
        }
        return r;
      };
      break;
    }
    case PeakModel::Voigt: {
      init = Eigen::VectorXd(5);
      init << c0, fwhm0 / gaussian_fwhm(1.0) / 1.5, fwhm0 / 2.0, a0, b0;
      residuals = [data](const Eigen::VectorXd& p) {
        const double sig = std::abs(p[1]);
        const double lw = std::abs(p[2]);
        const double peak = voigt_unit(0.0, sig, lw);
        Eigen::VectorXd r(data.x.size());
        for (Eigen::Index i = 0; i < data.x.size(); ++i) {
          r[i] = p[4] + p[3] * voigt_unit(data.x[i] - p[0], sig, lw) / peak - data.y[i];
        }
        return r;
      };
      break;
    }
  }

  LeastSquaresOptions options;
  options.max_iterations = 200;
  const LeastSquaresResult lm = fit_least_squares(residuals, init, options);
  if (!lm.converged) {
    throw ConvergenceError("fit_peak: no convergence within 200 iterations (" + lm.message + ")");
  }

  PeakFit fit;
  fit.model = model;
  fit.center = lm.params[0];
  fit.iterations = lm.iterations;
  fit.residual_norm = std::sqrt(2.0 * lm.cost);
  fit.center_stderr = lm.stderrs[0];
  fit.width_stderr = lm.stderrs[1];
  switch (model) {
    case PeakModel::Gaussian:
      fit.sigma = std::abs(lm.params[1]);
      fit.width = fit.sigma;
      fit.amplitude = lm.params[2];
      fit.baseline = lm.params[3];
      fit.amplitude_stderr = lm.stderrs[2];
      break;
    case PeakModel::Lorentzian:
      fit.lorentz_fwhm = std::abs(lm.params[1]);
      fit.width = fit.lorentz_fwhm;
      fit.amplitude = lm.params[2];
      fit.baseline = lm.params[3];
      fit.amplitude_stderr = lm.stderrs[2];
      break;
    case PeakModel::Voigt:
      fit.sigma = std::abs(lm.params[1]);
      fit.lorentz_fwhm = std::abs(lm.params[2]);
      fit.width = voigt_total_fwhm(fit.sigma, fit.lorentz_fwhm);
      fit.amplitude = lm.params[3];
      fit.baseline = lm.params[4];
      fit.amplitude_stderr = lm.stderrs[3];
      break;
  }
  return fit;
}

SlopeFit fit_splitting_vs_power(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) {
    throw ValidationError("fit_splitting_vs_power: need at least 3 samples");
  }
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [power, splitting] : samples) {
    if (!(power > 0.0)) {
      throw ValidationError("fit_splitting_vs_power: powers must be > 0");
    }
    const double x = std::sqrt(power);
    sxx += x * x;
    sxy += x * splitting;
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.residuals = Eigen::VectorXd(samples.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = samples[i].second - fit.slope * std::sqrt(samples[i].first);
    fit.residuals[static_cast<Eigen::Index>(i)] = r;
    ss += r * r;
  }
  fit.stderr = std::sqrt(ss / static_cast<double>(samples.size() - 1) / sxx);
  return fit;
}

const std::vector<std::string>& SidebandFitResult::parameter_names() {
  static const std::vector<std::string> names = {"k_stark_x", "k_stark_y", "rabi_x",
                                                 "rabi_y", "pl_ratio"};
  return names;
}

double sideband_peak_amplitude(const SidebandPeakId& peak, double power_mw,
                               const SidebandParams& params, const SidebandFixed& fixed) {
  if (!(fixed.omega_d > 0.0)) {
    throw ValidationError("sideband_peak_amplitude: omega_d must be > 0");
  }
  const double sqrt_p = std::sqrt(power_mw);
  const double rabi_d = fixed.k_rabi * sqrt_p;
  // Physical parameters are nonnegative; folding keeps the sign degeneracies
  // of the squared coupling out of the optimizer's way.
  const double a_x = std::abs(params.k_stark_x) * sqrt_p;
  const double a_y = std::abs(params.k_stark_y) * sqrt_p;
  const double rabi_x = std::abs(params.rabi_x);
  const double rabi_y = std::abs(params.rabi_y);
  const double ratio = std::abs(params.pl_ratio);

  const double theta_comb = std::atan2(rabi_d, -fixed.detuning);
  const double c = std::cos(theta_comb / 2);
  const double s = std::sin(theta_comb / 2);
  const StarkAmplitudes amps = stark_amplitudes(a_x, a_y, theta_comb);

  double coupling = 0.0, weight = 0.0;
  if (peak.branch > 0) {
    coupling = rabi_x * c * bessel_jn<double>(peak.n, amps.a_plus / fixed.omega_d) +
               rabi_y * s * bessel_jn<double>(peak.n + 1, amps.a_plus / fixed.omega_d);
    weight = c * c + ratio * s * s;
  } else {
    coupling = rabi_y * c * bessel_jn<double>(peak.n, amps.a_minus / fixed.omega_d) -
               rabi_x * s * bessel_jn<double>(peak.n - 1, amps.a_minus / fixed.omega_d);
    weight = s * s + ratio * c * c;
  }
  return weight * steady_state_population(std::abs(coupling), 0.0, fixed.gamma_star);
}

SidebandFitResult fit_sideband_amplitudes(const std::vector<SidebandDataPoint>& data,
                                          const SidebandFixed& fixed,
                                          std::optional<SidebandParams> init) {
  std::set<std::pair<int, int>> peaks;
  std::set<double> powers;
  for (const SidebandDataPoint& d : data) {
    peaks.insert({d.peak.branch, d.peak.n});
    powers.insert(d.power_mw);
  }
  if (peaks.size() < 6 || powers.size() < 4) {
    throw ValidationError(
        "fit_sideband_amplitudes: need >= 6 tracked peaks across >= 4 powers");
  }

  auto unpack = [](const Eigen::VectorXd& p) {
    SidebandParams sp;
    sp.k_stark_x = p[0];
    sp.k_stark_y = p[1];
    sp.rabi_x = p[2];
    sp.rabi_y = p[3];
    sp.pl_ratio = p[4];
    return sp;
  };
  ResidualFn residuals = [&data, &fixed, unpack](const Eigen::VectorXd& p) {
    const SidebandParams sp = unpack(p);
    Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] =
          sideband_peak_amplitude(data[i].peak, data[i].power_mw, sp, fixed) -
          data[i].amplitude;
    }
    return r;
  };

  // The comb weights oscillate in the modulation slopes, so the landscape has
  // local minima; without a caller-provided start, survey a coarse slope grid
  // with short runs and polish the best one.
  std::vector<Eigen::VectorXd> starts;
  if (init) {
    Eigen::VectorXd p0(5);
    p0 << init->k_stark_x, init->k_stark_y, init->rabi_x, init->rabi_y, init->pl_ratio;
    starts.push_back(p0);
  } else {
    for (double kx : {0.5, 5.0, 25.0}) {
      for (double ky : {0.5, 5.0, 25.0}) {
        Eigen::VectorXd p0(5);
        p0 << kx, ky, 1.0, 1.0, 1.0;
        starts.push_back(p0);
      }
    }
  }

  LeastSquaresOptions survey;
  survey.max_iterations = 120;
  survey.cost_tol = 1e-14;
  Eigen::VectorXd best = starts.front();
  double best_cost = std::numeric_limits<double>::infinity();
  if (starts.size() == 1) {
    best = starts.front();
  } else {
    for (const Eigen::VectorXd& p0 : starts) {
      const LeastSquaresResult probe = fit_least_squares(residuals, p0, survey);
      if (probe.cost < best_cost) {
        best_cost = probe.cost;
        best = probe.params;
      }
    }
  }

  LeastSquaresOptions options;
  options.max_iterations = 4000;
  options.cost_tol = 1e-14;
  const LeastSquaresResult lm = fit_least_squares(residuals, best, options);

  const Eigen::MatrixXd jac = numerical_jacobian(residuals, lm.params);
  const int null_dir = rank_deficient_direction(jac);
  if (null_dir >= 0) {
    throw ConvergenceError("fit_sideband_amplitudes: unidentifiable parameter: " +
                           SidebandFitResult::parameter_names()[null_dir]);
  }
  if (!lm.converged) {
    throw ConvergenceError("fit_sideband_amplitudes: no convergence (" + lm.message + ")");
  }

  SidebandFitResult result;
  SidebandParams fitted = unpack(lm.params);
  fitted.k_stark_x = std::abs(fitted.k_stark_x);
  fitted.k_stark_y = std::abs(fitted.k_stark_y);
  fitted.rabi_x = std::abs(fitted.rabi_x);
  fitted.rabi_y = std::abs(fitted.rabi_y);
  fitted.pl_ratio = std::abs(fitted.pl_ratio);
  result.params = fitted;
  result.stderrs = lm.stderrs;
  result.covariance = lm.covariance;
  const auto dof = std::max<std::size_t>(1, data.size() - 5);
  result.gof = std::sqrt(2.0 * lm.cost / static_cast<double>(dof));
  result.converged = lm.converged;
  result.iterations = lm.iterations;
  return result;
}

double field_from_magnetic_rabi(double rabi_m_mhz, double gyro_mhz_per_mt) {
  if (rabi_m_mhz < 0.0) throw std::domain_error("field_from_magnetic_rabi: rabi must be >= 0");
  if (!(gyro_mhz_per_mt > 0.0)) {
    throw std::domain_error("field_from_magnetic_rabi: gyromagnetic ratio must be > 0");
  }
  return rabi_m_mhz / gyro_mhz_per_mt * 1000.0;  // mT -> uT
}

DipoleEstimate dipole_from_splitting(double splitting_mhz, double field_kv_per_m) {
  if (splitting_mhz < 0.0) {
    throw std::domain_error("dipole_from_splitting: splitting must be >= 0");
  }
  if (!(field_kv_per_m > 0.0)) {
    throw std::domain_error("dipole_from_splitting: field must be > 0");
  }
  DipoleEstimate est;
  est.splitting_mhz = splitting_mhz;
  est.field_kv_per_m = field_kv_per_m;
  est.mu_debye = kPlanckJs * (splitting_mhz * 1e6) / (field_kv_per_m * 1e3) / kDebyeCm;
  return est;
}

DipoleEstimate dipole_with_orientation(double splitting_mhz,
                                       const OrientationSampling& sampling) {
  if (sampling.n_samples < 2) {
    throw ValidationError("dipole_with_orientation: need at least 2 samples");
  }
  const double tilt = sampling.tilt_deg * kPi / 180.0;
  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * kPi);

  std::vector<double> mus;
  mus.reserve(sampling.n_samples);
  for (int i = 0; i < sampling.n_samples; ++i) {
    const double phi = azimuth(rng);
    const double projected = sampling.field_axial_kv_m * std::cos(tilt) +
                             sampling.field_transverse_kv_m * std::sin(tilt) * std::cos(phi);
    if (projected <= 1e-9) continue;  // near-orthogonal geometry, unbounded estimate
    mus.push_back(dipole_from_splitting(splitting_mhz, projected).mu_debye);
  }
  if (mus.size() < 2) {
    throw ConvergenceError("dipole_with_orientation: field nearly orthogonal for all samples");
  }
  double mean = 0.0;
  for (double m : mus) mean += m;
  mean /= static_cast<double>(mus.size());
  double var = 0.0;
  for (double m : mus) var += (m - mean) * (m - mean);
  var /= static_cast<double>(mus.size() - 1);

  DipoleEstimate est;
  est.splitting_mhz = splitting_mhz;
  est.field_kv_per_m = sampling.field_axial_kv_m;
  est.mu_debye = mean;
  est.uncertainty_debye = std::sqrt(var);
  return est;
}

DipoleGeometry dipole_geometry(const DipoleVector& v) {
  if (!v.allFinite()) throw std::domain_error("dipole_geometry: vector must be finite");
  DipoleGeometry g;
  g.magnitude = v.norm();
  g.parallel = v.z();
  g.perpendicular = std::hypot(v.x(), v.y());
  if (g.magnitude > 0.0) {
    const double c = std::clamp(v.z() / g.magnitude, -1.0, 1.0);
    g.angle_deg = std::acos(c) * 180.0 / kPi;
  }
  return g;
}

double pair_angle_deg(const DipoleVector& a, const DipoleVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw std::domain_error("pair_angle_deg: zero vector has no direction");
  }
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

}  // namespace nvspec

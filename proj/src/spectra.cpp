#include "nvspec/spectra.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "nvspec/lineshape.hpp"
#include "nvspec/parallel.hpp"

namespace nvspec {

namespace {

void check_grid(const Eigen::ArrayXd& grid, const char* where) {
  if (grid.size() < 2) throw ValidationError(std::string(where) + ": grid needs >= 2 points");
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ValidationError(std::string(where) + ": grid must be strictly increasing");
    }
  }
}

}  // namespace

void append_bundle_echo(const ModelBundle& b, std::map<std::string, std::string>& echo) {
  echo["levels.omega_x_mhz"] = echo_num(b.levels.omega_x);
  echo["levels.omega_y_mhz"] = echo_num(b.levels.omega_y);
  if (b.levels.omega_m) echo["levels.omega_m_mhz"] = echo_num(*b.levels.omega_m);
  echo["drive.omega_d_mhz"] = echo_num(b.drive.omega_d);
  echo["drive.power_mw"] = echo_num(b.drive.power_mw);
  echo["drive.k_rabi_mhz_per_sqrt_mw"] = echo_num(b.drive.k_rabi);
  echo["drive.k_stark_x_mhz_per_sqrt_mw"] = echo_num(b.drive.k_stark_x);
  echo["drive.k_stark_y_mhz_per_sqrt_mw"] = echo_num(b.drive.k_stark_y);
  echo["drive.k_magnetic_mhz_per_sqrt_mw"] = echo_num(b.drive.k_magnetic);
  echo["laser.omega_l_mhz"] = echo_num(b.laser.omega_l);
  echo["laser.rabi_x_mhz"] = echo_num(b.laser.rabi_x);
  echo["laser.rabi_y_mhz"] = echo_num(b.laser.rabi_y);
  echo["lineshape.gamma_star_mhz"] = echo_num(b.shape.gamma_star);
  echo["lineshape.sigma_x_mhz"] = echo_num(b.shape.sigma_x);
  echo["lineshape.sigma_y_mhz"] = echo_num(b.shape.sigma_y);
}

namespace {

struct Line {
  double center = 0.0;
  double rabi_w = 0.0;
  double sigma = 0.0;
  double pl_weight = 0.0;
};

void add_line(const Line& line, double gamma_star, const Eigen::ArrayXd& grid,
              Eigen::ArrayXd& intensity) {
  if (line.rabi_w == 0.0 || line.pl_weight == 0.0) return;
  PeakShape peak;
  peak.center = line.center;
  peak.rabi_w = line.rabi_w;
  peak.gamma_star = gamma_star;
  peak.sigma = line.sigma;
  peak.amplitude_scale = line.pl_weight;
  intensity += voigt_profile(peak, grid, nullptr);
}

void warn_overlaps(const std::vector<Line>& lines, double gamma_star, Notes* notes) {
  if (!notes) return;
  int reported = 0;
  for (std::size_t i = 0; i < lines.size() && reported < 4; ++i) {
    for (std::size_t j = i + 1; j < lines.size() && reported < 4; ++j) {
      if (lines[i].rabi_w <= gamma_star || lines[j].rabi_w <= gamma_star) continue;
      const double fi = lorentzian_fwhm(lines[i].rabi_w, gamma_star);
      const double fj = lorentzian_fwhm(lines[j].rabi_w, gamma_star);
      if (std::abs(lines[i].center - lines[j].center) < 3.0 * std::max(fi, fj)) {
        std::ostringstream os;
        os << "simulate_ple: strongly driven resonances at " << lines[i].center << " and "
           << lines[j].center << " MHz overlap; single-resonance treatment degrades";
        notes->warn(os.str());
        ++reported;
      }
    }
  }
}

// Edge-renormalized discrete Gaussian smoothing on a uniform grid.
Eigen::ArrayXd convolve_gaussian(const Eigen::ArrayXd& grid, const Eigen::ArrayXd& values,
                                 double sigma, const char* where) {
  if (sigma <= 0.0) return values;
  const double h = grid[1] - grid[0];
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double step = grid[i] - grid[i - 1];
    if (std::abs(step - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw ValidationError(std::string(where) +
                            ": Gaussian smoothing needs a uniform grid");
    }
  }
  const int half = static_cast<int>(std::ceil(6.0 * sigma / h));
  Eigen::ArrayXd kernel(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    kernel[k + half] = std::exp(-0.5 * (k * h) * (k * h) / (sigma * sigma));
  }
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    double acc = 0.0;
    double wsum = 0.0;
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(values.size() - 1, i + half);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const double w = kernel[j - i + half];
      acc += w * values[j];
      wsum += w;
    }
    out[i] = acc / wsum;
  }
  return out;
}

}  // namespace

void AntennaResponse::validate() const {
  if (frequency.size() == 0) throw ValidationError("antenna: table is empty");
  if (frequency.size() != power_dbm.size()) {
    throw ValidationError("antenna: column lengths differ");
  }
  for (Eigen::Index i = 0; i < frequency.size(); ++i) {
    if (!std::isfinite(frequency[i]) || !std::isfinite(power_dbm[i])) {
      throw ValidationError("antenna: table contains non-finite values");
    }
    if (i > 0 && !(frequency[i] > frequency[i - 1])) {
      throw ValidationError("antenna: frequencies must be strictly increasing");
    }
  }
}

bool AntennaResponse::covers(double f_mhz) const {
  return frequency.size() > 0 && f_mhz >= frequency[0] &&
         f_mhz <= frequency[frequency.size() - 1];
}

double AntennaResponse::delivered_dbm(double f_mhz) const {
  if (!covers(f_mhz)) {
    std::ostringstream os;
    os << "antenna: query " << f_mhz << " MHz outside table ["
       << (frequency.size() ? frequency[0] : 0.0) << ", "
       << (frequency.size() ? frequency[frequency.size() - 1] : 0.0)
       << "]; extrapolation refused";
    throw ValidationError(os.str());
  }
  const double* begin = frequency.data();
  const double* end = begin + frequency.size();
  const double* it = std::upper_bound(begin, end, f_mhz);
  if (it == begin) return power_dbm[0];
  if (it == end) return power_dbm[frequency.size() - 1];
  const Eigen::Index hi = it - begin;
  const Eigen::Index lo = hi - 1;
  const double t = (f_mhz - frequency[lo]) / (frequency[hi] - frequency[lo]);
  return power_dbm[lo] + t * (power_dbm[hi] - power_dbm[lo]);
}

double AntennaResponse::delivered_mw(double f_mhz) const {
  return std::pow(10.0, delivered_dbm(f_mhz) / 10.0);
}

Spectrum simulate_ple(const ModelBundle& bundle, const Eigen::ArrayXd& grid,
                      const PleOptions& options, Notes* notes) {
  check_grid(grid, "simulate_ple");
  {
    ValidationReport report =
        validate_model(bundle.levels, bundle.drive, bundle.laser, bundle.shape);
    if (!report.empty()) {
      throw ValidationError("simulate_ple: invalid model:\n" + format_report(report),
                            std::move(report));
    }
  }

  const double rabi_d = bundle.drive.rabi_d();
  const double a_x = bundle.drive.stark_x();
  const double a_y = bundle.drive.stark_y();
  const double r = options.pl_ratio;
  const LineshapeParams& shape = bundle.shape;

  std::vector<Line> lines;
  int resolved_n_max = 0;
  if (rabi_d == 0.0 && a_x == 0.0 && a_y == 0.0) {
    // Undriven limit: the two bare lines, whatever the nominal tone frequency.
    lines.push_back({bundle.levels.omega_x, bundle.laser.rabi_x, shape.sigma_x, 1.0});
    lines.push_back({bundle.levels.omega_y, bundle.laser.rabi_y, shape.sigma_y, r});
  } else {
    const double detuning = bundle.drive.omega_d - bundle.levels.splitting();
    const double theta_comb = std::atan2(rabi_d, -detuning);
    const StarkAmplitudes amps = stark_amplitudes(a_x, a_y, theta_comb);
    resolved_n_max = options.n_max.value_or(
        default_n_max(amps.a_plus, amps.a_minus, bundle.drive.omega_d));
    const SidebandLadder ladder =
        sideband_ladder(bundle.levels, bundle.laser, bundle.drive, resolved_n_max, notes);
    for (const SidebandEntry& e : ladder.entries) {
      Line line;
      line.center = e.center;
      line.rabi_w = std::abs(e.eff_rabi);
      line.sigma = std::sqrt(e.weight_x * shape.sigma_x * shape.sigma_x +
                             e.weight_y * shape.sigma_y * shape.sigma_y);
      line.pl_weight = e.weight_x + r * e.weight_y;
      lines.push_back(line);
    }
  }

  warn_overlaps(lines, shape.gamma_star, notes);

  Spectrum sp;
  sp.kind = SpectrumKind::PLE;
  sp.axis = grid;
  sp.intensity = Eigen::ArrayXd::Zero(grid.size());
  for (const Line& line : lines) add_line(line, shape.gamma_star, grid, sp.intensity);

  append_bundle_echo(bundle, sp.params_echo);
  sp.params_echo["ple.pl_ratio"] = echo_num(r);
  sp.params_echo["ple.n_max"] = std::to_string(resolved_n_max);
  sp.params_echo["spectrum.kind"] = "ple";
  return sp;
}

std::vector<Spectrum> mw_frequency_sweep(const ModelBundle& bundle,
                                         const std::vector<double>& omega_d_list,
                                         const Eigen::ArrayXd& grid,
                                         const PleOptions& options,
                                         const AntennaResponse* antenna, Notes* notes) {
  for (double w : omega_d_list) {
    if (!(w > 0.0)) throw ValidationError("mw_frequency_sweep: every omega_d must be > 0");
  }
  if (antenna) antenna->validate();
  std::vector<Spectrum> out(omega_d_list.size());
  for (std::size_t i = 0; i < omega_d_list.size(); ++i) {
    ModelBundle member = bundle;
    member.drive.omega_d = omega_d_list[i];
    if (antenna) member.drive.power_mw = antenna->delivered_mw(omega_d_list[i]);
    out[i] = simulate_ple(member, grid, options, notes);
    out[i].params_echo["sweep.index"] = std::to_string(i);
  }
  return out;
}

std::vector<Spectrum> power_sweep_ple(const ModelBundle& bundle,
                                      const std::vector<double>& powers_mw,
                                      const Eigen::ArrayXd& grid,
                                      const PleOptions& options, Notes* notes) {
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    if (powers_mw[i] < 0.0) throw ValidationError("power_sweep_ple: powers must be >= 0");
    if (i > 0 && powers_mw[i] < powers_mw[i - 1]) {
      throw ValidationError("power_sweep_ple: powers must be ascending");
    }
  }
  std::vector<Spectrum> out(powers_mw.size());
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    ModelBundle member = bundle;
    member.drive.power_mw = powers_mw[i];
    out[i] = simulate_ple(member, grid, options, notes);
    out[i].params_echo["sweep.index"] = std::to_string(i);
  }
  return out;
}

namespace {

std::vector<OdmrTransition> resolve_transitions(const OdmrModel& odmr) {
  std::vector<OdmrTransition> out = odmr.transitions;
  if (out.empty() && odmr.levels.omega_m) out.push_back({"m", *odmr.levels.omega_m});
  if (out.empty()) {
    throw ValidationError(
        "odmr: omega_m missing; provide levels.omega_m or an explicit transition list");
  }
  return out;
}

struct OdmrComponent {
  char anchor;  // 'x' or 'y'
  int branch;   // +1 or -1
};

constexpr OdmrComponent kOdmrComponents[4] = {
    {'x', +1}, {'x', -1}, {'y', +1}, {'y', -1}};

// Dressed transition frequency and branch-projected coupling of one component
// at drive frequency omega_d with couplings evaluated at delivered power.
void component_at(const OdmrModel& odmr, double omega_m, double rabi_d, double rabi_m,
                  double omega_d, const OdmrComponent& comp, double* freq, double* coupling) {
  const double detuning = omega_d - odmr.levels.splitting();
  const double theta = std::atan2(rabi_d, detuning);
  const double rgen = generalized_rabi(rabi_d, detuning);
  const double s = std::sin(theta / 2);
  const double c = std::cos(theta / 2);
  const double quasi = comp.anchor == 'x'
                           ? odmr.levels.omega_x + detuning / 2 + comp.branch * rgen / 2
                           : odmr.levels.omega_y - detuning / 2 + comp.branch * rgen / 2;
  *freq = std::abs(quasi - omega_m);
  // The magnetic tone couples |Em> to the branch through the orbital component
  // matching the anchor: |<b|Ex>| for x-anchored terms, |<b|Ey>| for y-anchored.
  const double proj = comp.anchor == 'x' ? (comp.branch > 0 ? s : c)
                                         : (comp.branch > 0 ? c : s);
  *coupling = rabi_m * proj;
}

}  // namespace

Spectrum simulate_odmr(const OdmrModel& odmr, const DriveField& drive,
                       const Eigen::ArrayXd& omega_d_grid, const AntennaResponse* antenna,
                       Notes* notes) {
  check_grid(omega_d_grid, "simulate_odmr");
  if (odmr.gamma_star < 0 || odmr.inhom_width < 0) {
    throw ValidationError("odmr: gamma_star and inhom_width must be >= 0");
  }
  const std::vector<OdmrTransition> transitions = resolve_transitions(odmr);
  if (antenna) {
    antenna->validate();
    if (!antenna->covers(omega_d_grid[0]) ||
        !antenna->covers(omega_d_grid[omega_d_grid.size() - 1])) {
      throw ValidationError("simulate_odmr: antenna table does not cover the scan grid");
    }
  }

  Eigen::ArrayXd raw = Eigen::ArrayXd::Zero(omega_d_grid.size());
  parallel_for(static_cast<std::size_t>(omega_d_grid.size()), [&](std::size_t i) {
    const double omega_d = omega_d_grid[static_cast<Eigen::Index>(i)];
    const double power = antenna ? antenna->delivered_mw(omega_d) : drive.power_mw;
    const double rabi_d = coupling_from_power(drive.k_rabi, power);
    const double rabi_m = coupling_from_power(odmr.k_magnetic, power);
    double acc = 0.0;
    for (const OdmrTransition& tr : transitions) {
      for (const OdmrComponent& comp : kOdmrComponents) {
        double freq = 0.0, coupling = 0.0;
        component_at(odmr, tr.omega_m, rabi_d, rabi_m, omega_d, comp, &freq, &coupling);
        acc += steady_state_population(coupling, omega_d - freq, odmr.gamma_star);
      }
    }
    raw[static_cast<Eigen::Index>(i)] = acc;
  });

  Spectrum sp;
  sp.kind = SpectrumKind::ODMR;
  sp.axis = omega_d_grid;
  sp.intensity = convolve_gaussian(omega_d_grid, raw, odmr.inhom_width, "simulate_odmr");

  sp.params_echo["levels.omega_x_mhz"] = echo_num(odmr.levels.omega_x);
  sp.params_echo["levels.omega_y_mhz"] = echo_num(odmr.levels.omega_y);
  sp.params_echo["drive.omega_d_mhz"] = echo_num(drive.omega_d);
  sp.params_echo["drive.power_mw"] = echo_num(drive.power_mw);
  sp.params_echo["drive.k_rabi_mhz_per_sqrt_mw"] = echo_num(drive.k_rabi);
  sp.params_echo["drive.k_magnetic_mhz_per_sqrt_mw"] = echo_num(odmr.k_magnetic);
  sp.params_echo["odmr.gamma_star_mhz"] = echo_num(odmr.gamma_star);
  sp.params_echo["odmr.inhom_width_mhz"] = echo_num(odmr.inhom_width);
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      if (i) os << ",";
      os << transitions[i].label << ":" << echo_num(transitions[i].omega_m);
    }
    sp.params_echo["odmr.transitions"] = os.str();
  }
  sp.params_echo["spectrum.kind"] = "odmr";
  if (notes && odmr.inhom_width == 0.0) {
    notes->warn("simulate_odmr: inhom_width = 0, emitting unsmoothed resonances");
  }
  return sp;
}

std::vector<OdmrResonance> odmr_resonances(const OdmrModel& odmr, const DriveField& drive,
                                           double omega_d_min, double omega_d_max,
                                           const AntennaResponse* antenna) {
  if (!(omega_d_max > omega_d_min)) {
    throw ValidationError("odmr_resonances: empty search interval");
  }
  const std::vector<OdmrTransition> transitions = resolve_transitions(odmr);
  if (antenna) antenna->validate();

  auto mismatch = [&](const OdmrTransition& tr, const OdmrComponent& comp, double omega_d,
                      double* coupling) {
    const double power = antenna ? antenna->delivered_mw(omega_d) : drive.power_mw;
    const double rabi_d = coupling_from_power(drive.k_rabi, power);
    const double rabi_m = coupling_from_power(odmr.k_magnetic, power);
    double freq = 0.0;
    component_at(odmr, tr.omega_m, rabi_d, rabi_m, omega_d, comp, &freq, coupling);
    return omega_d - freq;
  };

  std::vector<OdmrResonance> roots;
  const int samples = 4000;
  const double step = (omega_d_max - omega_d_min) / samples;
  for (const OdmrTransition& tr : transitions) {
    for (const OdmrComponent& comp : kOdmrComponents) {
      double unused = 0.0;
      double prev = mismatch(tr, comp, omega_d_min, &unused);
      for (int k = 1; k <= samples; ++k) {
        const double w = omega_d_min + k * step;
        const double cur = mismatch(tr, comp, w, &unused);
        if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0)) {
          double lo = w - step, hi = w;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = mismatch(tr, comp, mid, &unused);
            if ((f <= 0.0) == (prev <= 0.0)) lo = mid; else hi = mid;
          }
          OdmrResonance res;
          res.label = tr.label;
          res.anchor = comp.anchor;
          res.branch = comp.branch;
          res.omega_d = 0.5 * (lo + hi);
          mismatch(tr, comp, res.omega_d, &res.coupling);
          roots.push_back(res);
        }
        prev = cur;
      }
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](const OdmrResonance& a, const OdmrResonance& b) { return a.omega_d < b.omega_d; });
  return roots;
}

}  // namespace nvspec

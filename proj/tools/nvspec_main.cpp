// Command-line front end: scan orchestration, data ingestion and result
// serialization. Numerical work lives in the library; this file only wires
// configs, tables and output files together.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nvspec/estimation.hpp"
#include "nvspec/io.hpp"
#include "nvspec/lineshape.hpp"
#include "nvspec/oracle.hpp"
#include "nvspec/spectra.hpp"

namespace {

using namespace nvspec;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string antenna_path;
  std::string table_path;
  bool force = false;
};

void print_warnings(const Notes& notes) {
  for (const std::string& w : notes.warnings) std::cerr << "warning: " << w << "\n";
}

std::map<std::string, std::string> merged_echo(const RunConfig& cfg,
                                               const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> echo = cfg.echo;
  for (const auto& [k, v] : extra) echo[k] = v;
  return echo;
}

void write_spectrum_with_sidecar(const std::string& path, const Spectrum& sp,
                                 const RunConfig& cfg, bool force) {
  write_spectrum_csv(path, sp, force);
  write_sidecar(path + ".params.ini", merged_echo(cfg, sp.params_echo), force);
}

std::string member_path(const std::string& stem, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%03zu.csv", index);
  return stem + buf;
}

int run_simulate_ple(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  Notes notes;
  const Spectrum sp = simulate_ple(cfg.bundle, make_grid(cfg.scan), cfg.ple, &notes);
  print_warnings(notes);
  write_spectrum_with_sidecar(args.out_path, sp, cfg, args.force);
  return kExitOk;
}

int run_simulate_odmr(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  AntennaResponse antenna;
  const AntennaResponse* antenna_ptr = nullptr;
  if (!args.antenna_path.empty()) {
    antenna = load_antenna_table(args.antenna_path);
    antenna_ptr = &antenna;
  }
  Notes notes;
  const Spectrum sp =
      simulate_odmr(cfg.odmr, cfg.bundle.drive, make_grid(cfg.scan), antenna_ptr, &notes);
  print_warnings(notes);
  write_spectrum_with_sidecar(args.out_path, sp, cfg, args.force);
  return kExitOk;
}

int run_sweep_power(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  if (cfg.scan.powers_mw.empty()) {
    throw ValidationError("sweep-power: scan.powers_mw is empty");
  }
  Notes notes;
  const std::vector<Spectrum> sweep =
      power_sweep_ple(cfg.bundle, cfg.scan.powers_mw, make_grid(cfg.scan), cfg.ple, &notes);
  print_warnings(notes);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    write_spectrum_with_sidecar(member_path(args.out_path, i), sweep[i], cfg, args.force);
  }
  return kExitOk;
}

int run_sweep_mw(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  if (cfg.scan.omega_d_list.empty()) {
    throw ValidationError("sweep-mw: scan.omega_d_list_mhz is empty");
  }
  AntennaResponse antenna;
  const AntennaResponse* antenna_ptr = nullptr;
  if (!args.antenna_path.empty()) {
    antenna = load_antenna_table(args.antenna_path);
    antenna_ptr = &antenna;
  }
  Notes notes;
  const std::vector<Spectrum> sweep = mw_frequency_sweep(
      cfg.bundle, cfg.scan.omega_d_list, make_grid(cfg.scan), cfg.ple, antenna_ptr, &notes);
  print_warnings(notes);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    write_spectrum_with_sidecar(member_path(args.out_path, i), sweep[i], cfg, args.force);
  }
  return kExitOk;
}

int run_fit_peaks(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  const Spectrum sp = load_spectrum_table(args.table_path);
  const PeakModel model = peak_model_from_name(cfg.fit.model);
  const PeakFit fit = fit_peak(sp, cfg.fit.window_min, cfg.fit.window_max, model);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"model", cfg.fit.model},
      {"center_mhz", format_sig9(fit.center)},
      {"center_stderr_mhz", format_sig9(fit.center_stderr)},
      {"width_mhz", format_sig9(fit.width)},
      {"width_stderr_mhz", format_sig9(fit.width_stderr)},
      {"sigma_mhz", format_sig9(fit.sigma)},
      {"lorentz_fwhm_mhz", format_sig9(fit.lorentz_fwhm)},
      {"amplitude", format_sig9(fit.amplitude)},
      {"amplitude_stderr", format_sig9(fit.amplitude_stderr)},
      {"baseline", format_sig9(fit.baseline)},
      {"residual_norm", format_sig9(fit.residual_norm)},
      {"iterations", std::to_string(fit.iterations)},
  };
  write_report_csv(args.out_path, merged_echo(cfg, {}), rows, args.force);
  return kExitOk;
}

int run_fit_power_series(const CommonArgs& args) {
  const RunConfig cfg =
      args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
  const auto samples = load_power_splitting_table(args.table_path);
  const SlopeFit fit = fit_splitting_vs_power(samples);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"slope_mhz_per_sqrt_mw", format_sig9(fit.slope)},
      {"slope_stderr_mhz_per_sqrt_mw", format_sig9(fit.stderr)},
      {"samples", std::to_string(samples.size())},
  };
  for (Eigen::Index i = 0; i < fit.residuals.size(); ++i) {
    rows.push_back({"residual_" + std::to_string(i), format_sig9(fit.residuals[i])});
  }
  write_report_csv(args.out_path, merged_echo(cfg, {}), rows, args.force);
  return kExitOk;
}

int run_fit_sidebands(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  const std::vector<SidebandDataPoint> data = load_sideband_table(args.table_path);
  SidebandFixed fixed;
  fixed.k_rabi = cfg.bundle.drive.k_rabi;
  fixed.omega_d = cfg.bundle.drive.omega_d;
  fixed.detuning = cfg.bundle.drive.omega_d - cfg.bundle.levels.splitting();
  fixed.gamma_star = cfg.bundle.shape.gamma_star;
  const SidebandFitResult fit = fit_sideband_amplitudes(data, fixed);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"k_stark_x_mhz_per_sqrt_mw", format_sig9(fit.params.k_stark_x)},
      {"k_stark_y_mhz_per_sqrt_mw", format_sig9(fit.params.k_stark_y)},
      {"rabi_x_mhz", format_sig9(fit.params.rabi_x)},
      {"rabi_y_mhz", format_sig9(fit.params.rabi_y)},
      {"pl_ratio", format_sig9(fit.params.pl_ratio)},
      {"gof", format_sig9(fit.gof)},
      {"iterations", std::to_string(fit.iterations)},
  };
  const auto& names = SidebandFitResult::parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.push_back({names[i] + "_stderr", format_sig9(fit.stderrs[i])});
  }
  write_report_csv(args.out_path, merged_echo(cfg, {}), rows, args.force);
  return kExitOk;
}

int run_estimate_dipole(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  const EstimateConfig& est = cfg.estimate;
  std::vector<std::pair<std::string, std::string>> rows;
  if (est.rabi_m_mhz > 0.0) {
    rows.push_back({"transverse_field_ut",
                    format_sig9(field_from_magnetic_rabi(est.rabi_m_mhz))});
  }
  if (est.splitting_mhz > 0.0) {
    const double field = est.field_axial_kv_m;
    const DipoleEstimate point = dipole_from_splitting(est.splitting_mhz, field);
    rows.push_back({"mu_debye", format_sig9(point.mu_debye)});
    if (est.n_samples > 0) {
      if (!cfg.seed_set) {
        throw ValidationError("estimate-dipole: orientation sampling needs run.seed");
      }
      OrientationSampling sampling;
      sampling.tilt_deg = est.tilt_deg;
      sampling.field_axial_kv_m = est.field_axial_kv_m;
      sampling.field_transverse_kv_m = est.field_transverse_kv_m;
      sampling.n_samples = est.n_samples;
      sampling.seed = cfg.seed;
      const DipoleEstimate mc = dipole_with_orientation(est.splitting_mhz, sampling);
      rows.push_back({"mu_sampled_debye", format_sig9(mc.mu_debye)});
      rows.push_back({"mu_uncertainty_debye", format_sig9(mc.uncertainty_debye)});
    }
  }
  if (rows.empty()) {
    throw ValidationError(
        "estimate-dipole: set estimate.splitting_mhz and/or estimate.rabi_m_mhz");
  }
  write_report_csv(args.out_path, merged_echo(cfg, {}), rows, args.force);
  return kExitOk;
}

int run_dipole_geometry(const CommonArgs& args) {
  const auto table = load_dipole_table(args.table_path);
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [label, vec] : table) {
    const DipoleGeometry g = dipole_geometry(vec);
    rows.push_back({label + ".magnitude_debye", format_sig9(g.magnitude)});
    rows.push_back({label + ".parallel_debye", format_sig9(g.parallel)});
    rows.push_back({label + ".perpendicular_debye", format_sig9(g.perpendicular)});
    rows.push_back({label + ".angle_to_axis_deg",
                    g.angle_deg ? format_sig9(*g.angle_deg) : "undefined"});
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = i + 1; j < table.size(); ++j) {
      if (table[i].second.norm() == 0.0 || table[j].second.norm() == 0.0) continue;
      rows.push_back({"angle." + table[i].first + "." + table[j].first + "_deg",
                      format_sig9(pair_angle_deg(table[i].second, table[j].second))});
    }
  }
  write_report_csv(args.out_path, {}, rows, args.force);
  return kExitOk;
}

int run_oracle_validate(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path);
  const Eigen::ArrayXd grid = make_grid(cfg.scan);
  Notes notes;

  // Homogeneous closed-form prediction: excited population summed over the
  // comb entries (no emission weighting, matching the integrator observable).
  Eigen::ArrayXd predicted = Eigen::ArrayXd::Zero(grid.size());
  const double gamma = cfg.bundle.shape.gamma_star;
  const double rabi_d = cfg.bundle.drive.rabi_d();
  const double a_x = cfg.bundle.drive.stark_x();
  const double a_y = cfg.bundle.drive.stark_y();
  if (rabi_d == 0.0 && a_x == 0.0 && a_y == 0.0) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      predicted[i] =
          steady_state_population(cfg.bundle.laser.rabi_x,
                                  grid[i] - cfg.bundle.levels.omega_x, gamma) +
          steady_state_population(cfg.bundle.laser.rabi_y,
                                  grid[i] - cfg.bundle.levels.omega_y, gamma);
    }
  } else {
    const double detuning = cfg.bundle.drive.omega_d - cfg.bundle.levels.splitting();
    const StarkAmplitudes amps =
        stark_amplitudes(a_x, a_y, std::atan2(rabi_d, -detuning));
    const int n_max = cfg.ple.n_max.value_or(
        default_n_max(amps.a_plus, amps.a_minus, cfg.bundle.drive.omega_d));
    const SidebandLadder ladder =
        sideband_ladder(cfg.bundle.levels, cfg.bundle.laser, cfg.bundle.drive, n_max, &notes);
    for (const SidebandEntry& e : ladder.entries) {
      if (e.eff_rabi == 0.0) continue;
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        predicted[i] +=
            steady_state_population(std::abs(e.eff_rabi), grid[i] - e.center, gamma);
      }
    }
  }

  const Spectrum oracle = steady_state_scan(cfg.bundle, grid, cfg.oracle, &notes);
  print_warnings(notes);

  auto maxima = [&](const Eigen::ArrayXd& y) {
    std::vector<std::pair<double, double>> peaks;  // position, height
    const double floor = 1e-3 * y.maxCoeff();
    for (Eigen::Index i = 1; i + 1 < y.size(); ++i) {
      if (y[i] > y[i - 1] && y[i] > y[i + 1] && y[i] > floor) {
        const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        const double pos =
            grid[i] + (denom == 0.0 ? 0.0 : 0.5 * (y[i - 1] - y[i + 1]) / denom *
                                                (grid[1] - grid[0]));
        peaks.push_back({pos, y[i]});
      }
    }
    return peaks;
  };
  const auto predicted_peaks = maxima(predicted);
  const auto oracle_peaks = maxima(oracle.intensity);

  std::vector<std::pair<std::string, std::string>> rows;
  double max_pos_err = 0.0, max_amp_err = 0.0;
  int matched = 0;
  for (std::size_t i = 0; i < predicted_peaks.size(); ++i) {
    if (oracle_peaks.empty()) break;
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t j = 0; j < oracle_peaks.size(); ++j) {
      const double d = std::abs(oracle_peaks[j].first - predicted_peaks[i].first);
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    ++matched;
    const double amp_err =
        std::abs(oracle_peaks[best].second / predicted_peaks[i].second - 1.0);
    max_pos_err = std::max(max_pos_err, best_dist);
    max_amp_err = std::max(max_amp_err, amp_err);
    const std::string tag = "peak_" + std::to_string(i);
    rows.push_back({tag + ".predicted_mhz", format_sig9(predicted_peaks[i].first)});
    rows.push_back({tag + ".oracle_mhz", format_sig9(oracle_peaks[best].first)});
    rows.push_back({tag + ".position_error_mhz", format_sig9(best_dist)});
    rows.push_back({tag + ".amplitude_rel_error", format_sig9(amp_err)});
  }
  rows.insert(rows.begin(),
              {{"matched_peaks", std::to_string(matched)},
               {"max_position_error_mhz", format_sig9(max_pos_err)},
               {"max_amplitude_rel_error", format_sig9(max_amp_err)}});
  write_report_csv(args.out_path, merged_echo(cfg, oracle.params_echo), rows, args.force);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microwave-dressed excited-state spectroscopy toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_table) {
    if (needs_config) {
      cmd->add_option("--config", args.config_path, "configuration file")->required();
    } else {
      cmd->add_option("--config", args.config_path, "configuration file");
    }
    if (needs_table) {
      cmd->add_option("--table", args.table_path, "input data table")->required();
    }
    cmd->add_option("--out", args.out_path, "output path")->required();
    cmd->add_flag("--force", args.force, "overwrite existing outputs");
    return cmd;
  };

  CLI::App* ple = add_common(app.add_subcommand("simulate-ple", "forward optical spectrum"),
                             true, false);
  CLI::App* odmr = add_common(
      app.add_subcommand("simulate-odmr", "forward mw-resonance spectrum"), true, false);
  odmr->add_option("--antenna", args.antenna_path, "delivered-power table");
  CLI::App* sweep_p = add_common(
      app.add_subcommand("sweep-power", "optical spectra across drive powers"), true, false);
  CLI::App* sweep_f = add_common(
      app.add_subcommand("sweep-mw", "optical spectra across drive frequencies"), true, false);
  sweep_f->add_option("--antenna", args.antenna_path, "delivered-power table");
  CLI::App* fpeaks =
      add_common(app.add_subcommand("fit-peaks", "fit one windowed peak"), true, true);
  CLI::App* fpower = add_common(
      app.add_subcommand("fit-power-series", "splitting vs sqrt-power slope"), false, true);
  CLI::App* fside = add_common(
      app.add_subcommand("fit-sidebands", "shared-parameter amplitude fit"), true, true);
  CLI::App* edip = add_common(
      app.add_subcommand("estimate-dipole", "dipole moment from splitting and field"), true,
      false);
  CLI::App* dgeo = add_common(
      app.add_subcommand("dipole-geometry", "vector decomposition and pair angles"), false,
      true);
  CLI::App* oval = add_common(
      app.add_subcommand("oracle-validate", "integrator vs closed-form comparison"), true,
      false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (ple->parsed()) return run_simulate_ple(args);
    if (odmr->parsed()) return run_simulate_odmr(args);
    if (sweep_p->parsed()) return run_sweep_power(args);
    if (sweep_f->parsed()) return run_sweep_mw(args);
    if (fpeaks->parsed()) return run_fit_peaks(args);
    if (fpower->parsed()) return run_fit_power_series(args);
    if (fside->parsed()) return run_fit_sidebands(args);
    if (edip->parsed()) return run_estimate_dipole(args);
    if (dgeo->parsed()) return run_dipole_geometry(args);
    if (oval->parsed()) return run_oracle_validate(args);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitOk;
}

// Forward synthesis of full excitation spectra: single scans, drive-frequency
// and drive-power sweeps, and the optically detected mw-resonance model with
// an optional antenna power-response correction.
#ifndef NVSPEC_SPECTRA_HPP
#define NVSPEC_SPECTRA_HPP

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nvspec/dressed.hpp"
#include "nvspec/model.hpp"

namespace nvspec {

enum class SpectrumKind { PLE, ODMR };

struct Spectrum {
  Eigen::ArrayXd axis;       // MHz, strictly increasing
  Eigen::ArrayXd intensity;  // arbitrary units, >= 0
  std::map<std::string, std::string> params_echo;
  SpectrumKind kind = SpectrumKind::PLE;
};

// Delivered mw power vs frequency, interpolated linearly in dB. Queries
// outside the table are an error: extrapolating a resonant response would
// fabricate structure.
struct AntennaResponse {
  Eigen::ArrayXd frequency;  // MHz, strictly increasing
  Eigen::ArrayXd power_dbm;
  std::string interpolation = "linear_db";

  void validate() const;
  bool covers(double f_mhz) const;
  double delivered_dbm(double f_mhz) const;
  double delivered_mw(double f_mhz) const;
};

struct OdmrTransition {
  std::string label;     // e1, e2, a1, ...
  double omega_m = 0.0;  // MHz
};

struct OdmrModel {
  LevelDiagram levels;
  double k_magnetic = 0.0;    // MHz/sqrt(mW)
  double gamma_star = 2.3;    // MHz, repolarization-limited rate
  double inhom_width = 48.0;  // MHz, Gaussian std applied on the drive axis
  std::vector<OdmrTransition> transitions;  // falls back to levels.omega_m if empty
};

struct PleOptions {
  double pl_ratio = 1.6;         // emission weight of Ey character vs Ex character
  std::optional<int> n_max;      // comb truncation override
};

// Mirrors every bundle field into config-style echo keys.
void append_bundle_echo(const ModelBundle& bundle,
                        std::map<std::string, std::string>& echo);

Spectrum simulate_ple(const ModelBundle& bundle, const Eigen::ArrayXd& grid,
                      const PleOptions& options = {}, Notes* notes = nullptr);

std::vector<Spectrum> mw_frequency_sweep(const ModelBundle& bundle,
                                         const std::vector<double>& omega_d_list,
                                         const Eigen::ArrayXd& grid,
                                         const PleOptions& options = {},
                                         const AntennaResponse* antenna = nullptr,
                                         Notes* notes = nullptr);

std::vector<Spectrum> power_sweep_ple(const ModelBundle& bundle,
                                      const std::vector<double>& powers_mw,
                                      const Eigen::ArrayXd& grid,
                                      const PleOptions& options = {},
                                      Notes* notes = nullptr);

// Population transfer out of the bright doublet as the shared mw tone scans.
// Per grid point the dressed transition frequencies are evaluated at that
// point's drive frequency (and delivered power), which captures the implicit
// self-consistency of the resonance condition without root solving.
Spectrum simulate_odmr(const OdmrModel& odmr, const DriveField& drive,
                       const Eigen::ArrayXd& omega_d_grid,
                       const AntennaResponse* antenna = nullptr,
                       Notes* notes = nullptr);

// Predicted mw resonance positions (values of the drive frequency) for one
// transition, found by bisection of the per-point matching condition. Used by
// tests and the validation command; simulate_odmr itself never root-solves.
struct OdmrResonance {
  std::string label;
  char anchor = 'y';   // 'x' or 'y'
  int branch = +1;     // +1 or -1
  double omega_d = 0;  // MHz
  double coupling = 0; // MHz, branch-projected magnetic coupling at the root
};

std::vector<OdmrResonance> odmr_resonances(const OdmrModel& odmr, const DriveField& drive,
                                           double omega_d_min, double omega_d_max,
                                           const AntennaResponse* antenna = nullptr);

}  // namespace nvspec

#endif  // NVSPEC_SPECTRA_HPP

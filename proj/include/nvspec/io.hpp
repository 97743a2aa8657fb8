// Configuration parsing, table ingestion and bit-stable serialization. This
// is the only module that touches the filesystem, and the only place where
// dBm and linear mW meet.
#ifndef NVSPEC_IO_HPP
#define NVSPEC_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nvspec/estimation.hpp"
#include "nvspec/model.hpp"
#include "nvspec/oracle.hpp"
#include "nvspec/spectra.hpp"

namespace nvspec {

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

struct ScanConfig {
  double grid_min = 0.0;             // MHz
  double grid_max = 0.0;             // MHz
  double grid_step = 0.0;            // MHz
  std::vector<double> powers_mw;     // power-sweep members
  std::vector<double> omega_d_list;  // MHz, mw-frequency-sweep members
};

struct FitConfig {
  std::string model = "gaussian";  // gaussian | lorentzian | voigt
  double window_min = 0.0;         // MHz
  double window_max = 0.0;         // MHz
  std::vector<SidebandPeakId> tracked_peaks;
};

struct EstimateConfig {
  double splitting_mhz = 0.0;
  double field_axial_kv_m = 0.0;
  double field_transverse_kv_m = 0.0;
  double tilt_deg = 25.0;
  int n_samples = 0;  // 0 disables the orientation sampling
  double rabi_m_mhz = 0.0;
};

struct RunConfig {
  ModelBundle bundle;
  OdmrModel odmr;
  PleOptions ple;
  IntegrationConfig oracle;
  ScanConfig scan;
  FitConfig fit;
  EstimateConfig estimate;
  std::uint64_t seed = 0;
  bool seed_set = false;
  // Canonical resolved key/value echo of everything that was set.
  std::map<std::string, std::string> echo;
};

// Sectioned key=value text with mandatory unit suffixes in key names.
RunConfig load_config(const std::string& path);
RunConfig load_config_text(const std::string& text, const std::string& origin);

// Delimited two-column tables with a header row.
AntennaResponse load_antenna_table(const std::string& path);
Spectrum load_spectrum_table(const std::string& path);

// Two numeric columns (power_mw, splitting_mhz), unsorted allowed.
std::vector<std::pair<double, double>> load_power_splitting_table(const std::string& path);

// Four columns: branch (+/-), n, power_mw, amplitude.
std::vector<SidebandDataPoint> load_sideband_table(const std::string& path);

// Four columns: label, x_debye, y_debye, z_debye.
std::vector<std::pair<std::string, DipoleVector>> load_dipole_table(const std::string& path);

Eigen::ArrayXd make_grid(const ScanConfig& scan);

PeakModel peak_model_from_name(const std::string& name);

// '# key=value' echo lines, a column header, then 'frequency_mhz,intensity'
// rows with 9 significant digits. Refuses to overwrite unless force is set.
void write_spectrum_csv(const std::string& path, const Spectrum& spectrum, bool force);

// Generic key,value report with the same echo header.
void write_report_csv(const std::string& path,
                      const std::map<std::string, std::string>& echo,
                      const std::vector<std::pair<std::string, std::string>>& rows,
                      bool force);

// Re-loadable config mirror of the echo map (the parameter sidecar).
void write_sidecar(const std::string& path, const std::map<std::string, std::string>& echo,
                   bool force);

std::string format_sig9(double v);

}  // namespace nvspec

#endif  // NVSPEC_IO_HPP

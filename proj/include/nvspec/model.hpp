// Core domain types and unit conventions shared by every other module.
//
// Conventions: all frequencies, couplings, rates and widths are ordinary
// frequencies in MHz; powers are linear mW; times are microseconds. The
// factor 2*pi enters only inside the time-domain integrator, where absolute
// time matters. The ground level is the energy reference (omega_0 = 0).
#ifndef NVSPEC_MODEL_HPP
#define NVSPEC_MODEL_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvspec {

inline constexpr double kPi = 3.14159265358979323846;

// Physical constants used by the estimation module.
inline constexpr double kPlanckJs = 6.62607015e-34;        // J*s
inline constexpr double kDebyeCm = 3.33564e-30;            // C*m per Debye
inline constexpr double kGyromagneticMHzPerMT = 28.024;    // electron, g ~ 2.0023

// Collector for non-fatal diagnostics (resolution warnings, RWA overlap, ...).
// Operations that can warn take an optional pointer; a null pointer drops the
// messages.
struct Notes {
  std::vector<std::string> warnings;
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

inline void note_warn(Notes* notes, std::string msg) {
  if (notes) notes->warn(std::move(msg));
}

struct Violation {
  std::string field;
  double value = 0.0;
  std::string constraint;
};

using ValidationReport = std::vector<Violation>;

std::string format_report(const ValidationReport& report);

// Full-precision decimal rendering used for parameter echoes; parses back to
// the identical double.
std::string echo_num(double v);

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, ValidationReport report = {})
      : std::runtime_error(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Eigenfrequencies of the working levels relative to the ground reference.
// omega_x >= omega_y by labeling convention (positive transverse splitting).
// omega_m is the optional magnetic excited level used by the ODMR model.
struct LevelDiagram {
  double omega_x = 0.0;  // MHz
  double omega_y = 0.0;  // MHz
  std::optional<double> omega_m;  // MHz

  double splitting() const { return omega_x - omega_y; }
};

// Microwave tone. Couplings derive from the power through sqrt-law slopes.
struct DriveField {
  double omega_d = 0.0;     // MHz
  double power_mw = 0.0;    // mW, linear
  double k_rabi = 0.0;      // MHz/sqrt(mW), slope of the transition-dipole Rabi coupling
  double k_stark_x = 0.0;   // MHz/sqrt(mW), slope of the diagonal modulation on |Ex>
  double k_stark_y = 0.0;   // MHz/sqrt(mW), slope of the diagonal modulation on |Ey>
  double k_magnetic = 0.0;  // MHz/sqrt(mW), slope of the magnetic coupling

  double rabi_d() const;
  double stark_x() const;
  double stark_y() const;
  double rabi_m() const;
  DriveField with_power(double new_power_mw) const {
    DriveField d = *this;
    d.power_mw = new_power_mw;
    return d;
  }
};

// Optical probe tone. omega_l is relative to the same optical reference as
// the level diagram.
struct LaserField {
  double omega_l = 0.0;  // MHz
  double rabi_x = 0.0;   // MHz
  double rabi_y = 0.0;   // MHz
};

// Homogeneous decay rate plus per-line inhomogeneous Gaussian widths.
struct LineshapeParams {
  double gamma_star = 15.0;  // MHz
  double sigma_x = 0.0;      // MHz, Gaussian std of the x line
  double sigma_y = 0.0;      // MHz, Gaussian std of the y line
};

struct ModelBundle {
  LevelDiagram levels;
  DriveField drive;
  LaserField laser;
  LineshapeParams shape;
};

// slope * sqrt(power). Negative inputs are rejected with std::domain_error.
double coupling_from_power(double slope, double power_mw);

// Checks every type invariant and reports all violations, not just the first.
ValidationReport validate_model(const LevelDiagram& levels, const DriveField& drive,
                                const LaserField& laser, const LineshapeParams& shape);

// Returns the bundle iff validate_model comes back empty; throws
// ValidationError carrying the full report otherwise.
ModelBundle make_bundle(const LevelDiagram& levels, const DriveField& drive,
                        const LaserField& laser, const LineshapeParams& shape);

}  // namespace nvspec

#endif  // NVSPEC_MODEL_HPP

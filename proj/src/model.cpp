#include "nvspec/model.hpp"

#include <cstdio>
#include <sstream>

namespace nvspec {

std::string echo_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  for (const auto& v : report) {
    os << v.field << " = " << v.value << ": " << v.constraint << "\n";
  }
  return os.str();
}

double coupling_from_power(double slope, double power_mw) {
  if (slope < 0.0) throw std::domain_error("coupling_from_power: slope must be >= 0");
  if (power_mw < 0.0) throw std::domain_error("coupling_from_power: power must be >= 0");
  return slope * std::sqrt(power_mw);
}

double DriveField::rabi_d() const { return coupling_from_power(k_rabi, power_mw); }
double DriveField::stark_x() const { return coupling_from_power(k_stark_x, power_mw); }
double DriveField::stark_y() const { return coupling_from_power(k_stark_y, power_mw); }
double DriveField::rabi_m() const { return coupling_from_power(k_magnetic, power_mw); }

namespace {

void require_nonneg(ValidationReport& report, const char* field, double value) {
  if (!(value >= 0.0)) report.push_back({field, value, "must be >= 0"});
}

void require_finite(ValidationReport& report, const char* field, double value) {
  if (!std::isfinite(value)) report.push_back({field, value, "must be finite"});
}

}  // namespace

ValidationReport validate_model(const LevelDiagram& levels, const DriveField& drive,
                                const LaserField& laser, const LineshapeParams& shape) {
  ValidationReport report;

  require_finite(report, "levels.omega_x", levels.omega_x);
  require_finite(report, "levels.omega_y", levels.omega_y);
  if (levels.omega_m) require_finite(report, "levels.omega_m", *levels.omega_m);
  if (levels.omega_x < levels.omega_y) {
    report.push_back({"levels.omega_x", levels.omega_x,
                      "must be >= omega_y (positive transverse splitting labeling)"});
  }

  require_finite(report, "drive.omega_d", drive.omega_d);
  require_nonneg(report, "drive.power_mw", drive.power_mw);
  require_nonneg(report, "drive.k_rabi", drive.k_rabi);
  require_nonneg(report, "drive.k_stark_x", drive.k_stark_x);
  require_nonneg(report, "drive.k_stark_y", drive.k_stark_y);
  require_nonneg(report, "drive.k_magnetic", drive.k_magnetic);

  require_finite(report, "laser.omega_l", laser.omega_l);
  require_nonneg(report, "laser.rabi_x", laser.rabi_x);
  require_nonneg(report, "laser.rabi_y", laser.rabi_y);

  require_nonneg(report, "shape.gamma_star", shape.gamma_star);
  require_nonneg(report, "shape.sigma_x", shape.sigma_x);
  require_nonneg(report, "shape.sigma_y", shape.sigma_y);

  return report;
}

ModelBundle make_bundle(const LevelDiagram& levels, const DriveField& drive,
                        const LaserField& laser, const LineshapeParams& shape) {
  ValidationReport report = validate_model(levels, drive, laser, shape);
  if (!report.empty()) {
    throw ValidationError("invalid model:\n" + format_report(report), std::move(report));
  }
  return ModelBundle{levels, drive, laser, shape};
}

}  // namespace nvspec

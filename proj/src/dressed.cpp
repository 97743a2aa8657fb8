#include "nvspec/dressed.hpp"

#include <algorithm>
#include <sstream>

#include "nvspec/bessel.hpp"

namespace nvspec {

DressedFrame mixing(double rabi_d, double detuning) {
  if (rabi_d < 0.0) throw std::domain_error("mixing: rabi_d must be >= 0");
  DressedFrame frame;
  frame.detuning = detuning;
  frame.theta = std::atan2(rabi_d, detuning);
  frame.omega_plus = 0.5 * generalized_rabi(rabi_d, detuning);
  frame.omega_minus = -frame.omega_plus;
  return frame;
}

OpticalResonances optical_resonances(const LevelDiagram& levels, double rabi_d,
                                     double omega_d) {
  const double detuning = omega_d - levels.splitting();
  const DressedFrame frame = mixing(rabi_d, detuning);
  const double x_anchor = 0.5 * (levels.omega_x + levels.omega_y + omega_d);
  const double y_anchor = 0.5 * (levels.omega_x + levels.omega_y - omega_d);
  OpticalResonances res;
  res.x_plus = x_anchor + frame.omega_plus;
  res.x_minus = x_anchor + frame.omega_minus;
  res.y_plus = y_anchor + frame.omega_plus;
  res.y_minus = y_anchor + frame.omega_minus;
  return res;
}

StarkAmplitudes stark_amplitudes(double a_x, double a_y, double theta) {
  const double c2 = std::cos(theta / 2) * std::cos(theta / 2);
  const double s2 = std::sin(theta / 2) * std::sin(theta / 2);
  StarkAmplitudes amps;
  amps.a_plus = a_x * c2 + a_y * s2;
  amps.a_minus = a_x * s2 + a_y * c2;
  amps.a_cross = (a_y - a_x) * std::sin(theta) / 2;
  return amps;
}

int default_truncation(double index) {
  if (index < 0.0) index = -index;
  int n = std::max(2, static_cast<int>(std::ceil(index)) + 5);
  // Enlarge until the retained squared weights cover all but 1e-9. The fixed
  // +5 margin alone falls short of that once the index grows past a few.
  for (int guard = 0; guard < 64; ++guard) {
    const Eigen::ArrayXd j = bessel_j_array<double>(n, index);
    double sum = j[0] * j[0];
    for (int k = 1; k <= n; ++k) sum += 2.0 * j[k] * j[k];
    if (sum >= 1.0 - 1e-9) break;
    n += 2;
  }
  return n;
}

int default_n_max(double a_plus, double a_minus, double omega_d) {
  if (omega_d <= 0.0) throw std::domain_error("default_n_max: omega_d must be > 0");
  return default_truncation(std::max(std::abs(a_plus), std::abs(a_minus)) / omega_d);
}

namespace {

// J_n for any integer n from a table of orders 0..top.
double jn_from_table(const Eigen::ArrayXd& table, int n) {
  int m = n < 0 ? -n : n;
  double sign = (n < 0 && m % 2 != 0) ? -1.0 : 1.0;
  return sign * table[m];
}

}  // namespace

SidebandLadder sideband_ladder(const LevelDiagram& levels, const LaserField& laser,
                               const DriveField& drive, int n_max, Notes* notes) {
  if (n_max < 0) throw std::domain_error("sideband_ladder: n_max must be >= 0");
  if (!(drive.omega_d > 0.0)) {
    throw std::domain_error("sideband_ladder: omega_d must be > 0 (comb spacing)");
  }

  const double rabi_d = drive.rabi_d();
  const double a_x = drive.stark_x();
  const double a_y = drive.stark_y();
  const double detuning = drive.omega_d - levels.splitting();

  SidebandLadder ladder;
  ladder.frame = mixing(rabi_d, detuning);

  // The comb amplitude formulas below take the angle complementary to
  // DressedFrame::theta: it vanishes in the far red-detuned limit, where the
  // + branch is pure |Ex> and its comb carries the full x coupling at n = 0.
  const double theta_comb = std::atan2(rabi_d, -detuning);
  const double c = std::cos(theta_comb / 2);
  const double s = std::sin(theta_comb / 2);

  const StarkAmplitudes amps = stark_amplitudes(a_x, a_y, theta_comb);
  ladder.a_plus = amps.a_plus;
  ladder.a_minus = amps.a_minus;
  ladder.a_cross = amps.a_cross;

  const double rabi_gen = generalized_rabi(rabi_d, detuning);
  ladder.validity_ratio = rabi_gen > 0.0 ? std::abs(amps.a_cross) / rabi_gen : 0.0;
  if (ladder.validity_ratio > 0.2) {
    std::ostringstream os;
    os << "sideband_ladder: neglected cross modulation is large (ratio "
       << ladder.validity_ratio << " > 0.2); comb amplitudes lose accuracy";
    note_warn(notes, os.str());
  }

  const Eigen::ArrayXd j_plus = bessel_j_array<double>(n_max + 1, amps.a_plus / drive.omega_d);
  const Eigen::ArrayXd j_minus = bessel_j_array<double>(n_max + 1, amps.a_minus / drive.omega_d);

  const double x_anchor = 0.5 * (levels.omega_x + levels.omega_y + drive.omega_d);
  const double y_anchor = 0.5 * (levels.omega_x + levels.omega_y - drive.omega_d);

  ladder.entries.reserve(2 * (2 * n_max + 1));
  for (int n = -n_max; n <= n_max; ++n) {
    SidebandEntry up;
    up.branch = +1;
    up.n = n;
    up.center = x_anchor + n * drive.omega_d + ladder.frame.omega_plus;
    up.eff_rabi = laser.rabi_x * c * jn_from_table(j_plus, n) +
                  laser.rabi_y * s * jn_from_table(j_plus, n + 1);
    up.weight_x = c * c;
    up.weight_y = s * s;
    ladder.entries.push_back(up);

    SidebandEntry dn;
    dn.branch = -1;
    dn.n = n;
    dn.center = y_anchor + n * drive.omega_d + ladder.frame.omega_minus;
    dn.eff_rabi = laser.rabi_y * c * jn_from_table(j_minus, n) -
                  laser.rabi_x * s * jn_from_table(j_minus, n - 1);
    dn.weight_x = s * s;
    dn.weight_y = c * c;
    ladder.entries.push_back(dn);
  }
  return ladder;
}

double protected_shift(double eps_perp, double rabi_d) {
  if (!(rabi_d > 0.0)) {
    throw std::domain_error("protected_shift: rabi_d must be > 0");
  }
  // Stable form of (sqrt(rabi^2 + 4 eps^2) - rabi)/2.
  const double root = std::hypot(rabi_d, 2.0 * eps_perp);
  return 2.0 * eps_perp * eps_perp / (root + rabi_d);
}

}  // namespace nvspec

#include <doctest.h>

#include <cmath>
#include <random>

#include "nvspec/dressed.hpp"

using namespace nvspec;

TEST_CASE("mixing on resonance") {
  const DressedFrame f = mixing(100.0, 0.0);
  CHECK(f.theta == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(f.omega_plus == doctest::Approx(50.0).epsilon(1e-14));
  CHECK(f.omega_minus == doctest::Approx(-50.0).epsilon(1e-14));
}

TEST_CASE("mixing on the 3-4-5 triangle") {
  const DressedFrame f = mixing(3.0, 4.0);
  CHECK(f.omega_plus == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(f.theta == doctest::Approx(0.6435011087932844).epsilon(1e-12));
}

TEST_CASE("mixing in the undriven limit") {
  const DressedFrame f = mixing(0.0, 7.0);
  CHECK(f.theta == 0.0);
  CHECK(f.omega_plus == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(f.ey_fraction_plus() == doctest::Approx(1.0));  // upper state is pure |Ey>
  CHECK_THROWS_AS(mixing(-1.0, 0.0), std::domain_error);
}

TEST_CASE("mixing angle normalization holds to 1e-12") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3000.0, 3000.0);
  for (int i = 0; i < 100; ++i) {
    const double rabi = std::abs(u(rng));
    const double det = u(rng);
    const DressedFrame f = mixing(rabi, det);
    const double s = std::sin(f.theta / 2), c = std::cos(f.theta / 2);
    CHECK(s * s + c * c == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.omega_plus - f.omega_minus >= rabi * (1.0 - 1e-12));
    if (det != 0.0) CHECK(std::tan(f.theta) == doctest::Approx(rabi / det).epsilon(1e-9));
  }
}

TEST_CASE("four optical resonances in the undriven limit are the bare lines") {
  LevelDiagram levels{2900.0, 0.0, {}};
  const OpticalResonances r = optical_resonances(levels, 0.0, 2900.0);
  CHECK(r.x_plus == doctest::Approx(2900.0));
  CHECK(r.x_minus == doctest::Approx(2900.0));
  CHECK(r.y_plus == doctest::Approx(0.0).scale(1.0));
  CHECK(r.y_minus == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("resonant drive splits both pairs by the coupling") {
  LevelDiagram levels{2900.0, 0.0, {}};
  const OpticalResonances r = optical_resonances(levels, 273.2, 2900.0);
  CHECK(r.y_plus == doctest::Approx(136.6).epsilon(1e-12));
  CHECK(r.y_minus == doctest::Approx(-136.6).epsilon(1e-12));
  CHECK(r.x_plus == doctest::Approx(2900.0 + 136.6).epsilon(1e-12));
  CHECK(r.x_minus == doctest::Approx(2900.0 - 136.6).epsilon(1e-12));
}

TEST_CASE("cross-pair separation equals the drive frequency for any config") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 4000.0);
  for (int i = 0; i < 100; ++i) {
    const double wy = u(rng), wx = wy + u(rng), wd = u(rng) + 1.0, rabi = u(rng) / 4;
    const OpticalResonances r = optical_resonances({wx, wy, {}}, rabi, wd);
    CHECK(r.x_plus - r.y_plus == doctest::Approx(wd).epsilon(1e-12));
    CHECK(r.x_minus - r.y_minus == doctest::Approx(wd).epsilon(1e-12));
    const double rgen = std::hypot(rabi, wd - (wx - wy));
    CHECK(r.x_plus - r.x_minus == doctest::Approx(rgen).epsilon(1e-12));
    CHECK(r.y_plus - r.y_minus == doctest::Approx(rgen).epsilon(1e-12));
  }
}

TEST_CASE("diagonal modulation amplitudes") {
  SUBCASE("symmetric case is angle independent") {
    for (double theta : {0.0, 0.3, 1.2, kPi}) {
      const StarkAmplitudes a = stark_amplitudes(5.0, 5.0, theta);
      CHECK(a.a_plus == doctest::Approx(5.0).epsilon(1e-14));
      CHECK(a.a_minus == doctest::Approx(5.0).epsilon(1e-14));
      CHECK(a.a_cross == doctest::Approx(0.0).scale(1.0));
    }
  }
  SUBCASE("pure branch at zero angle") {
    const StarkAmplitudes a = stark_amplitudes(1.0, 0.0, 0.0);
    CHECK(a.a_plus == doctest::Approx(1.0));
    CHECK(a.a_minus == doctest::Approx(0.0).scale(1.0));
    CHECK(a.a_cross == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("equal mixing averages the two slopes") {
    const StarkAmplitudes a = stark_amplitudes(11.7, 19.4, kPi / 2);
    CHECK(a.a_plus == doctest::Approx(15.55).epsilon(1e-12));
    CHECK(a.a_minus == doctest::Approx(15.55).epsilon(1e-12));
    CHECK(a.a_cross == doctest::Approx(3.85).epsilon(1e-12));
  }
  SUBCASE("sum rule a_plus + a_minus = a_x + a_y") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 50; ++i) {
      const double ax = u(rng), ay = u(rng), theta = u(rng) / 100.0 * kPi;
      const StarkAmplitudes a = stark_amplitudes(ax, ay, theta);
      CHECK(a.a_plus + a.a_minus == doctest::Approx(ax + ay).epsilon(1e-12));
    }
  }
}

namespace {

ModelBundle comb_bundle(double wx, double wd, double rabi_slope, double kx, double ky,
                        double ox, double oy, double power = 1.0) {
  LevelDiagram levels{wx, 0.0, {}};
  DriveField drive;
  drive.omega_d = wd;
  drive.power_mw = power;
  drive.k_rabi = rabi_slope;
  drive.k_stark_x = kx;
  drive.k_stark_y = ky;
  LaserField laser;
  laser.rabi_x = ox;
  laser.rabi_y = oy;
  return make_bundle(levels, drive, laser, {});
}

}  // namespace

TEST_CASE("ladder with no diagonal modulation reduces to the four resonances") {
  const ModelBundle b = comb_bundle(2900.0, 2400.0, 50.0, 0.0, 0.0, 2.0, 3.0);
  const SidebandLadder ladder =
      sideband_ladder(b.levels, b.laser, b.drive, 4);
  const OpticalResonances res = optical_resonances(b.levels, b.drive.rabi_d(), b.drive.omega_d);

  // Collect the nonzero-coupling entries; they must be exactly the four
  // resonance centers with the branch-projected couplings.
  const double theta = ladder.frame.theta;
  const double s = std::sin(theta / 2), c = std::cos(theta / 2);
  struct Expect {
    double center, coupling;
  };
  const Expect expect[4] = {
      {res.x_plus, 2.0 * s},   // x-type line through the + branch
      {res.x_minus, 2.0 * c},  // x-type line through the - branch
      {res.y_plus, 3.0 * c},   // y-type line through the + branch
      {res.y_minus, 3.0 * s},  // y-type line through the - branch
  };
  int found = 0;
  for (const SidebandEntry& e : ladder.entries) {
    if (std::abs(e.eff_rabi) < 1e-14) continue;
    ++found;
    bool matched = false;
    for (const Expect& ex : expect) {
      if (std::abs(e.center - ex.center) < 1e-9 &&
          std::abs(std::abs(e.eff_rabi) - ex.coupling) < 1e-12) {
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }
  CHECK(found == 4);
}

TEST_CASE("comb couplings at unit modulation index") {
  // Far red detuning makes the + branch pure |Ex>; modulation index 1 there.
  const double wd = 470.0;
  const ModelBundle b = comb_bundle(3370.0, wd, 0.0, 470.0, 0.0, 1.0, 0.0);
  const SidebandLadder ladder = sideband_ladder(b.levels, b.laser, b.drive, 3);
  CHECK(ladder.a_plus == doctest::Approx(470.0).epsilon(1e-12));
  for (const SidebandEntry& e : ladder.entries) {
    if (e.branch != +1) continue;
    if (e.n == 0) CHECK(e.eff_rabi == doctest::Approx(0.7651976865579666).epsilon(1e-10));
    if (e.n == 1) CHECK(e.eff_rabi == doctest::Approx(0.4400505857449335).epsilon(1e-10));
    if (e.n == -1) CHECK(e.eff_rabi == doctest::Approx(-0.4400505857449335).epsilon(1e-10));
  }
}

TEST_CASE("comb coupling power sums recover the optical couplings") {
  // Undriven transition dipole, red-detuned anchor: weights obey
  // sum_n W(+,n)^2 = rabi_x^2 and sum_n W(-,n)^2 = rabi_y^2.
  const ModelBundle b = comb_bundle(2900.0, 470.0, 0.0, 300.0, 500.0, 2.0, 3.0);
  const StarkAmplitudes amps = stark_amplitudes(b.drive.stark_x(), b.drive.stark_y(), 0.0);
  const int n_max = default_n_max(amps.a_plus, amps.a_minus, b.drive.omega_d);
  const SidebandLadder ladder = sideband_ladder(b.levels, b.laser, b.drive, n_max);
  double sum_plus = 0.0, sum_minus = 0.0;
  for (const SidebandEntry& e : ladder.entries) {
    (e.branch > 0 ? sum_plus : sum_minus) += e.eff_rabi * e.eff_rabi;
  }
  CHECK(sum_plus == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(sum_minus == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("same-branch comb spacing is the drive frequency") {
  const ModelBundle b = comb_bundle(2900.0, 470.0, 10.7, 11.7, 19.4, 1.0, 1.0, 900.0);
  const SidebandLadder ladder = sideband_ladder(b.levels, b.laser, b.drive, 3);
  for (const SidebandEntry& a : ladder.entries) {
    for (const SidebandEntry& c : ladder.entries) {
      if (a.branch == c.branch && c.n == a.n + 1) {
        CHECK(c.center - a.center == doctest::Approx(470.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("high-power strained regime keeps the neglected cross term small") {
  // Strained doublet driven far below its splitting at 33 dBm-scale power.
  const ModelBundle b = comb_bundle(2900.0, 470.0, 10.7, 11.7, 19.4, 1.0, 1.0, 1995.3);
  Notes notes;
  const SidebandLadder ladder = sideband_ladder(b.levels, b.laser, b.drive, 8, &notes);
  CHECK(ladder.validity_ratio < 0.2);
  CHECK(notes.warnings.empty());
}

TEST_CASE("ladder input guards") {
  const ModelBundle b = comb_bundle(2900.0, 470.0, 10.7, 11.7, 19.4, 1.0, 1.0);
  DriveField zero_freq = b.drive;
  zero_freq.omega_d = 0.0;
  CHECK_THROWS_AS(sideband_ladder(b.levels, b.laser, zero_freq, 3), std::domain_error);
  CHECK_THROWS_AS(sideband_ladder(b.levels, b.laser, b.drive, -1), std::domain_error);
}

TEST_CASE("truncation default covers the modulation index") {
  CHECK(default_n_max(0.0, 0.0, 470.0) == 5);
  CHECK(default_n_max(470.0, 235.0, 470.0) == 6);
  // Floor is ceil(index) + 5 and at least 2; grows if the sum rule needs it.
  CHECK(default_truncation(0.0) >= 2);
  for (double index : {0.4, 1.7, 4.3, 8.9}) {
    CHECK(default_truncation(index) >= static_cast<int>(std::ceil(index)) + 5);
  }
}

TEST_CASE("protected shift of the driven resonance") {
  CHECK(protected_shift(0.0, 557.0) == 0.0);
  // Exact value for eps = 10, coupling 557; quadratic form eps^2 / coupling.
  const double exact = (std::hypot(557.0, 20.0) - 557.0) / 2.0;
  CHECK(protected_shift(10.0, 557.0) == doctest::Approx(exact).epsilon(1e-10));
  CHECK(protected_shift(10.0, 557.0) == doctest::Approx(0.17947).epsilon(5e-4));
  CHECK_THROWS_AS(protected_shift(1.0, 0.0), std::domain_error);
}

TEST_CASE("protected shift is quadratic at leading order") {
  const double r1 = protected_shift(0.01, 557.0);
  const double r2 = protected_shift(0.02, 557.0);
  CHECK(r2 / r1 == doctest::Approx(4.0).epsilon(1e-6));
  // shift / eps^2 tends to 1 / coupling
  CHECK(protected_shift(1e-4, 557.0) / 1e-8 == doctest::Approx(1.0 / 557.0).epsilon(1e-6));
}

TEST_CASE("mixing is continuous away from the zero-coupling axis") {
  const double eps = 1e-9;
  for (double det : {-100.0, -1.0, 1.0, 100.0}) {
    for (double rabi : {0.5, 5.0, 500.0}) {
      const DressedFrame base = mixing(rabi, det);
      CHECK(mixing(rabi + eps, det).theta == doctest::Approx(base.theta).epsilon(1e-6));
      CHECK(mixing(rabi, det + eps).theta == doctest::Approx(base.theta).epsilon(1e-6));
    }
  }
  // The conventional jump at zero coupling when the detuning changes sign.
  CHECK(mixing(0.0, 1.0).theta == doctest::Approx(0.0).scale(1.0));
  CHECK(mixing(0.0, -1.0).theta == doctest::Approx(kPi));
}

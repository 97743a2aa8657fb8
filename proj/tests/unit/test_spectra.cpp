#include <doctest.h>

#include <cmath>

#include "nvspec/lineshape.hpp"
#include "nvspec/spectra.hpp"

using namespace nvspec;

namespace {

Eigen::ArrayXd linspace(double lo, double hi, int n) {
  Eigen::ArrayXd g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

ModelBundle fig_bundle(double power_mw) {
  LevelDiagram levels{2900.0, 0.0, {}};
  DriveField drive;
  drive.omega_d = 2900.0;
  drive.power_mw = power_mw;
  drive.k_rabi = 15.8;
  LaserField laser;
  laser.rabi_x = 8.16;
  laser.rabi_y = 17.4;
  LineshapeParams shape;
  shape.gamma_star = 15.0;
  shape.sigma_x = 20.0;
  shape.sigma_y = 20.0;
  return make_bundle(levels, drive, laser, shape);
}

std::vector<double> local_maxima(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y,
                                 double floor_frac = 0.05) {
  std::vector<double> peaks;
  const double floor = floor_frac * y.maxCoeff();
  for (Eigen::Index i = 1; i + 1 < y.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] > y[i + 1] && y[i] > floor) {
      const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
      peaks.push_back(x[i] + (denom == 0.0 ? 0.0
                                           : 0.5 * (y[i - 1] - y[i + 1]) / denom * (x[1] - x[0])));
    }
  }
  return peaks;
}

AntennaResponse flat_antenna(double lo, double hi, double dbm) {
  AntennaResponse resp;
  resp.frequency = linspace(lo, hi, 5);
  resp.power_dbm = Eigen::ArrayXd::Constant(5, dbm);
  return resp;
}

}  // namespace

TEST_CASE("undriven spectrum is exactly two lines") {
  const ModelBundle b = fig_bundle(0.0);
  const Eigen::ArrayXd grid = linspace(-300.0, 3200.0, 1751);
  PleOptions options;
  options.pl_ratio = 1.6;
  const Spectrum sp = simulate_ple(b, grid, options);
  const std::vector<double> peaks = local_maxima(grid, sp.intensity);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0] == doctest::Approx(0.0).scale(100.0).epsilon(1e-2));
  CHECK(peaks[1] == doctest::Approx(2900.0).epsilon(1e-3));
}

TEST_CASE("resonant drive splits each line by the coupling") {
  const double power = 400.0;  // coupling 15.8 * 20 = 316 MHz
  const ModelBundle b = fig_bundle(power);
  const Eigen::ArrayXd grid = linspace(-500.0, 500.0, 2001);
  const Spectrum sp = simulate_ple(b, grid, {});
  const std::vector<double> peaks = local_maxima(grid, sp.intensity);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[1] - peaks[0] == doctest::Approx(316.0).epsilon(0.01));
}

TEST_CASE("spectra are invariant under a common frequency shift") {
  ModelBundle b = fig_bundle(100.0);
  b.drive.k_stark_x = 11.7;
  b.drive.k_stark_y = 19.4;
  b.drive.omega_d = 470.0;
  const Eigen::ArrayXd grid = linspace(-600.0, 600.0, 601);
  const Spectrum base = simulate_ple(b, grid, {});

  const double shift = 137.25;
  ModelBundle moved = b;
  moved.levels.omega_x += shift;
  moved.levels.omega_y += shift;
  const Spectrum shifted = simulate_ple(moved, grid + shift, {});
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(shifted.intensity[i] == doctest::Approx(base.intensity[i]).epsilon(1e-9));
  }
}

TEST_CASE("intensity is bounded by half the summed emission weights") {
  ModelBundle b = fig_bundle(900.0);
  b.drive.omega_d = 470.0;
  b.drive.k_stark_x = 11.7;
  b.drive.k_stark_y = 19.4;
  PleOptions options;
  options.pl_ratio = 3.1;
  const Eigen::ArrayXd grid = linspace(-800.0, 3700.0, 901);
  Notes notes;
  const Spectrum sp = simulate_ple(b, grid, options, &notes);
  CHECK(sp.intensity.minCoeff() >= 0.0);
  const SidebandLadder ladder = sideband_ladder(
      b.levels, b.laser, b.drive,
      options.n_max.value_or(default_n_max(b.drive.stark_x(), b.drive.stark_y(), 470.0)));
  double weight_sum = 0.0;
  for (const SidebandEntry& e : ladder.entries) {
    weight_sum += e.weight_x + options.pl_ratio * e.weight_y;
  }
  CHECK(sp.intensity.maxCoeff() <= 0.5 * weight_sum);
}

TEST_CASE("comb truncation is converged at the default order") {
  ModelBundle b = fig_bundle(900.0);
  b.drive.omega_d = 470.0;
  b.drive.k_stark_x = 11.7;
  b.drive.k_stark_y = 19.4;
  const Eigen::ArrayXd grid = linspace(-900.0, 1200.0, 701);
  PleOptions base;
  const Spectrum sp0 = simulate_ple(b, grid, base);
  PleOptions more;
  more.n_max = std::stoi(sp0.params_echo.at("ple.n_max")) + 3;
  const Spectrum sp1 = simulate_ple(b, grid, more);
  const double scale = sp0.intensity.maxCoeff();
  CHECK(((sp0.intensity - sp1.intensity).abs().maxCoeff() / scale) < 1e-6);
}

TEST_CASE("overlapping strongly driven resonances trigger a warning") {
  ModelBundle b = fig_bundle(4.0);  // 31.6 MHz splitting, saturated lines
  b.laser.rabi_y = 30.0;
  b.shape.sigma_x = 0.0;
  b.shape.sigma_y = 0.0;
  Notes notes;
  simulate_ple(b, linspace(-200.0, 200.0, 401), {}, &notes);
  CHECK(!notes.warnings.empty());
}

TEST_CASE("zero drive frequency is only legal for a fully undriven model") {
  ModelBundle b = fig_bundle(100.0);
  b.drive.omega_d = 0.0;
  CHECK_THROWS_AS(simulate_ple(b, linspace(-10.0, 10.0, 11), {}), std::domain_error);
  b.drive.k_rabi = 0.0;
  CHECK_NOTHROW(simulate_ple(b, linspace(-10.0, 10.0, 11), {}));
}

TEST_CASE("power sweep reduces to the undriven pair at zero power") {
  const ModelBundle b = fig_bundle(0.0);
  const Eigen::ArrayXd grid = linspace(-400.0, 400.0, 801);
  const std::vector<Spectrum> sweep = power_sweep_ple(b, {0.0, 100.0, 400.0}, grid, {});
  REQUIRE(sweep.size() == 3);
  const std::vector<double> p0 = local_maxima(grid, sweep[0].intensity);
  REQUIRE(p0.size() == 1);  // only the y line sits inside this window
  CHECK(std::abs(p0[0]) < 1.0);
  // In-pair separation tracks sqrt(power) through the coupling slope.
  const std::vector<double> p1 = local_maxima(grid, sweep[1].intensity);
  const std::vector<double> p2 = local_maxima(grid, sweep[2].intensity);
  REQUIRE(p1.size() == 2);
  REQUIRE(p2.size() == 2);
  CHECK(p1[1] - p1[0] == doctest::Approx(158.0).epsilon(0.02));
  CHECK(p2[1] - p2[0] == doctest::Approx(316.0).epsilon(0.02));
  CHECK_THROWS_AS(power_sweep_ple(b, {4.0, 1.0}, grid, {}), ValidationError);
}

TEST_CASE("flat antenna response reproduces the uncorrected sweep") {
  ModelBundle b = fig_bundle(100.0);
  b.drive.k_stark_x = 11.7;
  b.drive.k_stark_y = 19.4;
  const Eigen::ArrayXd grid = linspace(-400.0, 400.0, 401);
  const std::vector<double> tones = {400.0, 470.0, 540.0};
  const AntennaResponse flat = flat_antenna(300.0, 600.0, 20.0);  // 20 dBm = 100 mW
  const std::vector<Spectrum> plain = mw_frequency_sweep(b, tones, grid, {});
  const std::vector<Spectrum> corrected = mw_frequency_sweep(b, tones, grid, {}, &flat);
  for (std::size_t k = 0; k < tones.size(); ++k) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      CHECK(corrected[k].intensity[i] ==
            doctest::Approx(plain[k].intensity[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("antenna refuses queries outside its table") {
  const AntennaResponse resp = flat_antenna(300.0, 600.0, 20.0);
  CHECK(resp.delivered_mw(450.0) == doctest::Approx(100.0));
  CHECK_THROWS_AS(resp.delivered_dbm(299.0), ValidationError);
  ModelBundle b = fig_bundle(100.0);
  CHECK_THROWS_AS(
      mw_frequency_sweep(b, {700.0}, linspace(-10.0, 10.0, 11), {}, &resp),
      ValidationError);
}

namespace {

OdmrModel desk_odmr() {
  OdmrModel odmr;
  odmr.levels = LevelDiagram{2900.0, 0.0, {}};
  odmr.levels.omega_m = -2400.0;
  odmr.k_magnetic = 0.28;
  odmr.gamma_star = 2.3;
  odmr.inhom_width = 12.0;
  return odmr;
}

DriveField odmr_drive(double power_mw) {
  DriveField drive;
  drive.power_mw = power_mw;
  drive.k_rabi = 15.8;
  return drive;
}

}  // namespace

TEST_CASE("odmr without a magnetic level fails fast naming the key") {
  OdmrModel odmr = desk_odmr();
  odmr.levels.omega_m.reset();
  try {
    simulate_odmr(odmr, odmr_drive(100.0), linspace(2000.0, 2800.0, 401));
    FAIL("expected a validation error");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("omega_m") != std::string::npos);
  }
}

TEST_CASE("undriven odmr resonance sits at the bare transition difference") {
  OdmrModel odmr = desk_odmr();
  const Eigen::ArrayXd grid = linspace(2200.0, 2600.0, 801);
  const Spectrum sp = simulate_odmr(odmr, odmr_drive(1e-8), grid);
  const std::vector<double> peaks = local_maxima(grid, sp.intensity, 0.5);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0] == doctest::Approx(2400.0).epsilon(1e-3));
}

TEST_CASE("electric dressing splits the magnetic line with a weaker upper branch") {
  OdmrModel odmr = desk_odmr();
  const DriveField drive = odmr_drive(100.0);  // coupling 158 MHz
  const Eigen::ArrayXd grid = linspace(2100.0, 2750.0, 1301);
  const Spectrum sp = simulate_odmr(odmr, drive, grid);
  const std::vector<double> peaks = local_maxima(grid, sp.intensity, 0.02);
  REQUIRE(peaks.size() == 2);
  const std::vector<OdmrResonance> roots = odmr_resonances(odmr, drive, 2100.0, 2750.0);
  // The per-point model and the root solver must agree to the grid spacing.
  std::vector<double> expected;
  for (const OdmrResonance& r : roots) {
    if (r.anchor == 'y') expected.push_back(r.omega_d);
  }
  REQUIRE(expected.size() == 2);
  CHECK(peaks[0] == doctest::Approx(expected[0]).epsilon(2e-3));
  CHECK(peaks[1] == doctest::Approx(expected[1]).epsilon(2e-3));
  // Upper branch carries the smaller projected coupling, hence less transfer.
  const auto height = [&](double pos) {
    Eigen::Index best = 0;
    (grid - pos).abs().minCoeff(&best);
    return sp.intensity[best];
  };
  CHECK(height(peaks[1]) < height(peaks[0]));
}

TEST_CASE("doubling delivered power rescales the dressed splitting consistently") {
  OdmrModel odmr = desk_odmr();
  const std::vector<OdmrResonance> base =
      odmr_resonances(odmr, odmr_drive(100.0), 2100.0, 2750.0);
  const std::vector<OdmrResonance> twice =
      odmr_resonances(odmr, odmr_drive(200.0), 2100.0, 2750.0);
  REQUIRE(base.size() == twice.size());
  // Every root keeps satisfying the matching condition with the coupling
  // rescaled by sqrt(2).
  for (const OdmrResonance& r : twice) {
    const double rabi2 = odmr_drive(200.0).rabi_d();
    CHECK(rabi2 == doctest::Approx(std::sqrt(2.0) * odmr_drive(100.0).rabi_d()));
    const double detuning = r.omega_d - odmr.levels.splitting();
    const double rgen = std::hypot(rabi2, detuning);
    const double quasi = r.anchor == 'y'
                             ? odmr.levels.omega_y - detuning / 2 + r.branch * rgen / 2
                             : odmr.levels.omega_x + detuning / 2 + r.branch * rgen / 2;
    CHECK(r.omega_d == doctest::Approx(std::abs(quasi - *odmr.levels.omega_m)).epsilon(1e-9));
  }
}

TEST_CASE("spectra carry a complete parameter echo") {
  const ModelBundle b = fig_bundle(100.0);
  const Spectrum sp = simulate_ple(b, linspace(-50.0, 50.0, 11), {});
  CHECK(sp.params_echo.count("levels.omega_x_mhz") == 1);
  CHECK(sp.params_echo.count("drive.power_mw") == 1);
  CHECK(sp.params_echo.count("lineshape.gamma_star_mhz") == 1);
  CHECK(sp.params_echo.at("spectrum.kind") == "ple");
}

// Closed-form algebra of the microwave-dressed excited-state doublet:
// mixing angle, quasi-energies, the four optical resonance centers, the
// effective diagonal (Stark) modulation amplitudes, and the sideband comb.
#ifndef NVSPEC_DRESSED_HPP
#define NVSPEC_DRESSED_HPP

#include <cmath>
#include <vector>

#include "nvspec/model.hpp"

namespace nvspec {

template <typename Scalar>
inline Scalar generalized_rabi(Scalar rabi_d, Scalar detuning) {
  return std::hypot(rabi_d, detuning);
}

// Rotating-frame description of the driven doublet. theta = atan2(|rabi|,
// detuning) in [0, pi]; the upper state is sin(theta/2)|Ex> + cos(theta/2)|Ey>,
// so theta = 0 (far blue detuning) makes |+> pure |Ey> and theta = pi (far red
// detuning) makes it pure |Ex>.
struct DressedFrame {
  double theta = 0.0;        // rad
  double omega_plus = 0.0;   // MHz, +generalized_rabi/2
  double omega_minus = 0.0;  // MHz, always -omega_plus
  double detuning = 0.0;     // MHz

  double ex_fraction_plus() const { return std::sin(theta / 2) * std::sin(theta / 2); }
  double ey_fraction_plus() const { return std::cos(theta / 2) * std::cos(theta / 2); }
};

DressedFrame mixing(double rabi_d, double detuning);

// The two drive-anchored resonance pairs. Within a pair the separation is the
// generalized Rabi frequency; across pairs (same +/- label) it is exactly the
// drive frequency.
struct OpticalResonances {
  double x_plus = 0.0;
  double x_minus = 0.0;
  double y_plus = 0.0;
  double y_minus = 0.0;
};

OpticalResonances optical_resonances(const LevelDiagram& levels, double rabi_d,
                                     double omega_d);

struct StarkAmplitudes {
  double a_plus = 0.0;   // MHz, diagonal modulation of the + state
  double a_minus = 0.0;  // MHz, diagonal modulation of the - state
  double a_cross = 0.0;  // MHz, neglected off-diagonal term, reported only
};

// a_plus = a_x cos^2(theta/2) + a_y sin^2(theta/2), a_minus the swap,
// a_cross = (a_y - a_x) sin(theta)/2. a_plus + a_minus == a_x + a_y always.
StarkAmplitudes stark_amplitudes(double a_x, double a_y, double theta);

struct SidebandEntry {
  int branch = +1;       // +1 or -1
  int n = 0;             // comb index relative to the branch anchor
  double center = 0.0;   // MHz, laser frequency of the resonance
  double eff_rabi = 0.0; // MHz, signed effective optical coupling
  double weight_x = 0.0; // |<Ex|branch>|^2
  double weight_y = 0.0; // |<Ey|branch>|^2
};

struct SidebandLadder {
  std::vector<SidebandEntry> entries;
  double a_plus = 0.0;
  double a_minus = 0.0;
  double a_cross = 0.0;
  double validity_ratio = 0.0;  // |a_cross| / generalized Rabi
  DressedFrame frame;
};

// Smallest order cutoff that keeps the summed squared comb weights within
// 1e-9 of exact for the given modulation index; never below
// ceil(index) + 5 and never below 2.
int default_truncation(double index);

// default_truncation applied to the larger of the two modulation indices.
int default_n_max(double a_plus, double a_minus, double omega_d);

// Enumerates both branch combs for |n| <= n_max. omega_d must be positive:
// the comb picture needs a finite drive period, so omega_d = 0 is an error
// rather than a static-shift fallback.
SidebandLadder sideband_ladder(const LevelDiagram& levels, const LaserField& laser,
                               const DriveField& drive, int n_max,
                               Notes* notes = nullptr);

// Exact displacement of a resonantly driven resonance when the doublet is
// pushed antisymmetrically (omega_x + eps, omega_y - eps). Quadratic in eps
// for eps << rabi_d, in contrast with the linear response of the undriven
// lines. rabi_d = 0 is rejected: there is no protection without a drive.
double protected_shift(double eps_perp, double rabi_d);

}  // namespace nvspec

#endif  // NVSPEC_DRESSED_HPP

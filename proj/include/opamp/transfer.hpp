#pragma once

// Closed-form frequency-domain relations of the single-pole amplifier model.
//
// Phase convention is e^{+j w t}; only magnitudes leave this module, so the
// sign of the imaginary part never matters downstream.

#include <complex>

#include "opamp/device.hpp"

namespace opamp {

using ComplexGain = std::complex<double>;

/// Which DC intercept 1/Y^2(0) to use.
enum class Intercept {
  Ideal,     ///< beta^2 = 1/(R/r+1)^2, the G0 -> inf limit
  FiniteG0,  ///< (beta + 1/G0)^2
};

/// U0/U+ = 1 / (beta + 1/G0 + j*2*pi*f*tau0).
ComplexGain closed_loop_gain(const DeviceParams& dev, const Topology& topo, double f_hz);

/// 1/Y^2(f) = intercept + f^2/f0^2.
double inverse_gain_squared(const DeviceParams& dev, const Topology& topo, double f_hz,
                            Intercept intercept = Intercept::Ideal);

/// f0 = (R/r+1) f_{1/2} / sqrt(3). Throws std::invalid_argument for a repeater.
double quick_f0(const Topology& topo, double f_half_hz);

/// f0 = (R/r+1) f_{1/n} / sqrt(n^2-1), n > 1. Throws for n <= 1 or a repeater.
double quick_f0_general(const Topology& topo, double n, double f_1_over_n_hz);

/// Same relation with the DC gain supplied directly (e.g. a measured Y0).
double quick_f0_from_gain(double dc_gain, double n, double f_1_over_n_hz);

/// f_crossover = (R_F + R_G)/R_G * f_-3dB; factor 1 for a repeater.
double crossover_from_minus3db(const Topology& topo, double f_3db_hz);

/// Frequency at which |Y(f)|^2 / |Y(0)|^2 == power_ratio, located by a
/// bracketing root search on closed_loop_gain (not the closed form).
/// power_ratio must lie in (0, 1).
double frequency_at_power_ratio(const DeviceParams& dev, const Topology& topo, double power_ratio);

}  // namespace opamp

#pragma once

// Time-domain integration of the single-pole op-amp relation
//
//     U+(t) - U-(t) = (1/G0 + tau0 d/dt) U0(t)
//
// for the non-inverting loop (U- = beta*U0), driven through the optional
// buffer and input divider of the measurement chain, plus a software lock-in
// that recovers amplitudes from the simulated waveforms.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "opamp/device.hpp"
#include "opamp/sweep_record.hpp"

namespace opamp {

struct Stimulus {
  double amplitude = 1.0;  ///< volts
  double frequency;        ///< Hz
};

struct SimConfig {
  int steps_per_period = 256;  ///< lower bound; raised when the loop is fast
  int settle_periods = 5;      ///< lower bound; raised to cover 10 closed-loop time constants
  int measure_periods = 4;
  /// Upper bound on the RK4 step as a fraction of the fastest closed-loop
  /// time constant.
  double max_step_over_tau = 0.05;

  void validate() const;
};

struct TimeSeries {
  double dt = 0.0;
  std::vector<double> samples;
};

/// Waveforms over the measurement window. `input` is the source U_I,
/// `amp_input` is U+ at the amplifier under test, `output` is U0.
struct SteadyState {
  TimeSeries input;
  TimeSeries amp_input;
  TimeSeries output;
  int steps_per_period = 0;  ///< effective value used
  int settle_periods = 0;    ///< effective value used
};

/// dU0/dt = (u_plus - (beta + 1/G0) u_out) / tau0.
double closed_loop_ode_rhs(const DeviceParams& dev, const Topology& topo, double u_plus, double u_out);

/// Closed-loop time constant tau0 / (beta + 1/G0).
double closed_loop_tau(const DeviceParams& dev, const Topology& topo);

/// Integrates from U0(0) = 0 with fixed-step RK4, discards the settling
/// window and records measure_periods whole periods (endpoints included).
/// `buffer`, when given, replaces the ideal unity repeater ahead of the
/// divider with a simulated follower. Throws SimulationError on a
/// non-finite state.
SteadyState simulate_steady_state(const DeviceParams& dev, const Topology& topo, const Stimulus& stim,
                                  const SimConfig& cfg = {},
                                  const std::optional<DeviceParams>& buffer = std::nullopt);

/// Quadrature lock-in: I, Q = (2/T) * trapezoid(ts * cos|sin(2 pi f t)),
/// returns sqrt(I^2 + Q^2). The series must span a whole number of
/// reference periods to within one sample, else std::invalid_argument.
double lockin_demodulate(const TimeSeries& ts, double reference_hz);

enum class Spacing { Linear, Log };

struct SweepPlan {
  double f_min = 10e3;
  double f_max = 100e3;
  int n_points = 512;
  Spacing spacing = Spacing::Linear;

  void validate() const;
  std::vector<double> frequencies() const;
};

/// Multiplicative Gaussian gain error: gain * (1 + eps), eps ~ N(0, sigma_rel).
struct NoiseModel {
  double sigma_rel = 0.0;
};

/// Noiseless sweep: one steady-state simulation per planned frequency,
/// gain = A(U0) / A(U+), i.e. the amplifier gain with the divider removed.
SweepRecord simulate_sweep(const DeviceParams& dev, const Topology& topo, const SweepPlan& plan,
                           const SimConfig& cfg = {},
                           const std::optional<DeviceParams>& buffer = std::nullopt);

/// Applies the noise model. The draw for point i depends only on (seed, i).
SweepRecord apply_noise(const SweepRecord& clean, const NoiseModel& noise, std::uint64_t seed);

/// simulate_sweep followed by apply_noise.
SweepRecord run_sweep(const DeviceParams& dev, const Topology& topo, const SweepPlan& plan,
                      const NoiseModel& noise, const SimConfig& cfg, std::uint64_t seed,
                      const std::optional<DeviceParams>& buffer = std::nullopt);

}  // namespace opamp

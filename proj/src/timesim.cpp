#include "opamp/timesim.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "opamp/error.hpp"

namespace opamp {

namespace {

constexpr double kPi = kTwoPi / 2.0;

// Settling must cover at least this many closed-loop time constants.
constexpr double kSettleTaus = 10.0;

int checked_int(double v, const char* what) {
  if (!(v < 1e9)) throw std::invalid_argument(fmt::format("{} too large ({:g})", what, v));
  return static_cast<int>(v);
}

}  // namespace

void SimConfig::validate() const {
  if (steps_per_period < 64) throw std::invalid_argument("steps_per_period must be >= 64");
  if (settle_periods < 1) throw std::invalid_argument("settle_periods must be >= 1");
  if (measure_periods < 1) throw std::invalid_argument("measure_periods must be >= 1");
  if (!(max_step_over_tau > 0.0)) throw std::invalid_argument("max_step_over_tau must be > 0");
}

double closed_loop_ode_rhs(const DeviceParams& dev, const Topology& topo, double u_plus, double u_out) {
  return (u_plus - (topo.beta() + dev.inv_g0()) * u_out) / dev.tau0();
}

double closed_loop_tau(const DeviceParams& dev, const Topology& topo) {
  return dev.tau0() / (topo.beta() + dev.inv_g0());
}

SteadyState simulate_steady_state(const DeviceParams& dev, const Topology& topo, const Stimulus& stim,
                                  const SimConfig& cfg, const std::optional<DeviceParams>& buffer) {
  cfg.validate();
  if (!(stim.amplitude > 0.0) || !std::isfinite(stim.amplitude))
    throw std::invalid_argument("stimulus amplitude must be positive");
  if (!(stim.frequency > 0.0) || !std::isfinite(stim.frequency))
    throw std::invalid_argument("stimulus frequency must be positive");

  const Topology follower = Topology::repeater();
  double tau_fast = closed_loop_tau(dev, topo);
  double tau_slow = tau_fast;
  if (buffer) {
    const double tb = closed_loop_tau(*buffer, follower);
    tau_fast = std::min(tau_fast, tb);
    tau_slow = std::max(tau_slow, tb);
  }

  const double period = 1.0 / stim.frequency;
  const int steps = std::max(cfg.steps_per_period,
                             checked_int(std::ceil(period / (cfg.max_step_over_tau * tau_fast)), "steps per period"));
  const int settle = std::max(cfg.settle_periods,
                              checked_int(std::ceil(kSettleTaus * tau_slow / period), "settle periods"));
  const double h = period / steps;

  // sin(2 pi f t) at every half step of one period.
  std::vector<double> phase_table(2 * static_cast<std::size_t>(steps));
  for (std::size_t j = 0; j < phase_table.size(); ++j)
    phase_table[j] = stim.amplitude * std::sin(kPi * static_cast<double>(j) / steps);
  auto source = [&](std::size_t half_index) { return phase_table[half_index % phase_table.size()]; };

  const double div = topo.divider_ratio();
  const double loss_out = topo.beta() + dev.inv_g0();
  const double tau_out = dev.tau0();
  const double loss_buf = buffer ? 1.0 + buffer->inv_g0() : 1.0;
  const double tau_buf = buffer ? buffer->tau0() : 1.0;

  // x[0]: buffer output (unused for an ideal buffer), x[1]: U0.
  using State = std::array<double, 2>;
  auto u_plus = [&](double u_in, const State& x) { return div * (buffer ? x[0] : u_in); };
  auto rhs = [&](double u_in, const State& x) -> State {
    const double d0 = buffer ? (u_in - loss_buf * x[0]) / tau_buf : 0.0;
    return {d0, (u_plus(u_in, x) - loss_out * x[1]) / tau_out};
  };

  const std::size_t settle_steps = static_cast<std::size_t>(settle) * steps;
  const std::size_t measure_steps = static_cast<std::size_t>(cfg.measure_periods) * steps;
  const std::size_t total_steps = settle_steps + measure_steps;

  SteadyState out;
  out.steps_per_period = steps;
  out.settle_periods = settle;
  for (TimeSeries* ts : {&out.input, &out.amp_input, &out.output}) {
    ts->dt = h;
    ts->samples.reserve(measure_steps + 1);
  }
  auto record = [&](std::size_t k, const State& x) {
    const double u_in = source(2 * k);
    out.input.samples.push_back(u_in);
    out.amp_input.samples.push_back(u_plus(u_in, x));
    out.output.samples.push_back(x[1]);
  };

  State x{0.0, 0.0};
  for (std::size_t k = 0; k < total_steps; ++k) {
    if (k == settle_steps) record(k, x);
    const double u0 = source(2 * k);
    const double u_half = source(2 * k + 1);
    const double u1 = source(2 * k + 2);
    const State k1 = rhs(u0, x);
    const State k2 = rhs(u_half, {x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]});
    const State k3 = rhs(u_half, {x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]});
    const State k4 = rhs(u1, {x[0] + h * k3[0], x[1] + h * k3[1]});
    for (int i = 0; i < 2; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
      throw SimulationError(fmt::format("non-finite state at step {} (f = {:g} Hz)", k + 1, stim.frequency),
                            k + 1);
    if (k >= settle_steps) record(k + 1, x);
  }
  return out;
}

double lockin_demodulate(const TimeSeries& ts, double reference_hz) {
  if (!(ts.dt > 0.0)) throw std::invalid_argument("time series dt must be > 0");
  if (ts.samples.size() < 2) throw std::invalid_argument("time series needs at least 2 samples");
  if (!(reference_hz > 0.0)) throw std::invalid_argument("reference frequency must be > 0");

  const std::size_t n = ts.samples.size() - 1;
  const double span = static_cast<double>(n) * ts.dt;
  const double periods = std::round(span * reference_hz);
  if (periods < 1.0 || std::abs(span - periods / reference_hz) > ts.dt)
    throw std::invalid_argument(
        fmt::format("series spans {:.6g} reference periods, need a whole number", span * reference_hz));

  const double w = kTwoPi * reference_hz * ts.dt;
  double i_sum = 0.0;
  double q_sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double weight = (k == 0 || k == n) ? 0.5 : 1.0;
    const double phase = w * static_cast<double>(k);
    i_sum += weight * ts.samples[k] * std::cos(phase);
    q_sum += weight * ts.samples[k] * std::sin(phase);
  }
  const double scale = 2.0 / static_cast<double>(n);
  return std::hypot(scale * i_sum, scale * q_sum);
}

void SweepPlan::validate() const {
  if (n_points < 3) throw std::invalid_argument("sweep needs at least 3 points");
  if (!(f_min > 0.0) || !std::isfinite(f_max) || !(f_max > f_min))
    throw std::invalid_argument("sweep needs 0 < f_min < f_max");
}

std::vector<double> SweepPlan::frequencies() const {
  validate();
  std::vector<double> f(static_cast<std::size_t>(n_points));
  const double last = n_points - 1;
  for (int i = 0; i < n_points; ++i) {
    const double t = i / last;
    f[i] = spacing == Spacing::Linear ? f_min + (f_max - f_min) * t : f_min * std::pow(f_max / f_min, t);
  }
  f.back() = f_max;
  return f;
}

SweepRecord simulate_sweep(const DeviceParams& dev, const Topology& topo, const SweepPlan& plan,
                           const SimConfig& cfg, const std::optional<DeviceParams>& buffer) {
  const auto freqs = plan.frequencies();
  std::vector<SweepPoint> points;
  points.reserve(freqs.size());
  for (const double f : freqs) {
    try {
      const auto ss = simulate_steady_state(dev, topo, Stimulus{1.0, f}, cfg, buffer);
      points.push_back({f, lockin_demodulate(ss.output, f) / lockin_demodulate(ss.amp_input, f)});
    } catch (const SimulationError& e) {
      throw SimulationError(fmt::format("sweep point {:g} Hz: {}", f, e.what()), e.step());
    }
  }
  return SweepRecord(std::move(points), topo, "simulated");
}

SweepRecord apply_noise(const SweepRecord& clean, const NoiseModel& noise, std::uint64_t seed) {
  if (!(noise.sigma_rel >= 0.0) || !std::isfinite(noise.sigma_rel))
    throw std::invalid_argument("noise sigma_rel must be finite and >= 0");
  std::vector<SweepPoint> points(clean.points().begin(), clean.points().end());
  if (noise.sigma_rel > 0.0) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> eps(0.0, noise.sigma_rel);
      points[i].gain *= 1.0 + eps(rng);
    }
  }
  return SweepRecord(std::move(points), clean.topology(), clean.label());
}

SweepRecord run_sweep(const DeviceParams& dev, const Topology& topo, const SweepPlan& plan,
                      const NoiseModel& noise, const SimConfig& cfg, std::uint64_t seed,
                      const std::optional<DeviceParams>& buffer) {
  return apply_noise(simulate_sweep(dev, topo, plan, cfg, buffer), noise, seed);
}

}  // namespace opamp

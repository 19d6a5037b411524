#include "opamp/transfer.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace opamp {

ComplexGain closed_loop_gain(const DeviceParams& dev, const Topology& topo, double f_hz) {
  if (!(f_hz >= 0.0)) throw std::invalid_argument("frequency must be >= 0");
  const ComplexGain denom(topo.beta() + dev.inv_g0(), kTwoPi * f_hz * dev.tau0());
  return 1.0 / denom;
}

double inverse_gain_squared(const DeviceParams& dev, const Topology& topo, double f_hz,
                            Intercept intercept) {
  if (!(f_hz >= 0.0)) throw std::invalid_argument("frequency must be >= 0");
  const double dc = intercept == Intercept::Ideal ? topo.beta() : topo.beta() + dev.inv_g0();
  const double x = f_hz / dev.f0();
  return dc * dc + x * x;
}

double quick_f0_from_gain(double dc_gain, double n, double f_1_over_n_hz) {
  if (!(n > 1.0)) throw std::invalid_argument("n must be > 1");
  if (!(f_1_over_n_hz > 0.0)) throw std::invalid_argument("f_1/n must be > 0");
  if (!(dc_gain > 0.0)) throw std::invalid_argument("dc gain must be > 0");
  return dc_gain * f_1_over_n_hz / std::sqrt(n * n - 1.0);
}

double quick_f0_general(const Topology& topo, double n, double f_1_over_n_hz) {
  if (topo.is_repeater())
    throw std::invalid_argument("quick method needs a finite closed-loop gain > 1 (not a repeater)");
  return quick_f0_from_gain(topo.ideal_gain(), n, f_1_over_n_hz);
}

double quick_f0(const Topology& topo, double f_half_hz) {
  if (topo.is_repeater())
    throw std::invalid_argument("quick method needs a finite closed-loop gain > 1 (not a repeater)");
  if (!(f_half_hz > 0.0)) throw std::invalid_argument("f_1/2 must be > 0");
  return topo.ideal_gain() * f_half_hz / std::sqrt(3.0);
}

double crossover_from_minus3db(const Topology& topo, double f_3db_hz) {
  if (!(f_3db_hz > 0.0)) throw std::invalid_argument("f_-3dB must be > 0");
  return topo.ideal_gain() * f_3db_hz;
}

double frequency_at_power_ratio(const DeviceParams& dev, const Topology& topo, double power_ratio) {
  if (!(power_ratio > 0.0 && power_ratio < 1.0))
    throw std::invalid_argument("power ratio must lie in (0, 1)");
  const double dc_power = std::norm(closed_loop_gain(dev, topo, 0.0));
  // Work in log-frequency; the gain is monotone so one sign change exists.
  auto residual = [&](double log_f) {
    return std::norm(closed_loop_gain(dev, topo, std::exp(log_f))) / dc_power - power_ratio;
  };
  double lo = std::log(dev.f0()) - 10.0;
  double hi = std::log(dev.f0()) + 10.0;
  while (residual(lo) < 0.0) lo -= 10.0;
  while (residual(hi) > 0.0) hi += 10.0;

  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      residual, lo, hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return std::exp(0.5 * (a + b));
}

}  // namespace opamp

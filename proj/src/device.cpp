#include "opamp/device.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opamp {

namespace {

void check_g0(double g0) {
  if (!(g0 > 1.0)) throw std::invalid_argument("g0 must be > 1, got " + std::to_string(g0));
}

}  // namespace

DeviceParams DeviceParams::from_f0(double f0_hz, double g0) {
  if (!(f0_hz > 0.0) || !std::isfinite(f0_hz))
    throw std::invalid_argument("f0 must be positive and finite");
  check_g0(g0);
  return DeviceParams(f0_hz, true, g0);
}

DeviceParams DeviceParams::from_tau0(double tau0_s, double g0) {
  if (!(tau0_s > 0.0) || !std::isfinite(tau0_s))
    throw std::invalid_argument("tau0 must be positive and finite");
  check_g0(g0);
  return DeviceParams(tau0_s, false, g0);
}

Topology::Topology(double feedback_r, double gain_r, std::optional<Divider> divider)
    : feedback_r_(feedback_r), gain_r_(gain_r), divider_(divider) {
  if (!(feedback_r >= 0.0) || !std::isfinite(feedback_r))
    throw std::invalid_argument("feedback resistance must be finite and >= 0");
  if (!(gain_r > 0.0)) throw std::invalid_argument("gain resistance must be > 0 or open");
  if (divider) {
    if (!(divider->r1 >= 0.0) || !std::isfinite(divider->r1))
      throw std::invalid_argument("divider r1 must be finite and >= 0");
    if (!(divider->r2 > 0.0) || !std::isfinite(divider->r2))
      throw std::invalid_argument("divider r2 must be finite and > 0");
  }
}

Topology Topology::from_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  return Topology(1.0 / beta - 1.0, 1.0);
}

}  // namespace opamp

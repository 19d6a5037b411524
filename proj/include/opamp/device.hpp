#pragma once

#include <limits>
#include <optional>

namespace opamp {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kOpen = std::numeric_limits<double>::infinity();

/// Single-pole op-amp model: G^-1(s) = 1/G0 + s*tau0, with f0 = 1/(2*pi*tau0).
///
/// Exactly one of f0/tau0 is stored (whichever the caller supplied); the
/// other is derived on demand, so the stored value round-trips bit-exactly.
/// An infinite g0 selects the ideal-DC-gain limit where 1/G0 vanishes.
class DeviceParams {
 public:
  static DeviceParams from_f0(double f0_hz, double g0 = kOpen);
  static DeviceParams from_tau0(double tau0_s, double g0 = kOpen);

  double f0() const noexcept { return stored_is_f0_ ? value_ : 1.0 / (kTwoPi * value_); }
  double tau0() const noexcept { return stored_is_f0_ ? 1.0 / (kTwoPi * value_) : value_; }
  double g0() const noexcept { return g0_; }
  /// 1/G0; zero in the infinite-gain limit.
  double inv_g0() const noexcept { return 1.0 / g0_; }
  bool ideal_dc_gain() const noexcept { return g0_ == kOpen; }

 private:
  DeviceParams(double value, bool is_f0, double g0) : value_(value), stored_is_f0_(is_f0), g0_(g0) {}

  double value_;
  bool stored_is_f0_;
  double g0_;
};

/// Resistive input attenuator in front of the amplifier: U+ = U_I * r2/(r1+r2).
struct Divider {
  double r1;
  double r2;

  double ratio() const noexcept { return r2 / (r1 + r2); }
};

/// Non-inverting amplifier: feedback resistor R from output to U-, gain
/// resistor r from U- to ground. A repeater is feedback_r == 0 or an open
/// gain_r; both normalize to beta == 1.
class Topology {
 public:
  Topology(double feedback_r, double gain_r, std::optional<Divider> divider = std::nullopt);

  static Topology repeater() { return Topology(0.0, kOpen); }
  /// R = 1/beta - 1 against r = 1 ohm.
  static Topology from_beta(double beta);

  double feedback_r() const noexcept { return feedback_r_; }
  double gain_r() const noexcept { return gain_r_; }
  const std::optional<Divider>& divider() const noexcept { return divider_; }

  bool is_repeater() const noexcept { return feedback_r_ == 0.0 || gain_r_ == kOpen; }
  /// Feedback fraction r/(R+r), in (0, 1].
  double beta() const noexcept { return is_repeater() ? 1.0 : gain_r_ / (feedback_r_ + gain_r_); }
  /// Ideal DC gain 1/beta = R/r + 1.
  double ideal_gain() const noexcept { return is_repeater() ? 1.0 : feedback_r_ / gain_r_ + 1.0; }
  double divider_ratio() const noexcept { return divider_ ? divider_->ratio() : 1.0; }

 private:
  double feedback_r_;
  double gain_r_;
  std::optional<Divider> divider_;
};

}  // namespace opamp

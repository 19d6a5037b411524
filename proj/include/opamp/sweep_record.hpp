#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opamp/device.hpp"

namespace opamp {

struct SweepPoint {
  double f_hz;
  double gain;  ///< |U0/U+|, dimensionless
};

/// Ordered gain-magnitude samples of one device. Construction validates:
/// at least 3 points, frequencies positive and strictly increasing, every
/// gain positive and finite.
class SweepRecord {
 public:
  explicit SweepRecord(std::vector<SweepPoint> points, std::optional<Topology> topology = std::nullopt,
                       std::string label = {});

  std::span<const SweepPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const SweepPoint& operator[](std::size_t i) const { return points_[i]; }

  const std::optional<Topology>& topology() const noexcept { return topology_; }
  const std::string& label() const noexcept { return label_; }

  /// Copy with every frequency multiplied by k (> 0).
  SweepRecord scaled_frequency(double k) const;
  /// Copy with every gain multiplied by c (> 0).
  SweepRecord scaled_gain(double c) const;

 private:
  std::vector<SweepPoint> points_;
  std::optional<Topology> topology_;
  std::string label_;
};

}  // namespace opamp

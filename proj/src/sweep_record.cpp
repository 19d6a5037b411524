#include "opamp/sweep_record.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opamp {

SweepRecord::SweepRecord(std::vector<SweepPoint> points, std::optional<Topology> topology,
                         std::string label)
    : points_(std::move(points)), topology_(std::move(topology)), label_(std::move(label)) {
  if (points_.size() < 3)
    throw std::invalid_argument("sweep needs at least 3 points, got " + std::to_string(points_.size()));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!(p.f_hz > 0.0) || !std::isfinite(p.f_hz))
      throw std::invalid_argument("point " + std::to_string(i) + ": frequency must be positive and finite");
    if (!(p.gain > 0.0) || !std::isfinite(p.gain))
      throw std::invalid_argument("point " + std::to_string(i) + ": gain must be positive and finite");
    if (i > 0 && !(p.f_hz > points_[i - 1].f_hz))
      throw std::invalid_argument("point " + std::to_string(i) + ": frequencies must be strictly increasing");
  }
}

SweepRecord SweepRecord::scaled_frequency(double k) const {
  auto pts = points_;
  for (auto& p : pts) p.f_hz *= k;
  return SweepRecord(std::move(pts), topology_, label_);
}

SweepRecord SweepRecord::scaled_gain(double c) const {
  auto pts = points_;
  for (auto& p : pts) p.gain *= c;
  return SweepRecord(std::move(pts), topology_, label_);
}

}  // namespace opamp

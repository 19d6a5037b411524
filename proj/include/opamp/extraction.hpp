#pragma once

// Crossover-frequency extraction from gain sweeps.
//
// The single-pole model makes 1/Y^2 exactly linear in f^2:
//
//     1/Y^2(f) = 1/(R/r + 1)^2 + f^2 / f0^2
//
// so an ordinary least-squares line through (f^2, 1/Y^2) has slope 1/f0^2.

#include <cmath>
#include <cstddef>
#include <optional>

#include "opamp/device.hpp"
#include "opamp/sweep_record.hpp"

namespace opamp {

struct FitOptions {
  /// Weight each point by 1/v^2 (v = 1/Y^2), the inverse variance under
  /// multiplicative gain noise. Off by default: plain OLS.
  bool variance_weighted = false;
};

struct FitResult {
  double f0 = 0.0;         ///< Hz, 1/sqrt(slope)
  double slope = 0.0;      ///< 1/Hz^2
  double intercept = 0.0;  ///< 1/Y^2 at f = 0
  double corr = 0.0;       ///< Pearson correlation of (f^2, 1/Y^2)
  std::size_t n_points = 0;
  /// 1/(R/r+1)^2 and (fitted - expected)/expected, when the record carries a topology.
  std::optional<double> intercept_expected;
  std::optional<double> intercept_rel_dev;

  /// Relative intercept deviation beyond which the gain calibration is suspect.
  static constexpr double kInterceptWarnThreshold = 0.20;
  bool intercept_warning() const {
    return intercept_rel_dev && std::abs(*intercept_rel_dev) > kInterceptWarnThreshold;
  }
};

/// Line fit in the (f^2, 1/Y^2) plane. Throws FitError when the fitted
/// slope is not positive ("sweep does not resolve roll-off").
FitResult fit_f0(const SweepRecord& record, const FitOptions& opts = {});

/// Intercept deviations against both model variants.
struct InterceptDiagnostic {
  double fitted;
  double ideal;            ///< beta^2
  double finite_g0;        ///< (beta + 1/G0)^2
  double ideal_rel_dev;
  double finite_g0_rel_dev;
};
InterceptDiagnostic intercept_diagnostic(const FitResult& fit, const Topology& topo, const DeviceParams& dev);

enum class DcGainEstimate {
  FirstPoint,    ///< Y0 = gain of the lowest-frequency point
  LowestDecile,  ///< mean over the lowest 10% of points (at least one)
};

struct QuickOptions {
  DcGainEstimate dc_gain = DcGainEstimate::FirstPoint;
  /// Use R/r + 1 from the record's topology as the DC gain factor in the
  /// f0 formula instead of the measured Y0 (Y0 still sets the target level).
  bool use_topology_gain = true;
};

struct QuickResult {
  double f0;            ///< Hz
  double f_1_over_n;    ///< Hz, interpolated crossing frequency
  double y0;            ///< measured low-frequency gain
  double gain_factor;   ///< DC gain used in the formula
  std::size_t lower;    ///< index of the bracketing point below the crossing
  std::size_t upper;    ///< index of the bracketing point above the crossing
};

/// Quick method: find f_{1/n} where Y = Y0/n by linear interpolation in the
/// (f^2, 1/Y^2) plane between the bracketing samples, then apply
/// f0 = G * f_{1/n} / sqrt(n^2 - 1). Throws std::invalid_argument for
/// n <= 1 and FitError("sweep range too narrow for n") when Y0/n is not
/// bracketed.
QuickResult quick_fit(const SweepRecord& record, double n, const QuickOptions& opts = {});

/// f0 from quick_fit.
double quick_fit_f0(const SweepRecord& record, double n, const QuickOptions& opts = {});

/// Largest n the record can bracket: Y0 / min(Y).
double max_attainable_n(const SweepRecord& record, DcGainEstimate estimate = DcGainEstimate::FirstPoint);

}  // namespace opamp

#include "opamp/extraction.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "opamp/error.hpp"
#include "opamp/transfer.hpp"

namespace opamp {

namespace {

struct Line {
  double slope;
  double intercept;
  double corr;
};

// Weighted least squares y = a + b x with centered sums. Empty weights = OLS.
Line fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  const std::size_t n = x.size();
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };

  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += weight(i);
    mx += weight(i) * x[i];
    my += weight(i) * y[i];
  }
  mx /= sw;
  my /= sw;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += weight(i) * dx * dx;
    sxy += weight(i) * dx * dy;
    syy += weight(i) * dy * dy;
  }
  const double b = sxy / sxx;
  const double corr = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  return {b, my - b * mx, corr};
}

double estimate_y0(const SweepRecord& record, DcGainEstimate estimate) {
  if (estimate == DcGainEstimate::FirstPoint) return record[0].gain;
  const std::size_t k = std::max<std::size_t>(1, record.size() / 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += record[i].gain;
  return sum / static_cast<double>(k);
}

}  // namespace

FitResult fit_f0(const SweepRecord& record, const FitOptions& opts) {
  const std::size_t n = record.size();
  std::vector<double> u(n), v(n), w;
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = record[i].f_hz * record[i].f_hz;
    v[i] = 1.0 / (record[i].gain * record[i].gain);
    if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
      throw FitError(fmt::format("point {}: transformed coordinates are not finite", i));
  }
  if (opts.variance_weighted) {
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (v[i] * v[i]);
  }

  const Line line = fit_line(u, v, w);
  if (!(line.slope > 0.0)) throw FitError("sweep does not resolve roll-off");

  FitResult r;
  r.slope = line.slope;
  r.intercept = line.intercept;
  r.corr = line.corr;
  r.f0 = 1.0 / std::sqrt(line.slope);
  r.n_points = n;
  if (record.topology()) {
    const double beta = record.topology()->beta();
    r.intercept_expected = beta * beta;
    r.intercept_rel_dev = (r.intercept - *r.intercept_expected) / *r.intercept_expected;
  }
  return r;
}

InterceptDiagnostic intercept_diagnostic(const FitResult& fit, const Topology& topo, const DeviceParams& dev) {
  InterceptDiagnostic d{};
  d.fitted = fit.intercept;
  d.ideal = inverse_gain_squared(dev, topo, 0.0, Intercept::Ideal);
  d.finite_g0 = inverse_gain_squared(dev, topo, 0.0, Intercept::FiniteG0);
  d.ideal_rel_dev = (fit.intercept - d.ideal) / d.ideal;
  d.finite_g0_rel_dev = (fit.intercept - d.finite_g0) / d.finite_g0;
  return d;
}

double max_attainable_n(const SweepRecord& record, DcGainEstimate estimate) {
  double y_min = record[0].gain;
  for (const auto& p : record.points()) y_min = std::min(y_min, p.gain);
  return estimate_y0(record, estimate) / y_min;
}

QuickResult quick_fit(const SweepRecord& record, double n, const QuickOptions& opts) {
  if (!(n > 1.0)) throw std::invalid_argument("n must be > 1");

  const double y0 = estimate_y0(record, opts.dc_gain);
  const double v_target = n * n / (y0 * y0);
  auto v_at = [&](std::size_t i) { return 1.0 / (record[i].gain * record[i].gain); };

  // First sample at or past the target level, searching from the low end.
  std::size_t upper = 0;
  while (upper < record.size() && v_at(upper) < v_target) ++upper;
  if (upper == 0 || upper == record.size()) throw FitError("sweep range too narrow for n");
  const std::size_t lower = upper - 1;

  // 1/Y^2 is linear in f^2 under the model, so interpolate there.
  const double u_lo = record[lower].f_hz * record[lower].f_hz;
  const double u_hi = record[upper].f_hz * record[upper].f_hz;
  const double v_lo = v_at(lower);
  const double v_hi = v_at(upper);
  const double u_cross = u_lo + (v_target - v_lo) * (u_hi - u_lo) / (v_hi - v_lo);
  const double f_cross = std::sqrt(u_cross);

  double gain_factor = y0;
  if (opts.use_topology_gain && record.topology() && !record.topology()->is_repeater())
    gain_factor = record.topology()->ideal_gain();

  return {quick_f0_from_gain(gain_factor, n, f_cross), f_cross, y0, gain_factor, lower, upper};
}

double quick_fit_f0(const SweepRecord& record, double n, const QuickOptions& opts) {
  return quick_fit(record, n, opts).f0;
}

}  // namespace opamp

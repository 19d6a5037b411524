#include "opamp/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace opamp {

BatchStats batch_stats(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("batch needs at least 2 samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) return {*lo, 0.0};
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (const double f : samples) ss += (f - mean) * (f - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<EcdfPoint> empirical_cdf(std::span<const double> samples) {
  const auto [mean, stddev] = batch_stats(samples);
  if (!(stddev > 0.0)) throw std::invalid_argument("ecdf undefined for zero spread");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<EcdfPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    out[i] = {(sorted[i] - mean) / stddev, static_cast<double>(i + 1) / n};
  return out;
}

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

NormalFit normal_cdf_fit(std::span<const EcdfPoint> ecdf) {
  if (ecdf.size() < 2) throw std::invalid_argument("ecdf needs at least 2 points");
  const double n = static_cast<double>(ecdf.size());

  std::vector<double> phi(ecdf.size());
  NormalFit fit{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < ecdf.size(); ++i) {
    phi[i] = normal_cdf(ecdf[i].x);
    const double above = std::abs(ecdf[i].p - phi[i]);
    const double below = std::abs(ecdf[i].p - 1.0 / n - phi[i]);
    fit.kolmogorov_d_one_sided = std::max(fit.kolmogorov_d_one_sided, above);
    fit.kolmogorov_d = std::max({fit.kolmogorov_d, above, below});
  }

  double mp = 0.0, mf = 0.0;
  for (std::size_t i = 0; i < ecdf.size(); ++i) {
    mp += ecdf[i].p;
    mf += phi[i];
  }
  mp /= n;
  mf /= n;
  double spp = 0.0, sff = 0.0, spf = 0.0;
  for (std::size_t i = 0; i < ecdf.size(); ++i) {
    const double dp = ecdf[i].p - mp;
    const double df = phi[i] - mf;
    spp += dp * dp;
    sff += df * df;
    spf += dp * df;
  }
  fit.cdf_corr = (spp > 0.0 && sff > 0.0) ? std::clamp(spf / std::sqrt(spp * sff), -1.0, 1.0) : 0.0;
  return fit;
}

BatchDistribution analyze_batch(std::vector<BatchSample> samples) {
  BatchDistribution d;
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(s.f0_hz);
  const auto stats = batch_stats(values);

  d.samples = std::move(samples);
  d.n = values.size();
  d.mean = stats.mean;
  d.stddev = stats.stddev;
  if (!d.degenerate()) {
    d.ecdf = empirical_cdf(values);
    d.fit = normal_cdf_fit(d.ecdf);
  }
  return d;
}

}  // namespace opamp

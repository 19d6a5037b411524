#pragma once

#include <span>
#include <string>
#include <vector>

namespace opamp {

struct BatchStats {
  double mean;
  double stddev;  ///< sample standard deviation, divisor N-1
};

/// Throws std::invalid_argument for fewer than 2 samples.
BatchStats batch_stats(std::span<const double> samples);

struct EcdfPoint {
  double x;  ///< (f_i - mean) / stddev
  double p;  ///< i / N, i = 1..N over the ascending order
};

/// Standardized empirical CDF. Equal samples stay as consecutive equal
/// abscissae. Throws std::invalid_argument when stddev is zero.
std::vector<EcdfPoint> empirical_cdf(std::span<const double> samples);

/// Standard normal CDF, (1 + erf(x/sqrt 2)) / 2.
double normal_cdf(double x);

struct NormalFit {
  double kolmogorov_d;            ///< max over i of max(|i/N - Phi|, |(i-1)/N - Phi|)
  double kolmogorov_d_one_sided;  ///< max over i of |i/N - Phi|, the gap above each step only
  double cdf_corr;                ///< Pearson correlation of {p_i} against {Phi(x_i)}
};

/// Compares an ECDF with the standard normal reference. Because the ECDF
/// is standardized with the sample's own mean and stddev, Kolmogorov
/// critical values are the Lilliefors regime; they are reported, not tested.
NormalFit normal_cdf_fit(std::span<const EcdfPoint> ecdf);

/// Asymptotic 5% critical value of sqrt(N) * D for the two-sided test.
inline constexpr double kKolmogorovCritical5 = 1.358;

struct BatchSample {
  std::string id;
  double f0_hz;
};

struct BatchDistribution {
  std::vector<BatchSample> samples;
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<EcdfPoint> ecdf;  ///< empty when stddev == 0
  NormalFit fit{};              ///< zeroed when stddev == 0

  bool degenerate() const noexcept { return stddev == 0.0; }
  double relative_spread() const noexcept { return stddev / mean; }
};

/// Full analysis. A zero-spread batch is returned with degenerate() true
/// instead of throwing.
BatchDistribution analyze_batch(std::vector<BatchSample> samples);

}  // namespace opamp

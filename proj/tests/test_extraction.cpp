#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "opamp/error.hpp"
#include "opamp/extraction.hpp"
#include "opamp/timesim.hpp"
#include "opamp/transfer.hpp"

using namespace opamp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Closed-form gains on a planned grid; the extraction oracle.
SweepRecord analytic_sweep(const DeviceParams& dev, const Topology& topo, const SweepPlan& plan) {
  std::vector<SweepPoint> pts;
  for (const double f : plan.frequencies()) pts.push_back({f, std::abs(closed_loop_gain(dev, topo, f))});
  return SweepRecord(std::move(pts), topo);
}

// Sweep reaching twice the closed-loop bandwidth beta*f0.
SweepPlan resolving_plan(const DeviceParams& dev, const Topology& topo, int n = 512) {
  const double bw = topo.beta() * dev.f0();
  return SweepPlan{bw / 100.0, 2.0 * bw, n, Spacing::Linear};
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

// Predicted relative f0 spread of unweighted OLS under multiplicative gain
// noise: var(v_i) = (2 sigma v_i)^2, var(slope) = sum var(v_i)(u_i - u_bar)^2 / Sxx^2,
// and d f0 / f0 = -d slope / (2 slope).
double predicted_f0_spread(const SweepRecord& clean, double sigma) {
  std::vector<double> u, v;
  for (const auto& p : clean.points()) {
    u.push_back(p.f_hz * p.f_hz);
    v.push_back(1.0 / (p.gain * p.gain));
  }
  const double ub = mean(u);
  double sxx = 0.0, num = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxx += (u[i] - ub) * (u[i] - ub);
    num += std::pow(2.0 * sigma * v[i], 2) * (u[i] - ub) * (u[i] - ub);
  }
  const double slope = fit_f0(clean).slope;
  return 0.5 * std::sqrt(num) / sxx / slope;
}

}  // namespace

TEST_CASE("SweepRecord validates its points", "[record]") {
  CHECK_THROWS_AS(SweepRecord({{1.0, 1.0}, {2.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SweepRecord({{1.0, 1.0}, {3.0, 1.0}, {2.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SweepRecord({{1.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SweepRecord({{0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SweepRecord({{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SweepRecord({{1.0, 1.0}, {2.0, INFINITY}, {3.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(SweepRecord({{1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}}));
}

TEST_CASE("fit_f0 on a noiseless closed-form sweep", "[fit]") {
  const auto dev = DeviceParams::from_f0(39.6e6);
  const Topology topo(1989.0, 20.1);
  const auto rec = analytic_sweep(dev, topo, SweepPlan{1e3, 1e6, 200, Spacing::Linear});
  const auto fit = fit_f0(rec);
  CHECK_THAT(fit.f0, WithinRel(39.6e6, 1e-9));
  CHECK_THAT(fit.corr, WithinAbs(1.0, 1e-12));
  CHECK_THAT(fit.slope, WithinRel(1.0 / (39.6e6 * 39.6e6), 2e-9));
  REQUIRE(fit.intercept_expected);
  CHECK_THAT(*fit.intercept_expected, WithinRel(1.00089612421760815e-4, 1e-13));
  CHECK(std::abs(*fit.intercept_rel_dev) < 1e-9);
  CHECK_FALSE(fit.intercept_warning());
  CHECK(fit.n_points == 200);

  const auto weighted = fit_f0(rec, FitOptions{true});
  CHECK_THAT(weighted.f0, WithinRel(39.6e6, 1e-9));
}

TEST_CASE("fit_f0 on three collinear points", "[fit]") {
  // (u, v) = (1, c + b), (4, c + 4b), (9, c + 9b)
  const double c = 2.0e-4, b = 3.0e-5;
  std::vector<SweepPoint> pts;
  for (const double f : {1.0, 2.0, 3.0}) pts.push_back({f, 1.0 / std::sqrt(c + b * f * f)});
  const auto fit = fit_f0(SweepRecord(pts));
  CHECK_THAT(fit.slope, WithinRel(b, 1e-12));
  CHECK_THAT(fit.intercept, WithinRel(c, 1e-12));
  CHECK_THAT(fit.f0, WithinRel(1.0 / std::sqrt(b), 1e-12));
  CHECK_THAT(fit.corr, WithinAbs(1.0, 1e-12));
  CHECK_FALSE(fit.intercept_expected);
}

TEST_CASE("fit_f0 rejects sweeps without roll-off", "[fit]") {
  // rising gain => negative slope
  CHECK_THROWS_AS(fit_f0(SweepRecord({{1e3, 10.0}, {2e3, 11.0}, {3e3, 12.0}})), FitError);
  // flat gain => zero slope
  try {
    fit_f0(SweepRecord({{1e3, 10.0}, {2e3, 10.0}, {3e3, 10.0}}));
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()) == "sweep does not resolve roll-off");
  }
}

TEST_CASE("fit_f0 recovers f0 over the device/topology grid", "[fit][property]") {
  for (const double f0 : {10e6, 39.6e6, 97.73e6, 410e6}) {
    for (const double beta : {1.0 / 11.0, 1.0 / 101.0, 1.0 / 1001.0}) {
      const auto dev = DeviceParams::from_f0(f0);
      const auto topo = Topology::from_beta(beta);
      const auto fit = fit_f0(analytic_sweep(dev, topo, resolving_plan(dev, topo)));
      CHECK_THAT(fit.f0, WithinRel(f0, 1e-6));
    }
  }
}

TEST_CASE("frequency scaling and gain scaling", "[fit][property]") {
  const auto dev = DeviceParams::from_f0(97.73e6);
  const auto topo = Topology::from_beta(1.0 / 101.0);
  const auto clean = analytic_sweep(dev, topo, resolving_plan(dev, topo, 128));
  const auto noisy = apply_noise(clean, NoiseModel{0.01}, 17);
  const auto base = fit_f0(noisy);

  for (const double k : {1e-3, 0.5, 3.0, 1e4}) {
    const auto f = fit_f0(noisy.scaled_frequency(k));
    CHECK_THAT(f.f0, WithinRel(k * base.f0, 1e-10));
    CHECK_THAT(f.corr, WithinRel(base.corr, 1e-10));
  }
  for (const double c : {0.1, 2.0, 7.5}) {
    const auto g = fit_f0(noisy.scaled_gain(c));
    CHECK_THAT(g.intercept, WithinRel(base.intercept / (c * c), 1e-10));
    CHECK_THAT(g.slope, WithinRel(base.slope / (c * c), 1e-10));
    CHECK_THAT(g.f0, WithinRel(base.f0 * c, 1e-10));
    CHECK_THAT(g.corr, WithinRel(base.corr, 1e-10));
  }
  // A 20% gain miscalibration shows up in the intercept diagnostic.
  CHECK(fit_f0(noisy.scaled_gain(1.2)).intercept_warning());
}

TEST_CASE("noise degrades the correlation monotonically in expectation", "[fit][property]") {
  const auto dev = DeviceParams::from_f0(97.73e6);
  const auto topo = Topology::from_beta(1.0 / 101.0);
  const auto clean = analytic_sweep(dev, topo, resolving_plan(dev, topo));
  double prev = 1.0;
  for (const double sigma : {0.001, 0.003, 0.01, 0.03, 0.1}) {
    std::vector<double> corr;
    for (std::uint64_t seed = 0; seed < 40; ++seed) corr.push_back(fit_f0(apply_noise(clean, {sigma}, seed)).corr);
    const double m = mean(corr);
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("noise robustness over a sweep that resolves the roll-off", "[fit][noise]") {
  const auto dev = DeviceParams::from_f0(97.73e6);
  const auto topo = Topology::from_beta(1.0 / 101.0);
  const auto clean = analytic_sweep(dev, topo, SweepPlan{10e3, 2e6, 512, Spacing::Linear});
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto fit = fit_f0(apply_noise(clean, {0.003}, seed));
    if (fit.corr >= 0.999 && std::abs(fit.f0 / dev.f0() - 1.0) <= 0.01) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("a 10-100 kHz sweep barely resolves the roll-off under 0.3% noise", "[fit][noise]") {
  // Over 10-100 kHz at beta = 1/101 and f0 = 97.73 MHz, 1/Y^2 changes by about
  // 1% of its intercept, so 0.3% gain noise dominates the regression. The
  // measured f0 spread must follow the OLS variance prediction and the
  // correlation stays far below 0.999.
  const auto dev = DeviceParams::from_f0(97.73e6);
  const auto topo = Topology::from_beta(1.0 / 101.0);
  const auto clean = analytic_sweep(dev, topo, SweepPlan{});
  const double predicted = predicted_f0_spread(clean, 0.003);
  CHECK_THAT(predicted, WithinRel(0.043, 0.1));

  std::vector<double> f0s, corrs;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto fit = fit_f0(apply_noise(clean, {0.003}, seed));
    f0s.push_back(fit.f0);
    corrs.push_back(fit.corr);
  }
  CHECK_THAT(stddev(f0s) / dev.f0(), WithinRel(predicted, 0.25));
  std::sort(corrs.begin(), corrs.end());
  CHECK(corrs[100] < 0.9);
  CHECK(corrs.back() < 0.999);
}

TEST_CASE("intercept_diagnostic reports both intercept models", "[fit]") {
  const auto dev = DeviceParams::from_f0(100e6, 1e5);
  const auto topo = Topology::from_beta(1.0 / 101.0);
  // Gains from the finite-G0 model; the fitted intercept is (beta + 1/G0)^2.
  const auto rec = analytic_sweep(dev, topo, resolving_plan(dev, topo, 64));
  const auto fit = fit_f0(rec);
  const auto d = intercept_diagnostic(fit, topo, dev);
  CHECK(std::abs(d.finite_g0_rel_dev) < 1e-9);
  // (1 + 101e-5)^2 - 1 = 2.0210201e-3
  CHECK_THAT(d.ideal_rel_dev, WithinRel(2.0210201e-3, 1e-6));
  CHECK_THAT(*fit.intercept_rel_dev, WithinRel(d.ideal_rel_dev, 1e-12));
}

TEST_CASE("quick_fit_f0 agrees with the regression on noiseless sweeps", "[quick]") {
  for (const double f0 : {39.6e6, 97.73e6}) {
    const auto dev = DeviceParams::from_f0(f0);
    const Topology topo(1000.0, 10.0);
    const auto rec = analytic_sweep(dev, topo, SweepPlan{1e3, 3e6, 512, Spacing::Linear});
    const double fitted = fit_f0(rec).f0;
    CHECK_THAT(quick_fit_f0(rec, 2.0), WithinRel(fitted, 1e-3));
    // y0 is read at 1 kHz, not DC: a few ppm bias.
    CHECK_THAT(quick_fit_f0(rec, 2.0), WithinRel(f0, 1e-5));

    QuickOptions topology_free;
    topology_free.use_topology_gain = false;
    CHECK_THAT(quick_fit_f0(rec, 2.0, topology_free), WithinRel(fitted, 1e-3));
    // The lowest decile must sit on the plateau, so use log spacing.
    const auto log_rec = analytic_sweep(dev, topo, SweepPlan{1e3, 3e6, 512, Spacing::Log});
    QuickOptions decile;
    decile.dc_gain = DcGainEstimate::LowestDecile;
    CHECK_THAT(quick_fit_f0(log_rec, 2.0, decile), WithinRel(fitted, 1e-3));
    CHECK_THAT(quick_fit_f0(rec, std::sqrt(2.0)), WithinRel(fitted, 1e-3));
  }
}

TEST_CASE("quick_fit reports its bracket and rejects bad inputs", "[quick]") {
  const auto dev = DeviceParams::from_f0(97.73e6);
  const Topology topo(1000.0, 10.0);
  const auto rec = analytic_sweep(dev, topo, SweepPlan{1e3, 3e6, 100, Spacing::Linear});
  const auto q = quick_fit(rec, 2.0);
  CHECK(q.upper == q.lower + 1);
  CHECK(rec[q.lower].gain > q.y0 / 2.0);
  CHECK(rec[q.upper].gain <= q.y0 / 2.0);
  CHECK(q.f_1_over_n > rec[q.lower].f_hz);
  CHECK(q.f_1_over_n <= rec[q.upper].f_hz);
  CHECK(q.gain_factor == topo.ideal_gain());

  CHECK_THROWS_AS(quick_fit_f0(rec, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(quick_fit_f0(rec, 0.5), std::invalid_argument);

  const auto narrow = analytic_sweep(dev, topo, SweepPlan{});
  try {
    quick_fit_f0(narrow, 2.0);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()) == "sweep range too narrow for n");
  }
  CHECK(max_attainable_n(narrow) < 1.01);
  CHECK(max_attainable_n(rec) > 2.0);
}

TEST_CASE("quick method spread under 3% gain noise", "[quick][noise]") {
  // A dozen devices read with 3% gain noise: the quick estimate scatters by a
  // few percent, the same order as the noise that produced it.
  const auto dev = DeviceParams::from_f0(46.6e6);
  const Topology topo(1000.0, 10.0);
  const auto clean = analytic_sweep(dev, topo, SweepPlan{1e3, 2e6, 512, Spacing::Linear});
  QuickOptions opts;
  opts.dc_gain = DcGainEstimate::LowestDecile;
  std::vector<double> est;
  for (std::uint64_t device = 0; device < 12; ++device)
    est.push_back(quick_fit_f0(apply_noise(clean, {0.03}, 1000 + device), 2.0, opts));
  const double spread = stddev(est) / mean(est);
  INFO("relative spread " << spread);
  CHECK(spread > 0.015);
  CHECK(spread < 0.06);
  CHECK_THAT(mean(est), WithinRel(46.6e6, 0.05));
}

TEST_CASE("quick and regression estimates agree within the propagated uncertainty", "[quick][property]") {
  const auto dev = DeviceParams::from_f0(97.73e6);
  const Topology topo(1000.0, 10.0);
  const auto clean = analytic_sweep(dev, topo, SweepPlan{1e3, 3e6, 512, Spacing::Linear});
  std::vector<double> diff;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto noisy = apply_noise(clean, {0.003}, seed);
    diff.push_back(quick_fit_f0(noisy, 2.0) - fit_f0(noisy).f0);
  }
  const double standard_error = stddev(diff) / std::sqrt(static_cast<double>(diff.size()));
  CHECK(std::abs(mean(diff)) <= 3.0 * standard_error);
}

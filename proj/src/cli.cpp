#include "opamp/cli.hpp"

#include <fmt/core.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "opamp/error.hpp"
#include "opamp/timesim.hpp"
#include "opamp/transfer.hpp"

namespace opamp::cli {

namespace {

constexpr double kMHz = 1e6;

std::string spacing_name(Spacing s) { return s == Spacing::Linear ? "linear" : "log"; }

std::vector<std::string> synth_comments(const io::RunConfig& cfg, const char* tool) {
  using io::format_number;
  std::vector<std::string> c;
  c.push_back(fmt::format("# opampctl {}", tool));
  c.push_back("# seed: " + std::to_string(cfg.seed));
  c.push_back("# truth_f0_hz: " + format_number(cfg.f0_hz));
  c.push_back("# g0: " + format_number(cfg.g0));
  c.push_back("# R_ohm: " + format_number(cfg.feedback_r));
  c.push_back("# r_ohm: " + (cfg.gain_r == kOpen ? std::string("open") : format_number(cfg.gain_r)));
  if (cfg.divider) {
    c.push_back("# divider_r1_ohm: " + format_number(cfg.divider->r1));
    c.push_back("# divider_r2_ohm: " + format_number(cfg.divider->r2));
  }
  if (cfg.buffer_f0_hz) c.push_back("# buffer_f0_hz: " + format_number(*cfg.buffer_f0_hz));
  c.push_back("# sigma_rel: " + format_number(cfg.noise.sigma_rel));
  c.push_back(fmt::format("# plan: {} points, {} to {} Hz, {}", cfg.plan.n_points, format_number(cfg.plan.f_min),
                          format_number(cfg.plan.f_max), spacing_name(cfg.plan.spacing)));
  return c;
}

// Topology from R_ohm/r_ohm comments, if both parse.
std::optional<Topology> metadata_topology(const io::SweepFile& sweep) {
  const auto meta = sweep.metadata();
  const auto r_big = meta.find("R_ohm");
  const auto r_small = meta.find("r_ohm");
  if (r_big == meta.end() || r_small == meta.end()) return std::nullopt;
  const auto feedback = io::parse_number(r_big->second);
  const auto gain = r_small->second == "open" ? std::optional<double>(kOpen) : io::parse_number(r_small->second);
  if (!feedback || !gain) return std::nullopt;
  return Topology(*feedback, *gain);
}

std::optional<double> metadata_number(const io::SweepFile& sweep, const std::string& key) {
  const auto meta = sweep.metadata();
  const auto it = meta.find(key);
  if (it == meta.end()) return std::nullopt;
  return io::parse_number(it->second);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create directory '" + dir.string() + "': " + ec.message(), 0);
}

std::ofstream open_plot(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path.string() + "' for writing", 0);
  return f;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x6d63u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

io::SweepFile cmd_synth(const io::RunConfig& cfg) {
  cfg.validate();
  const auto record =
      run_sweep(cfg.device(), cfg.topology(), cfg.plan, cfg.noise, cfg.sim, cfg.seed, cfg.buffer());
  return io::SweepFile::from_record(record, synth_comments(cfg, "synth"));
}

FitResult cmd_fit(const io::SweepFile& sweep, const FitCommand& opts, std::ostream& out) {
  const auto topo = opts.topology ? opts.topology : metadata_topology(sweep);
  const auto record = sweep.to_record(topo);
  const auto fit = fit_f0(record, FitOptions{opts.weighted});

  fmt::print(out, "points:     {}\n", fit.n_points);
  fmt::print(out, "f0:         {:.6g} Hz ({:.6g} MHz)\n", fit.f0, fit.f0 / kMHz);
  fmt::print(out, "slope:      {:.6g} 1/Hz^2\n", fit.slope);
  fmt::print(out, "intercept:  {:.6g}\n", fit.intercept);
  if (fit.intercept_expected) {
    fmt::print(out, "expected:   {:.6g} (relative deviation {:.6g})\n", *fit.intercept_expected,
               *fit.intercept_rel_dev);
    if (fit.intercept_warning())
      fmt::print(out, "warning:    intercept deviates by more than {:.0f}%, check gain calibration\n",
                 100.0 * FitResult::kInterceptWarnThreshold);
  }
  fmt::print(out, "corr:       {:.6g}\n", fit.corr);
  if (const auto truth = metadata_number(sweep, "truth_f0_hz"))
    fmt::print(out, "truth f0:   {:.6g} Hz (relative error {:.6g})\n", *truth, (fit.f0 - *truth) / *truth);

  if (opts.plot_dir) {
    ensure_dir(*opts.plot_dir);
    auto points = open_plot(*opts.plot_dir / "fit_points.csv");
    points << "f_squared_hz2,inv_gain_squared\n";
    for (const auto& p : record.points())
      points << io::format_number(p.f_hz * p.f_hz) << ',' << io::format_number(1.0 / (p.gain * p.gain)) << '\n';
    auto line = open_plot(*opts.plot_dir / "fit_line.csv");
    line << "f_squared_hz2,inv_gain_squared\n";
    const double u_lo = record[0].f_hz * record[0].f_hz;
    const double u_hi = record[record.size() - 1].f_hz * record[record.size() - 1].f_hz;
    constexpr int kLineSamples = 64;
    for (int i = 0; i < kLineSamples; ++i) {
      const double u = u_lo + (u_hi - u_lo) * i / (kLineSamples - 1);
      line << io::format_number(u) << ',' << io::format_number(fit.intercept + fit.slope * u) << '\n';
    }
  }
  return fit;
}

QuickResult cmd_quick(const io::SweepFile& sweep, const QuickCommand& opts, std::ostream& out) {
  if (!(opts.n > 1.0)) throw std::invalid_argument(fmt::format("--n must be > 1, got {:g}", opts.n));
  const auto topo = opts.topology ? opts.topology : metadata_topology(sweep);
  const auto record = sweep.to_record(topo);
  QuickOptions qo;
  qo.dc_gain = opts.decile_y0 ? DcGainEstimate::LowestDecile : DcGainEstimate::FirstPoint;
  QuickResult q;
  try {
    q = quick_fit(record, opts.n, qo);
  } catch (const FitError& e) {
    throw FitError(fmt::format("{} (max attainable n for this sweep: {:.6g})", e.what(),
                               max_attainable_n(record, qo.dc_gain)));
  }
  fmt::print(out, "n:          {:.6g}\n", opts.n);
  fmt::print(out, "y0:         {:.6g}\n", q.y0);
  fmt::print(out, "gain used:  {:.6g}\n", q.gain_factor);
  fmt::print(out, "f_1/n:      {:.6g} Hz\n", q.f_1_over_n);
  fmt::print(out, "bracket:    [{}] {:.6g} Hz, gain {:.6g}\n", q.lower, record[q.lower].f_hz, record[q.lower].gain);
  fmt::print(out, "            [{}] {:.6g} Hz, gain {:.6g}\n", q.upper, record[q.upper].f_hz, record[q.upper].gain);
  fmt::print(out, "f0:         {:.6g} Hz ({:.6g} MHz)\n", q.f0, q.f0 / kMHz);
  return q;
}

BatchDistribution cmd_batch(const io::BatchFile& batch, const std::optional<std::filesystem::path>& plot_dir,
                            std::ostream& out) {
  if (batch.rows.size() < 2)
    throw ParseError(fmt::format("batch needs at least 2 rows, found {}", batch.rows.size()), 0);
  auto dist = analyze_batch(batch.rows);
  fmt::print(out, "N:          {}\n", dist.n);
  fmt::print(out, "mean:       {:.6g} Hz ({:.6g} MHz)\n", dist.mean, dist.mean / kMHz);
  fmt::print(out, "stddev:     {:.6g} Hz ({:.6g} MHz)\n", dist.stddev, dist.stddev / kMHz);
  fmt::print(out, "spread:     {:.6g} %\n", 100.0 * dist.relative_spread());
  if (dist.degenerate()) {
    fmt::print(out, "degenerate batch: all samples are equal (stddev 0), ECDF and normal fit skipped\n");
    return dist;
  }
  const double sqrt_n = std::sqrt(static_cast<double>(dist.n));
  fmt::print(out, "kolmogorov_d: {:.6g} (sqrt(N)*d = {:.6g}, 5% asymptotic critical {})\n", dist.fit.kolmogorov_d,
             sqrt_n * dist.fit.kolmogorov_d, kKolmogorovCritical5);
  fmt::print(out, "kolmogorov_d_one_sided: {:.6g}\n", dist.fit.kolmogorov_d_one_sided);
  fmt::print(out, "cdf_corr:   {:.6g}\n", dist.fit.cdf_corr);

  if (plot_dir) {
    ensure_dir(*plot_dir);
    auto ecdf = open_plot(*plot_dir / "ecdf.csv");
    ecdf << "deviation_over_sigma,cumulative_fraction\n";
    for (const auto& p : dist.ecdf) ecdf << io::format_number(p.x) << ',' << io::format_number(p.p) << '\n';
    auto curve = open_plot(*plot_dir / "normal_cdf.csv");
    curve << "deviation_over_sigma,normal_cdf\n";
    const double lo = std::min(-4.0, dist.ecdf.front().x);
    const double hi = std::max(4.0, dist.ecdf.back().x);
    constexpr int kCurveSamples = 161;
    for (int i = 0; i < kCurveSamples; ++i) {
      const double x = lo + (hi - lo) * i / (kCurveSamples - 1);
      curve << io::format_number(x) << ',' << io::format_number(normal_cdf(x)) << '\n';
    }
  }
  return dist;
}

McSummary cmd_mc(const io::RunConfig& cfg, const McCommand& opts, std::ostream& out) {
  cfg.validate();
  if (opts.trials < 1) throw std::invalid_argument("--trials must be >= 1");

  // The simulated waveforms do not depend on the seed; only the gain noise does.
  const auto clean = simulate_sweep(cfg.device(), cfg.topology(), cfg.plan, cfg.sim, cfg.buffer());

  McSummary s;
  s.batch.comments = synth_comments(cfg, "mc");
  s.batch.comments.push_back(fmt::format("# trials: {}", opts.trials));
  int passed = 0;
  s.min_corr = 1.0;
  std::vector<double> f0s;
  for (int t = 0; t < opts.trials; ++t) {
    const auto record = apply_noise(clean, cfg.noise, trial_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const auto fit = fit_f0(record);
    s.batch.rows.push_back({fmt::format("trial-{:04d}", t), fit.f0});
    f0s.push_back(fit.f0);
    s.min_corr = std::min(s.min_corr, fit.corr);
    if (fit.corr >= opts.corr_threshold) ++passed;
  }
  s.pass_fraction = static_cast<double>(passed) / opts.trials;

  fmt::print(out, "trials:     {}\n", opts.trials);
  fmt::print(out, "truth f0:   {:.6g} Hz\n", cfg.f0_hz);
  if (f0s.size() >= 2) {
    const auto st = batch_stats(f0s);
    fmt::print(out, "mean f0:    {:.6g} Hz ({:.6g} MHz)\n", st.mean, st.mean / kMHz);
    fmt::print(out, "stddev f0:  {:.6g} Hz (spread {:.6g} %)\n", st.stddev, 100.0 * st.stddev / st.mean);
  } else {
    fmt::print(out, "f0:         {:.6g} Hz\n", f0s.front());
  }
  fmt::print(out, "min corr:   {:.6g}\n", s.min_corr);
  fmt::print(out, "corr >= {:.6g}: {}/{} ({:.6g} %)\n", opts.corr_threshold, passed, opts.trials,
             100.0 * s.pass_fraction);
  return s;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-pole op-amp crossover frequency toolkit", "opampctl"};
  app.require_subcommand(1);

  // Shared synthesis overrides.
  struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise, fmin, fmax, f0, g0, big_r, small_r;
    std::optional<int> points;
    std::optional<std::string> spacing;
  };
  auto add_overrides = [](CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--noise", o.noise, "relative gain noise sigma");
    sub->add_option("--points", o.points, "number of sweep points");
    sub->add_option("--fmin", o.fmin, "lowest sweep frequency [Hz]");
    sub->add_option("--fmax", o.fmax, "highest sweep frequency [Hz]");
    sub->add_option("--f0", o.f0, "device crossover frequency [Hz]");
    sub->add_option("--g0", o.g0, "device DC open-loop gain");
    sub->add_option("--R", o.big_r, "feedback resistance [ohm]");
    sub->add_option("--r", o.small_r, "gain resistance [ohm]");
    sub->add_option("--spacing", o.spacing, "sweep spacing")->check(CLI::IsMember({"linear", "log"}));
  };
  auto build_config = [](const Overrides& o) {
    io::RunConfig cfg = o.config.empty() ? io::RunConfig{} : io::load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.noise) cfg.noise.sigma_rel = *o.noise;
    if (o.points) cfg.plan.n_points = *o.points;
    if (o.fmin) cfg.plan.f_min = *o.fmin;
    if (o.fmax) cfg.plan.f_max = *o.fmax;
    if (o.f0) cfg.f0_hz = *o.f0;
    if (o.g0) cfg.g0 = *o.g0;
    if (o.big_r) cfg.feedback_r = *o.big_r;
    if (o.small_r) cfg.gain_r = *o.small_r;
    if (o.spacing) cfg.plan.spacing = *o.spacing == "log" ? Spacing::Log : Spacing::Linear;
    cfg.validate();
    return cfg;
  };
  auto topology_flags = [](const std::optional<double>& big_r, const std::optional<double>& small_r) {
    if (big_r.has_value() != small_r.has_value()) throw std::invalid_argument("--R and --r must be given together");
    return big_r ? std::optional<Topology>(Topology(*big_r, *small_r)) : std::nullopt;
  };

  Overrides synth_o;
  std::string synth_out = "-";
  auto* synth = app.add_subcommand("synth", "simulate a gain sweep and write it as CSV");
  add_overrides(synth, synth_o);
  synth->add_option("-o,--output", synth_out, "output CSV path ('-' for stdout)");

  std::string fit_path;
  std::optional<double> fit_big_r, fit_small_r;
  std::optional<std::string> fit_plot;
  bool fit_weighted = false;
  auto* fit = app.add_subcommand("fit", "fit f0 by linear regression of 1/Y^2 against f^2");
  fit->add_option("sweep", fit_path, "sweep CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--R", fit_big_r, "feedback resistance [ohm]");
  fit->add_option("--r", fit_small_r, "gain resistance [ohm]");
  fit->add_option("--plot-data", fit_plot, "directory for fit_points.csv and fit_line.csv");
  fit->add_flag("--weighted", fit_weighted, "weight points by 1/(1/Y^2)^2");

  std::string quick_path;
  double quick_n = 2.0;
  std::optional<double> quick_big_r, quick_small_r;
  bool quick_decile = false;
  auto* quick = app.add_subcommand("quick", "quick f0 estimate from the frequency where the gain drops n-fold");
  quick->add_option("sweep", quick_path, "sweep CSV")->required()->check(CLI::ExistingFile);
  quick->add_option("--n", quick_n, "gain reduction ratio (> 1)");
  quick->add_option("--R", quick_big_r, "feedback resistance [ohm]");
  quick->add_option("--r", quick_small_r, "gain resistance [ohm]");
  quick->add_flag("--decile-y0", quick_decile, "average the lowest 10% of points for Y0");

  std::string batch_path;
  std::optional<std::string> batch_plot;
  auto* batch = app.add_subcommand("batch", "distribution analysis of many f0 values");
  batch->add_option("batch", batch_path, "batch CSV")->required()->check(CLI::ExistingFile);
  batch->add_option("--plot-data", batch_plot, "directory for ecdf.csv and normal_cdf.csv");

  Overrides mc_o;
  McCommand mc_cmd;
  std::string mc_out;
  auto* mc = app.add_subcommand("mc", "Monte-Carlo repeat of synth + fit");
  add_overrides(mc, mc_o);
  mc->add_option("--trials", mc_cmd.trials, "number of trials");
  mc->add_option("--corr-threshold", mc_cmd.corr_threshold, "correlation pass threshold");
  mc->add_option("-o,--output", mc_out, "batch CSV of fitted f0 values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      const auto file = cmd_synth(build_config(synth_o));
      if (synth_out == "-")
        io::write_sweep(out, file);
      else
        io::write_sweep_file(synth_out, file);
    } else if (*fit) {
      FitCommand c{topology_flags(fit_big_r, fit_small_r), std::nullopt, fit_weighted};
      if (fit_plot) c.plot_dir = *fit_plot;
      cmd_fit(io::read_sweep_file(fit_path), c, out);
    } else if (*quick) {
      QuickCommand c{quick_n, topology_flags(quick_big_r, quick_small_r), quick_decile};
      cmd_quick(io::read_sweep_file(quick_path), c, out);
    } else if (*batch) {
      std::optional<std::filesystem::path> dir;
      if (batch_plot) dir = *batch_plot;
      cmd_batch(io::read_batch_file(batch_path), dir, out);
    } else if (*mc) {
      const auto summary = cmd_mc(build_config(mc_o), mc_cmd, out);
      if (!mc_out.empty()) io::write_batch_file(mc_out, summary.batch);
    }
  } catch (const ParseError& e) {
    fmt::print(err, "parse error: {}\n", e.what());
    return kParse;
  } catch (const FitError& e) {
    fmt::print(err, "fit error: {}\n", e.what());
    return kNumerical;
  } catch (const SimulationError& e) {
    fmt::print(err, "simulation error: {}\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kFailure;
  }
  return kOk;
}

}  // namespace opamp::cli

#pragma once

// Command implementations behind the `opampctl` tool. Each command writes a
// human-readable report to `out`; run_cli maps exceptions to exit codes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "opamp/distribution.hpp"
#include "opamp/extraction.hpp"
#include "opamp/io.hpp"

namespace opamp::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParse = 3,
  kNumerical = 4,
};

/// Runs the configured sweep and returns the file (truth and seed in comments).
io::SweepFile cmd_synth(const io::RunConfig& cfg);

struct FitCommand {
  std::optional<Topology> topology;  ///< falls back to R_ohm/r_ohm metadata
  std::optional<std::filesystem::path> plot_dir;
  bool weighted = false;
};
FitResult cmd_fit(const io::SweepFile& sweep, const FitCommand& opts, std::ostream& out);

struct QuickCommand {
  double n = 2.0;
  std::optional<Topology> topology;
  bool decile_y0 = false;
};
QuickResult cmd_quick(const io::SweepFile& sweep, const QuickCommand& opts, std::ostream& out);

BatchDistribution cmd_batch(const io::BatchFile& batch, const std::optional<std::filesystem::path>& plot_dir,
                            std::ostream& out);

struct McCommand {
  int trials = 100;
  double corr_threshold = 0.999;
};
struct McSummary {
  io::BatchFile batch;
  double pass_fraction;  ///< trials with corr >= threshold
  double min_corr;
};
McSummary cmd_mc(const io::RunConfig& cfg, const McCommand& opts, std::ostream& out);

/// Seed of Monte-Carlo trial `trial`, a pure function of (base, trial).
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial);

/// Full command-line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opamp::cli

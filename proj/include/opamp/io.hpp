#pragma once

// CSV interchange files and the run configuration.
//
// Sweep files carry one of two headers, "frequency_hz,gain" or
// "frequency_hz,u_in_v,u_out_v". Batch files carry "sample_id,f0_hz".
// Lines starting with '#' are comments; "# key: value" comments are also
// exposed as metadata. Numbers are written in shortest round-trip form, so
// reading an emitted file and writing it again reproduces it byte for byte.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opamp/device.hpp"
#include "opamp/distribution.hpp"
#include "opamp/sweep_record.hpp"
#include "opamp/timesim.hpp"

namespace opamp::io {

inline constexpr std::string_view kGainHeader = "frequency_hz,gain";
inline constexpr std::string_view kAmplitudeHeader = "frequency_hz,u_in_v,u_out_v";
inline constexpr std::string_view kBatchHeader = "sample_id,f0_hz";

/// Shortest decimal that parses back to the same double; "inf"/"-inf"/"nan" otherwise.
std::string format_number(double v);
/// Whole-field, locale-independent parse. Empty optional on failure or non-finite.
std::optional<double> parse_number(std::string_view field);

struct SweepRow {
  double f_hz;
  double gain;
  std::optional<double> u_in_v;  ///< set for the amplitude schema
  std::optional<double> u_out_v;
};

struct SweepFile {
  enum class Schema { Gain, Amplitudes };
  Schema schema = Schema::Gain;
  std::vector<std::string> comments;  ///< full lines including '#', in order
  std::vector<SweepRow> rows;

  /// Values of "# key: value" comment lines.
  std::map<std::string, std::string> metadata() const;
  SweepRecord to_record(std::optional<Topology> topology = std::nullopt, std::string label = {}) const;
  static SweepFile from_record(const SweepRecord& record, std::vector<std::string> comments = {});
};

/// Throws ParseError with the 1-based line number.
SweepFile read_sweep(std::istream& in);
SweepFile read_sweep_file(const std::string& path);
void write_sweep(std::ostream& out, const SweepFile& file);
void write_sweep_file(const std::string& path, const SweepFile& file);

struct BatchFile {
  std::vector<std::string> comments;
  std::vector<BatchSample> rows;
};

BatchFile read_batch(std::istream& in);
BatchFile read_batch_file(const std::string& path);
void write_batch(std::ostream& out, const BatchFile& file);
void write_batch_file(const std::string& path, const BatchFile& file);

/// Flat typed configuration for synthesis and Monte-Carlo runs.
struct RunConfig {
  double f0_hz = 97.73e6;
  double g0 = kOpen;
  double feedback_r = 1000.0;
  double gain_r = 10.0;  ///< kOpen for a repeater
  std::optional<Divider> divider;
  std::optional<double> buffer_f0_hz;  ///< simulate the input follower when set
  SweepPlan plan{};
  NoiseModel noise{};
  SimConfig sim{};
  std::uint64_t seed = 1;

  DeviceParams device() const;
  Topology topology() const;
  std::optional<DeviceParams> buffer() const;
  /// Re-validates every derived type; throws std::invalid_argument naming the field.
  void validate() const;
};

/// JSON object with keys: f0_hz, g0 (number or "inf"), R_ohm, r_ohm
/// (number or "open"), divider_r1_ohm, divider_r2_ohm, buffer_f0_hz,
/// f_min_hz, f_max_hz, n_points, spacing ("linear"|"log"), sigma_rel,
/// steps_per_period, settle_periods, measure_periods, max_step_over_tau, seed. Missing keys
/// keep their defaults; unknown keys and type mismatches are rejected.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace opamp::io

#include "opamp/io.hpp"

#include <fmt/core.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "opamp/error.hpp"

namespace opamp::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Walks a CSV stream: collects comments, checks the header, hands each data
// row (already split) to `on_row` together with its line number.
template <typename OnHeader, typename OnRow>
void scan_csv(std::istream& in, std::vector<std::string>& comments, OnHeader on_header, OnRow on_row) {
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      comments.emplace_back(line);
      continue;
    }
    if (!have_header) {
      on_header(line, line_no);
      have_header = true;
      continue;
    }
    on_row(split_commas(line), line_no);
  }
  if (!have_header) throw ParseError("missing header row", line_no);
}

double require_number(std::string_view field, const char* column, std::size_t line) {
  const auto v = parse_number(field);
  if (!v) throw ParseError(fmt::format("column {}: '{}' is not a finite number", column, field), line);
  return *v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing", 0);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return in;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::map<std::string, std::string> SweepFile::metadata() const {
  std::map<std::string, std::string> out;
  for (const auto& c : comments) {
    std::string_view body = trim(std::string_view(c).substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) continue;
    out[std::string(trim(body.substr(0, colon)))] = std::string(trim(body.substr(colon + 1)));
  }
  return out;
}

SweepRecord SweepFile::to_record(std::optional<Topology> topology, std::string label) const {
  std::vector<SweepPoint> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.push_back({r.f_hz, r.gain});
  return SweepRecord(std::move(pts), std::move(topology), std::move(label));
}

SweepFile SweepFile::from_record(const SweepRecord& record, std::vector<std::string> comments) {
  SweepFile f;
  f.comments = std::move(comments);
  for (const auto& p : record.points()) f.rows.push_back({p.f_hz, p.gain, std::nullopt, std::nullopt});
  return f;
}

SweepFile read_sweep(std::istream& in) {
  SweepFile file;
  scan_csv(
      in, file.comments,
      [&](std::string_view header, std::size_t line) {
        if (header == kGainHeader)
          file.schema = SweepFile::Schema::Gain;
        else if (header == kAmplitudeHeader)
          file.schema = SweepFile::Schema::Amplitudes;
        else
          throw ParseError(fmt::format("unexpected header '{}', want '{}' or '{}'", header, kGainHeader,
                                       kAmplitudeHeader),
                           line);
      },
      [&](const std::vector<std::string_view>& fields, std::size_t line) {
        const std::size_t want = file.schema == SweepFile::Schema::Gain ? 2 : 3;
        if (fields.size() != want)
          throw ParseError(fmt::format("expected {} fields, found {}", want, fields.size()), line);
        SweepRow row{};
        row.f_hz = require_number(fields[0], "frequency_hz", line);
        if (!(row.f_hz > 0.0)) throw ParseError("frequency_hz must be > 0", line);
        if (file.schema == SweepFile::Schema::Gain) {
          row.gain = require_number(fields[1], "gain", line);
          if (!(row.gain > 0.0)) throw ParseError("gain must be > 0", line);
        } else {
          row.u_in_v = require_number(fields[1], "u_in_v", line);
          row.u_out_v = require_number(fields[2], "u_out_v", line);
          if (!(*row.u_in_v > 0.0) || !(*row.u_out_v > 0.0))
            throw ParseError("amplitudes must be > 0", line);
          row.gain = *row.u_out_v / *row.u_in_v;
        }
        if (!file.rows.empty() && !(row.f_hz > file.rows.back().f_hz))
          throw ParseError(fmt::format("row {}: frequencies must be strictly increasing", file.rows.size() + 1),
                           line);
        file.rows.push_back(row);
      });
  if (file.rows.size() < 3)
    throw ParseError(fmt::format("sweep needs at least 3 data rows, found {}", file.rows.size()), 0);
  return file;
}

SweepFile read_sweep_file(const std::string& path) {
  auto in = open_in(path);
  return read_sweep(in);
}

void write_sweep(std::ostream& out, const SweepFile& file) {
  for (const auto& c : file.comments) out << c << '\n';
  if (file.schema == SweepFile::Schema::Gain) {
    out << kGainHeader << '\n';
    for (const auto& r : file.rows) out << format_number(r.f_hz) << ',' << format_number(r.gain) << '\n';
  } else {
    out << kAmplitudeHeader << '\n';
    for (const auto& r : file.rows)
      out << format_number(r.f_hz) << ',' << format_number(r.u_in_v.value_or(1.0)) << ','
          << format_number(r.u_out_v.value_or(r.gain)) << '\n';
  }
}

void write_sweep_file(const std::string& path, const SweepFile& file) {
  auto out = open_out(path);
  write_sweep(out, file);
}

BatchFile read_batch(std::istream& in) {
  BatchFile file;
  std::set<std::string, std::less<>> seen;
  scan_csv(
      in, file.comments,
      [&](std::string_view header, std::size_t line) {
        if (header != kBatchHeader)
          throw ParseError(fmt::format("unexpected header '{}', want '{}'", header, kBatchHeader), line);
      },
      [&](const std::vector<std::string_view>& fields, std::size_t line) {
        if (fields.size() != 2) throw ParseError(fmt::format("expected 2 fields, found {}", fields.size()), line);
        if (fields[0].empty()) throw ParseError("empty sample_id", line);
        if (seen.contains(fields[0])) throw ParseError(fmt::format("duplicate sample_id '{}'", fields[0]), line);
        const double f0 = require_number(fields[1], "f0_hz", line);
        if (!(f0 > 0.0)) throw ParseError("f0_hz must be > 0", line);
        seen.emplace(fields[0]);
        file.rows.push_back({std::string(fields[0]), f0});
      });
  return file;
}

BatchFile read_batch_file(const std::string& path) {
  auto in = open_in(path);
  return read_batch(in);
}

void write_batch(std::ostream& out, const BatchFile& file) {
  for (const auto& c : file.comments) out << c << '\n';
  out << kBatchHeader << '\n';
  for (const auto& r : file.rows) out << r.id << ',' << format_number(r.f0_hz) << '\n';
}

void write_batch_file(const std::string& path, const BatchFile& file) {
  auto out = open_out(path);
  write_batch(out, file);
}

DeviceParams RunConfig::device() const { return DeviceParams::from_f0(f0_hz, g0); }

Topology RunConfig::topology() const { return Topology(feedback_r, gain_r, divider); }

std::optional<DeviceParams> RunConfig::buffer() const {
  if (!buffer_f0_hz) return std::nullopt;
  return DeviceParams::from_f0(*buffer_f0_hz);
}

void RunConfig::validate() const {
  auto field = [](const char* name, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("config field '{}': {}", name, e.what()));
    }
  };
  field("f0_hz/g0", [&] { device(); });
  field("R_ohm/r_ohm/divider", [&] { topology(); });
  field("buffer_f0_hz", [&] { buffer(); });
  field("f_min_hz/f_max_hz/n_points", [&] { plan.validate(); });
  field("sigma_rel", [&] {
    if (!(noise.sigma_rel >= 0.0) || !std::isfinite(noise.sigma_rel))
      throw std::invalid_argument("must be finite and >= 0");
  });
  field("steps_per_period/settle_periods/measure_periods/max_step_over_tau", [&] { sim.validate(); });
}

RunConfig parse_run_config(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  if (!doc.is_object()) throw ParseError("config must be a JSON object", 0);

  RunConfig cfg;
  std::optional<double> r1, r2;
  auto number = [](const std::string& key, const json& v) {
    if (!v.is_number()) throw std::invalid_argument(fmt::format("config field '{}': expected a number", key));
    return v.get<double>();
  };
  auto integer = [](const std::string& key, const json& v) {
    if (!v.is_number_integer())
      throw std::invalid_argument(fmt::format("config field '{}': expected an integer", key));
    return v.get<long long>();
  };
  auto small_int = [&](const std::string& key, const json& v) {
    const long long i = integer(key, v);
    if (i < 0 || i > 1'000'000'000) throw std::invalid_argument(fmt::format("config field '{}': out of range", key));
    return static_cast<int>(i);
  };
  auto number_or = [&](const std::string& key, const json& v, const char* word) {
    if (v.is_string() && v.get<std::string>() == word) return kOpen;
    if (!v.is_number())
      throw std::invalid_argument(fmt::format("config field '{}': expected a number or \"{}\"", key, word));
    return v.get<double>();
  };

  for (const auto& [key, v] : doc.items()) {
    if (key == "f0_hz") cfg.f0_hz = number(key, v);
    else if (key == "g0") cfg.g0 = number_or(key, v, "inf");
    else if (key == "R_ohm") cfg.feedback_r = number(key, v);
    else if (key == "r_ohm") cfg.gain_r = number_or(key, v, "open");
    else if (key == "divider_r1_ohm") r1 = number(key, v);
    else if (key == "divider_r2_ohm") r2 = number(key, v);
    else if (key == "buffer_f0_hz") cfg.buffer_f0_hz = number(key, v);
    else if (key == "f_min_hz") cfg.plan.f_min = number(key, v);
    else if (key == "f_max_hz") cfg.plan.f_max = number(key, v);
    else if (key == "n_points") cfg.plan.n_points = small_int(key, v);
    else if (key == "spacing") {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "linear") cfg.plan.spacing = Spacing::Linear;
      else if (s == "log") cfg.plan.spacing = Spacing::Log;
      else throw std::invalid_argument("config field 'spacing': expected \"linear\" or \"log\"");
    }
    else if (key == "sigma_rel") cfg.noise.sigma_rel = number(key, v);
    else if (key == "steps_per_period") cfg.sim.steps_per_period = small_int(key, v);
    else if (key == "settle_periods") cfg.sim.settle_periods = small_int(key, v);
    else if (key == "measure_periods") cfg.sim.measure_periods = small_int(key, v);
    else if (key == "max_step_over_tau") cfg.sim.max_step_over_tau = number(key, v);
    else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw std::invalid_argument("config field 'seed': expected a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    }
    else throw std::invalid_argument(fmt::format("config field '{}': unknown key", key));
  }
  if (r1.has_value() != r2.has_value())
    throw std::invalid_argument("config fields 'divider_r1_ohm' and 'divider_r2_ohm' must be given together");
  if (r1) cfg.divider = Divider{*r1, *r2};
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace opamp::io

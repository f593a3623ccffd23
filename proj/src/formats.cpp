#include "gaze360/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>

namespace gaze360 {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({number++, line});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_num(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return v;
}

// Splits leading `# key: value` lines from the body. The first entry must be
// `format: <expected>`.
struct Split {
  Header header;
  std::vector<std::size_t> header_lines;
  std::vector<Line> body;
};

Split split_header(std::string_view text, std::string_view expected_format) {
  Split out;
  bool in_header = true;
  for (const auto& line : split_lines(text)) {
    const auto t = trim(line.text);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (!in_header) continue;
      const auto body = trim(t.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos || trim(body.substr(0, colon)).empty()) {
        throw ParseError(line.number, "malformed header line (expected '# key: value')");
      }
      out.header.emplace_back(std::string(trim(body.substr(0, colon))),
                              std::string(trim(body.substr(colon + 1))));
      out.header_lines.push_back(line.number);
      continue;
    }
    in_header = false;
    out.body.push_back({line.number, t});
  }
  if (out.header.empty() || out.header.front().first != "format") {
    throw ParseError(0, "missing 'format' header entry");
  }
  if (out.header.front().second != expected_format) {
    throw ParseError(out.header_lines.front(), "unsupported format '" + out.header.front().second +
                                                   "', expected '" + std::string(expected_format) +
                                                   "'");
  }
  out.header.erase(out.header.begin());
  out.header_lines.erase(out.header_lines.begin());
  return out;
}

void append_header(std::string& out, std::string_view format, const Header& header) {
  out += "# format: ";
  out += format;
  out += '\n';
  for (const auto& [k, v] : header) {
    out += "# " + k + ": " + v + '\n';
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

std::size_t ValidationReport::count(ValidationIssue::Kind kind) const {
  std::size_t n = 0;
  for (const auto& i : issues) n += i.kind == kind;
  return n;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os << "sample lines: " << data_lines << "\n"
     << "skipped lines: " << skipped_lines << "\n"
     << "monotonicity violations: " << count(ValidationIssue::Kind::NonMonotonic) << "\n"
     << "malformed lines: " << count(ValidationIssue::Kind::Malformed) << "\n"
     << "out-of-range values: " << count(ValidationIssue::Kind::OutOfRange) << "\n"
     << "tracking-loss runs: " << tracking_loss.size() << "\n";
  for (const auto& i : issues) {
    const char* kind = i.kind == ValidationIssue::Kind::Malformed      ? "malformed"
                       : i.kind == ValidationIssue::Kind::NonMonotonic ? "monotonicity"
                                                                       : "out-of-range";
    os << "  line " << i.line << " [" << kind << "] " << i.message << "\n";
  }
  for (const auto& r : tracking_loss) {
    os << "  tracking loss at t=" << r.start_t << " us, " << r.n_samples << " samples\n";
  }
  return os.str();
}

std::vector<TrackingLossRun> tracking_loss_runs(const Recording& recording) {
  std::vector<TrackingLossRun> runs;
  const auto& s = recording.samples;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i].tracking_valid) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !s[j].tracking_valid) ++j;
    runs.push_back({i, j - i, s[i].t_us});
    i = j;
  }
  return runs;
}

ParsedRecording parse_recording(std::string_view text) {
  auto split = split_header(text, kRecordingFormat);
  ParsedRecording out;
  auto& meta = out.recording.meta;
  meta = RecordingMeta{};

  bool seen_rate = false, seen_fw = false, seen_fh = false, seen_fwp = false, seen_fhp = false,
       seen_vw = false, seen_vh = false;
  for (std::size_t k = 0; k < split.header.size(); ++k) {
    const auto& [key, value] = split.header[k];
    const std::size_t ln = split.header_lines[k];
    auto as_double = [&](bool& seen) {
      const auto v = parse_num<double>(value);
      if (!v) throw ParseError(ln, "header '" + key + "' is not a number");
      seen = true;
      return *v;
    };
    auto as_int = [&](bool& seen) {
      const auto v = parse_num<int>(value);
      if (!v) throw ParseError(ln, "header '" + key + "' is not an integer");
      seen = true;
      return *v;
    };
    if (key == "sampling_rate_hz") meta.sampling_rate_hz = as_double(seen_rate);
    else if (key == "fov_width_deg") meta.fov_width_deg = as_double(seen_fw);
    else if (key == "fov_height_deg") meta.fov_height_deg = as_double(seen_fh);
    else if (key == "fov_width_px") meta.fov_width_px = as_int(seen_fwp);
    else if (key == "fov_height_px") meta.fov_height_px = as_int(seen_fhp);
    else if (key == "video_width_px") meta.video_width_px = as_int(seen_vw);
    else if (key == "video_height_px") meta.video_height_px = as_int(seen_vh);
    else if (key == "video_id") meta.video_id = value;
    else if (key == "observer_id") meta.observer_id = value;
    else meta.extra.emplace_back(key, value);
  }
  if (!(seen_rate && seen_fw && seen_fh && seen_fwp && seen_fhp && seen_vw && seen_vh)) {
    throw ParseError(0, "header lacks a required key (sampling_rate_hz, fov_width_deg, "
                        "fov_height_deg, fov_width_px, fov_height_px, video_width_px, "
                        "video_height_px)");
  }
  try {
    meta.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }

  auto& report = out.report;
  auto& samples = out.recording.samples;
  for (const auto& line : split.body) {
    ++report.data_lines;
    auto skip = [&](ValidationIssue::Kind kind, std::string msg) {
      ++report.skipped_lines;
      report.issues.push_back({line.number, kind, std::move(msg)});
    };
    const auto f = fields(line.text);
    if (f.size() != 7) {
      skip(ValidationIssue::Kind::Malformed, "expected 7 fields, found " + std::to_string(f.size()));
      continue;
    }
    const auto t = parse_num<std::int64_t>(f[0]);
    std::optional<double> v[5];
    bool ok = t.has_value();
    for (int k = 0; k < 5; ++k) {
      v[k] = parse_num<double>(f[static_cast<std::size_t>(k) + 1]);
      ok = ok && v[k].has_value();
    }
    if (!ok || (f[6] != "0" && f[6] != "1")) {
      skip(ValidationIssue::Kind::Malformed, "unparseable field");
      continue;
    }
    if (!samples.empty() && *t <= samples.back().t_us) {
      skip(ValidationIssue::Kind::NonMonotonic,
           "timestamp " + std::to_string(*t) + " not after " + std::to_string(samples.back().t_us));
      continue;
    }
    GazeSample s;
    s.t_us = *t;
    s.gaze = SphericalDir::canonical(*v[0], *v[1]);
    s.head = HeadPose::canonical(*v[2], *v[3], *v[4]);
    s.tracking_valid = f[6] == "1";
    auto range_check = [&](double raw, double lo, double hi, bool hi_inclusive, const char* name,
                           double fixed) {
      const bool bad = raw < lo || (hi_inclusive ? raw > hi : raw >= hi);
      if (bad) {
        report.issues.push_back({line.number, ValidationIssue::Kind::OutOfRange,
                                 std::string(name) + " " + format_number(raw) +
                                     " canonicalised to " + format_number(fixed)});
      }
    };
    range_check(*v[0], -180.0, 180.0, false, "gaze_lon", s.gaze.lon);
    range_check(*v[1], -90.0, 90.0, true, "gaze_lat", s.gaze.lat);
    range_check(*v[2], -180.0, 180.0, false, "head_yaw", s.head.yaw);
    range_check(*v[3], -90.0, 90.0, true, "head_pitch", s.head.pitch);
    range_check(*v[4], -180.0, 180.0, false, "head_roll", s.head.roll);
    samples.push_back(s);
  }

  if (samples.empty()) throw ParseError(0, "recording has no valid sample lines");
  if (report.skipped_lines * 10 > report.data_lines) {
    std::string first;
    for (const auto& i : report.issues) {
      if (i.kind != ValidationIssue::Kind::OutOfRange) {
        first = "; first at line " + std::to_string(i.line) + ": " + i.message;
        break;
      }
    }
    throw ParseError(0, std::to_string(report.skipped_lines) + " of " +
                            std::to_string(report.data_lines) +
                            " sample lines skipped (more than 10%)" + first);
  }
  report.tracking_loss = tracking_loss_runs(out.recording);
  return out;
}

std::string serialize_recording(const Recording& recording) {
  const auto& m = recording.meta;
  Header header{
      {"sampling_rate_hz", format_number(m.sampling_rate_hz)},
      {"fov_width_deg", format_number(m.fov_width_deg)},
      {"fov_height_deg", format_number(m.fov_height_deg)},
      {"fov_width_px", std::to_string(m.fov_width_px)},
      {"fov_height_px", std::to_string(m.fov_height_px)},
      {"video_id", m.video_id},
      {"video_width_px", std::to_string(m.video_width_px)},
      {"video_height_px", std::to_string(m.video_height_px)},
      {"observer_id", m.observer_id},
  };
  header.insert(header.end(), m.extra.begin(), m.extra.end());
  std::string out;
  out.reserve(recording.samples.size() * 64 + 512);
  append_header(out, kRecordingFormat, header);
  for (const auto& s : recording.samples) {
    out += std::to_string(s.t_us);
    for (double v : {s.gaze.lon, s.gaze.lat, s.head.yaw, s.head.pitch, s.head.roll}) {
      out += ' ';
      out += format_number(v);
    }
    out += s.tracking_valid ? " 1\n" : " 0\n";
  }
  return out;
}

LabelFile parse_labels(std::string_view text) {
  auto split = split_header(text, kLabelFormat);
  LabelFile out;
  out.header = std::move(split.header);
  auto& track = out.track;
  for (const auto& line : split.body) {
    const auto f = fields(line.text);
    if (f.size() != 3) throw ParseError(line.number, "expected 3 fields: t_us primary secondary");
    const auto t = parse_num<std::int64_t>(f[0]);
    const auto p = primary_from_token(f[1]);
    const auto s = secondary_from_token(f[2]);
    if (!t) throw ParseError(line.number, "bad timestamp");
    if (!p) throw ParseError(line.number, "unknown primary label '" + std::string(f[1]) + "'");
    if (!s) throw ParseError(line.number, "unknown secondary label '" + std::string(f[2]) + "'");
    if (!track.t_us.empty() && *t <= track.t_us.back()) {
      throw ParseError(line.number, "timestamp not strictly increasing");
    }
    track.t_us.push_back(*t);
    track.primary.push_back(*p);
    track.secondary.push_back(*s);
  }
  return out;
}

std::string serialize_labels(const LabelTrack& track, const Header& header) {
  std::string out;
  out.reserve(track.size() * 24 + 256);
  append_header(out, kLabelFormat, header);
  for (std::size_t i = 0; i < track.size(); ++i) {
    out += std::to_string(track.t_us[i]);
    out += ' ';
    out += to_token(track.primary[i]);
    out += ' ';
    out += to_token(track.secondary[i]);
    out += '\n';
  }
  return out;
}

std::string serialize_events(const TieredEvents& events, const Header& header) {
  std::string out;
  append_header(out, kEventFormat, header);
  auto emit = [&](const char* tier, const std::vector<EventSegment>& evs) {
    for (const auto& e : evs) {
      out += tier;
      out += ' ' + std::to_string(e.start_t) + ' ' + std::to_string(e.end_t) + ' ';
      out += e.label.token();
      out += ' ' + std::to_string(e.n_samples);
      out += ' ' + (std::isnan(e.amplitude_deg) ? std::string("nan") : format_number(e.amplitude_deg));
      out += ' ' +
             (std::isnan(e.peak_speed_dps) ? std::string("nan") : format_number(e.peak_speed_dps));
      out += '\n';
    }
  };
  emit("primary", events.primary);
  emit("secondary", events.secondary);
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

ParsedRecording load_recording(const std::filesystem::path& path) {
  return parse_recording(read_text_file(path));
}

LabelFile load_labels(const std::filesystem::path& path) {
  return parse_labels(read_text_file(path));
}

}  // namespace gaze360

#include "gaze360/arff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <vector>

namespace gaze360 {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  char quote = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const char c = row[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ',') {
      out.push_back(unquote(row.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(unquote(row.substr(start)));
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<PrimaryLabel> primary_from_dataset_token(std::string_view token) {
  const auto t = upper(trim(token));
  if (t == "UNASSIGNED" || t == "UNLABELLED" || t == "UNLABELED" || t == "UNKNOWN" || t == "?")
    return PrimaryLabel::Unlabelled;
  if (t == "FIX" || t == "FIXATION") return PrimaryLabel::Fixation;
  if (t == "SACCADE" || t == "SACC") return PrimaryLabel::Saccade;
  if (t == "SP" || t == "PURSUIT" || t == "SMOOTH_PURSUIT") return PrimaryLabel::SmoothPursuit;
  if (t == "NOISE" || t == "BLINK") return PrimaryLabel::Noise;
  return std::nullopt;
}

std::optional<SecondaryLabel> secondary_from_dataset_token(std::string_view token) {
  const auto t = upper(trim(token));
  if (t == "UNASSIGNED" || t == "NONE" || t == "UNKNOWN" || t == "?") return SecondaryLabel::None;
  if (t == "VOR") return SecondaryLabel::Vor;
  if (t == "OKN") return SecondaryLabel::Okn;
  if (t == "OKN_VOR" || t == "VOR_OKN" || t == "OKN+VOR") return SecondaryLabel::OknVor;
  if (t == "HEAD_PURSUIT" || t == "HEADPURSUIT") return SecondaryLabel::HeadPursuit;
  return std::nullopt;
}

ConvertedRecording convert_arff(std::string_view text, const ArffOptions& options) {
  ConvertedRecording out;
  auto& meta = out.recording.meta;
  meta.video_id = options.video_id;
  meta.observer_id = options.observer_id;

  std::map<std::string, std::string> metadata;
  std::vector<std::string> attributes;
  std::vector<bool> nominal;
  bool in_data = false;
  std::vector<std::pair<std::size_t, std::string_view>> rows;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty()) continue;
    if (line.front() == '%') {
      const auto body = trim(line.substr(1));
      if (lower(body.substr(0, 9)) == "@metadata") {
        const auto rest = trim(body.substr(9));
        const auto sp = rest.find_first_of(" \t");
        if (sp == std::string_view::npos) throw ParseError(line_no, "malformed @METADATA line");
        metadata[lower(rest.substr(0, sp))] = std::string(trim(rest.substr(sp)));
      }
      continue;
    }
    if (in_data) {
      rows.emplace_back(line_no, line);
      continue;
    }
    const auto lw = lower(line);
    if (lw.starts_with("@relation")) continue;
    if (lw.starts_with("@attribute")) {
      const auto rest = trim(line.substr(10));
      const auto sp = rest.find_first_of(" \t");
      if (sp == std::string_view::npos) throw ParseError(line_no, "malformed @ATTRIBUTE line");
      attributes.push_back(lower(unquote(rest.substr(0, sp))));
      nominal.push_back(trim(rest.substr(sp)).starts_with("{"));
      continue;
    }
    if (lw.starts_with("@data")) {
      in_data = true;
      continue;
    }
    throw ParseError(line_no, "unexpected line before @DATA");
  }
  if (!in_data) throw ParseError(0, "no @DATA section");

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(attributes.begin(), attributes.end(), name);
    if (it == attributes.end()) return std::nullopt;
    return static_cast<std::size_t>(it - attributes.begin());
  };
  auto require = [&](std::string_view name) {
    const auto c = column(name);
    if (!c) throw ParseError(0, "missing attribute '" + std::string(name) + "'");
    return *c;
  };
  const std::size_t c_time = require("time");
  const std::size_t c_x = require("x");
  const std::size_t c_y = require("y");
  const std::size_t c_conf = require("confidence");
  const std::size_t c_hx = require("x_head");
  const std::size_t c_hy = require("y_head");
  const std::size_t c_roll = require("angle_deg_head");

  auto find_label_attr = [&](const std::string& given,
                             std::string_view needle) -> std::optional<std::size_t> {
    if (!given.empty()) {
      const auto c = column(lower(given));
      if (!c) throw ParseError(0, "label attribute '" + given + "' not found");
      return c;
    }
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (nominal[i] && attributes[i].find(needle) != std::string::npos) return i;
    }
    return std::nullopt;
  };
  const auto c_primary = find_label_attr(options.primary_attr, "primary");
  const auto c_secondary = find_label_attr(options.secondary_attr, "secondary");

  auto meta_number = [&](const char* key) -> std::optional<double> {
    const auto it = metadata.find(key);
    if (it == metadata.end()) return std::nullopt;
    const auto v = to_double(it->second);
    if (!v) throw ParseError(0, std::string("metadata '") + key + "' is not a number");
    return v;
  };
  const auto width = meta_number("width_px");
  const auto height = meta_number("height_px");
  if (!width || !height) throw ParseError(0, "metadata width_px / height_px required");
  meta.video_width_px = static_cast<int>(std::lround(*width));
  meta.video_height_px = static_cast<int>(std::lround(*height));
  bool fov_defaulted = false;
  auto fov_value = [&](const char* key, auto fallback) {
    const auto v = meta_number(key);
    if (!v) fov_defaulted = true;
    return v ? *v : static_cast<double>(fallback);
  };
  meta.fov_width_deg = fov_value("fov_width_deg", 100.0);
  meta.fov_height_deg = fov_value("fov_height_deg", 100.0);
  meta.fov_width_px = static_cast<int>(std::lround(fov_value("fov_width_px", 1280)));
  meta.fov_height_px = static_cast<int>(std::lround(fov_value("fov_height_px", 1440)));
  if (fov_defaulted) meta.extra.emplace_back("fov_source", "default");
  meta.extra.emplace_back("source_format", "arff");
  try {
    meta.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }

  auto& report = out.report;
  auto& samples = out.recording.samples;
  LabelTrack labels;
  std::optional<GazeSample> last_valid;
  for (const auto& [ln, row] : rows) {
    ++report.data_lines;
    auto skip = [&, ln = ln](ValidationIssue::Kind kind, std::string msg) {
      ++report.skipped_lines;
      report.issues.push_back({ln, kind, std::move(msg)});
    };
    const auto f = split_csv(row);
    if (f.size() != attributes.size()) {
      skip(ValidationIssue::Kind::Malformed, "expected " + std::to_string(attributes.size()) +
                                                 " values, found " + std::to_string(f.size()));
      continue;
    }
    const auto t = to_double(f[c_time]);
    const auto conf = to_double(f[c_conf]);
    if (!t || !conf) {
      skip(ValidationIssue::Kind::Malformed, "unparseable time or confidence");
      continue;
    }
    const auto t_us = static_cast<std::int64_t>(std::llround(*t * options.time_scale_to_us));
    if (!samples.empty() && t_us <= samples.back().t_us) {
      skip(ValidationIssue::Kind::NonMonotonic, "timestamp " + std::to_string(t_us) +
                                                    " not after " +
                                                    std::to_string(samples.back().t_us));
      continue;
    }
    std::optional<PrimaryLabel> p;
    std::optional<SecondaryLabel> s;
    if (c_primary) {
      p = primary_from_dataset_token(f[*c_primary]);
      if (!p) {
        skip(ValidationIssue::Kind::Malformed, "unknown primary label '" +
                                                   std::string(f[*c_primary]) + "'");
        continue;
      }
    }
    if (c_secondary) {
      s = secondary_from_dataset_token(f[*c_secondary]);
      if (!s) {
        skip(ValidationIssue::Kind::Malformed, "unknown secondary label '" +
                                                   std::string(f[*c_secondary]) + "'");
        continue;
      }
    }

    GazeSample sample;
    sample.t_us = t_us;
    sample.tracking_valid = *conf >= options.min_confidence;
    const auto x = to_double(f[c_x]), y = to_double(f[c_y]);
    const auto hx = to_double(f[c_hx]), hy = to_double(f[c_hy]), roll = to_double(f[c_roll]);
    const bool numeric = x && y && hx && hy && roll;
    if (sample.tracking_valid && !numeric) {
      skip(ValidationIssue::Kind::Malformed, "unparseable coordinates");
      continue;
    }
    if (sample.tracking_valid) {
      const auto head_dir = equirect_to_spherical(*hx, *hy, *width, *height);
      sample.head = HeadPose::canonical(head_dir.value.lon, head_dir.value.lat, *roll);
      if (options.gaze_in_fov) {
        const FovDir fov{(*x / meta.fov_width_px - 0.5) * meta.fov_width_deg,
                         (0.5 - *y / meta.fov_height_px) * meta.fov_height_deg};
        sample.gaze = fov_to_world(fov, sample.head);
      } else {
        const auto g = equirect_to_spherical(*x, *y, *width, *height);
        sample.gaze = SphericalDir::canonical(g.value.lon, g.value.lat);
        if (g.adjusted) {
          report.issues.push_back(
              {ln, ValidationIssue::Kind::OutOfRange, "gaze pixel outside the video frame"});
        }
      }
      last_valid = sample;
    } else if (last_valid) {
      sample.gaze = last_valid->gaze;
      sample.head = last_valid->head;
    }
    samples.push_back(sample);
    if (c_primary || c_secondary) {
      labels.t_us.push_back(t_us);
      labels.primary.push_back(p.value_or(PrimaryLabel::Unlabelled));
      labels.secondary.push_back(s.value_or(SecondaryLabel::None));
    }
  }
  if (samples.empty()) throw ParseError(0, "no usable samples");
  if (report.skipped_lines * 10 > report.data_lines) {
    throw ParseError(0, std::to_string(report.skipped_lines) + " of " +
                            std::to_string(report.data_lines) +
                            " data rows skipped (more than 10%)");
  }
  // Leading lost-tracking samples inherit the first valid values.
  if (last_valid) {
    const auto first_valid = std::find_if(samples.begin(), samples.end(),
                                          [](const GazeSample& s) { return s.tracking_valid; });
    for (auto it = samples.begin(); it != first_valid; ++it) {
      it->gaze = first_valid->gaze;
      it->head = first_valid->head;
    }
  }
  report.tracking_loss = tracking_loss_runs(out.recording);
  if (c_primary || c_secondary) out.labels = std::move(labels);
  return out;
}

}  // namespace gaze360

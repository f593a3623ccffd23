#include "gaze360/detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gaze360/formats.hpp"

namespace gaze360 {

namespace {

using json = nlohmann::json;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

std::int64_t end_time(std::span<const std::int64_t> t_us, std::size_t end_sample) {
  if (end_sample < t_us.size()) return t_us[end_sample];
  return t_us.back() + nominal_step_us(t_us);
}

EventSegment make_event(std::span<const std::int64_t> t_us, SampleRange r, LabelClass label) {
  EventSegment e;
  e.start_t = t_us[r.begin];
  e.end_t = end_time(t_us, r.end);
  e.label = label;
  e.first_sample = r.begin;
  e.n_samples = r.size();
  return e;
}

}  // namespace

void ThresholdSet::validate() const {
  if (!finite_positive(sacc_low) || !finite_positive(sacc_high) || sacc_low >= sacc_high) {
    throw std::invalid_argument("thresholds: need 0 < sacc_low < sacc_high");
  }
  if (!finite_positive(gaze_low) || !finite_positive(gaze_high) || gaze_low >= gaze_high) {
    throw std::invalid_argument("thresholds: need 0 < gaze_low < gaze_high");
  }
  if (!finite_positive(head_low)) throw std::invalid_argument("thresholds: head_low must be > 0");
  if (!finite_positive(head_ref)) throw std::invalid_argument("thresholds: head_ref must be > 0");
}

ThresholdSet parse_thresholds(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("thresholds: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("thresholds: expected a JSON object");

  ThresholdSet t;
  const std::pair<const char*, double*> fields[] = {
      {"sacc_low", &t.sacc_low}, {"sacc_high", &t.sacc_high}, {"gaze_low", &t.gaze_low},
      {"gaze_high", &t.gaze_high}, {"head_low", &t.head_low}, {"head_ref", &t.head_ref}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto f = std::find_if(std::begin(fields), std::end(fields),
                          [&](const auto& p) { return it.key() == p.first; });
    if (f == std::end(fields)) {
      // Provenance keys written by serialize_thresholds and optimize are allowed.
      if (it.key().starts_with("_")) continue;
      throw std::invalid_argument("thresholds: unknown key '" + it.key() + "'");
    }
    if (!it->is_number()) {
      throw std::invalid_argument("thresholds: '" + it.key() + "' must be a number");
    }
    *f->second = it->get<double>();
  }
  t.validate();
  return t;
}

std::string serialize_thresholds(const ThresholdSet& t) {
  json j = json::object();
  j["sacc_low"] = t.sacc_low;
  j["sacc_high"] = t.sacc_high;
  j["gaze_low"] = t.gaze_low;
  j["gaze_high"] = t.gaze_high;
  j["head_low"] = t.head_low;
  j["head_ref"] = t.head_ref;
  return j.dump(2) + "\n";
}

std::string describe(const ThresholdSet& t) {
  std::ostringstream os;
  os << "sacc_low=" << format_number(t.sacc_low) << " sacc_high=" << format_number(t.sacc_high)
     << " gaze_low=" << format_number(t.gaze_low) << " gaze_high=" << format_number(t.gaze_high)
     << " head_low=" << format_number(t.head_low) << " head_ref=" << format_number(t.head_ref);
  return os.str();
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::Combined: return "combined";
    case Variant::Fov: return "fov";
    case Variant::Eh: return "eh";
  }
  return "combined";
}

std::optional<Variant> variant_from_string(std::string_view name) {
  if (name == "combined") return Variant::Combined;
  if (name == "fov") return Variant::Fov;
  if (name == "eh") return Variant::Eh;
  return std::nullopt;
}

std::vector<SampleRange> find_saccade_runs(std::span<const double> speeds, double low,
                                           double high) {
  std::vector<SampleRange> runs;
  std::size_t i = 0;
  const std::size_t n = speeds.size();
  while (i < n) {
    // NaN fails the comparison, so undefined samples end a run.
    if (!(speeds[i] > low)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool peak = false;
    while (j < n && speeds[j] > low) {
      peak = peak || speeds[j] >= high;
      ++j;
    }
    if (peak) runs.push_back({i, j});
    i = j;
  }
  return runs;
}

std::vector<EventSegment> detect_saccades(std::span<const double> speeds,
                                          std::span<const std::int64_t> t_us,
                                          const ThresholdSet& thresholds) {
  if (speeds.size() != t_us.size()) {
    throw std::invalid_argument("detect_saccades: speeds and timestamps differ in length");
  }
  std::vector<EventSegment> out;
  for (const auto& r : find_saccade_runs(speeds, thresholds.sacc_low, thresholds.sacc_high)) {
    out.push_back(make_event(t_us, r, PrimaryLabel::Saccade));
  }
  return out;
}

BlinkResult detect_blinks(const Recording& recording, std::vector<EventSegment> saccades,
                          std::int64_t max_gap_us) {
  BlinkResult result;
  const auto& s = recording.samples;
  if (s.empty()) {
    result.saccades = std::move(saccades);
    return result;
  }
  const auto t = recording.timestamps();

  std::vector<SampleRange> loss;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i].tracking_valid) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !s[j].tracking_valid) ++j;
    loss.push_back({i, j});
    i = j;
  }

  std::vector<bool> absorbed(saccades.size(), false);
  std::vector<SampleRange> blinks;
  for (const auto& run : loss) {
    SampleRange b = run;
    const std::int64_t run_start = t[run.begin];
    const std::int64_t run_end = end_time(t, run.end);
    for (std::size_t k = 0; k < saccades.size(); ++k) {
      const auto& sac = saccades[k];
      std::int64_t gap;
      if (sac.end_sample() <= run.begin) {
        gap = run_start - sac.end_t;
      } else if (sac.first_sample >= run.end) {
        gap = sac.start_t - run_end;
      } else {
        gap = 0;
      }
      if (gap <= max_gap_us) {
        absorbed[k] = true;
        b.begin = std::min(b.begin, sac.first_sample);
        b.end = std::max(b.end, sac.end_sample());
      }
    }
    blinks.push_back(b);
  }

  std::sort(blinks.begin(), blinks.end(),
            [](const SampleRange& a, const SampleRange& b) { return a.begin < b.begin; });
  std::vector<SampleRange> merged;
  for (const auto& b : blinks) {
    if (!merged.empty() && b.begin <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, b.end);
    } else {
      merged.push_back(b);
    }
  }
  for (const auto& b : merged) result.blinks.push_back(make_event(t, b, PrimaryLabel::Noise));

  for (std::size_t k = 0; k < saccades.size(); ++k) {
    if (!absorbed[k]) result.saccades.push_back(std::move(saccades[k]));
  }
  return result;
}

double scaled(double threshold, double v_head, double head_ref) {
  return (1.0 + v_head / head_ref) * threshold;
}

WindowDecision classify_window(const WindowSpeeds& v, const ThresholdSet& th) {
  if (!v.valid || !std::isfinite(v.v_head) || !std::isfinite(v.v_fov) ||
      !std::isfinite(v.v_eh)) {
    return {PrimaryLabel::Noise, SecondaryLabel::None, true};
  }
  const double low = scaled(th.gaze_low, v.v_head, th.head_ref);
  const double high = scaled(th.gaze_high, v.v_head, th.head_ref);
  const bool head_moving = v.v_head > th.head_low;

  if (v.v_eh < low) {
    return {PrimaryLabel::Fixation, head_moving ? SecondaryLabel::Vor : SecondaryLabel::None};
  }
  if (v.v_eh < high) {
    if (v.v_fov >= high) return {PrimaryLabel::Noise, SecondaryLabel::None};
    if (v.v_fov < low && head_moving) return {PrimaryLabel::Fixation, SecondaryLabel::HeadPursuit};
    if (head_moving) return {PrimaryLabel::SmoothPursuit, SecondaryLabel::Vor};
    return {PrimaryLabel::SmoothPursuit, SecondaryLabel::None};
  }
  return {PrimaryLabel::Noise, SecondaryLabel::None};
}

WindowDecision classify_window_single(double speed, const ThresholdSet& th) {
  if (!std::isfinite(speed)) return {PrimaryLabel::Noise, SecondaryLabel::None, true};
  if (speed < th.gaze_low) return {PrimaryLabel::Fixation, SecondaryLabel::None};
  if (speed < th.gaze_high) return {PrimaryLabel::SmoothPursuit, SecondaryLabel::None};
  return {PrimaryLabel::Noise, SecondaryLabel::None};
}

LabelTrack detect_okn(LabelTrack track, std::span<const EventSegment> saccades,
                      std::span<const TimedDir> fov, const OknOptions& opt) {
  if (fov.size() != track.size()) {
    throw std::invalid_argument("detect_okn: trajectory and track differ in length");
  }
  const std::vector<SecondaryLabel> before = track.secondary;

  auto displacement = [&](std::size_t from, std::size_t to) -> std::optional<Eigen::Vector2d> {
    if (!fov[from].valid || !fov[to].valid) return std::nullopt;
    Eigen::Vector2d d = planar_displacement(fov[from].dir, fov[to].dir);
    if (d.norm() < opt.min_displacement_deg) return std::nullopt;
    return d;
  };
  auto saccade_displacement = [&](const EventSegment& e) {
    const std::size_t from = e.first_sample > 0 ? e.first_sample - 1 : e.first_sample;
    return displacement(from, e.end_sample() - 1);
  };
  auto is_vor = [](SecondaryLabel l) {
    return l == SecondaryLabel::Vor || l == SecondaryLabel::OknVor;
  };

  for (std::size_t k = 0; k + 1 < saccades.size(); ++k) {
    const auto& prev = saccades[k];
    const auto& next = saccades[k + 1];
    const std::size_t b = prev.end_sample();
    const std::size_t e = next.first_sample;
    if (e <= b) continue;
    if (next.start_t - prev.end_t > opt.max_slow_phase_us) continue;
    if (std::any_of(fov.begin() + b, fov.begin() + e, [](const TimedDir& d) { return !d.valid; })) {
      continue;
    }
    const auto slow = displacement(b, e - 1);
    const auto sp = saccade_displacement(prev);
    const auto sn = saccade_displacement(next);
    if (!slow || !sp || !sn) continue;
    if (angle_between_deg(*slow, *sp) < opt.slow_opposite_min_deg) continue;
    if (angle_between_deg(*slow, *sn) < opt.slow_opposite_min_deg) continue;
    if (angle_between_deg(*sp, *sn) > opt.saccade_collinear_max_deg) continue;

    bool interval_vor = false;
    for (std::size_t i = b; i < e; ++i) {
      const bool vor = is_vor(before[i]);
      interval_vor = interval_vor || vor;
      track.secondary[i] =
          (opt.always_okn_vor || vor) ? SecondaryLabel::OknVor : SecondaryLabel::Okn;
    }
    for (const auto* sac : {&prev, &next}) {
      for (std::size_t i = sac->first_sample; i < sac->end_sample(); ++i) {
        if (track.secondary[i] == SecondaryLabel::OknVor) continue;
        track.secondary[i] = (opt.always_okn_vor || interval_vor) ? SecondaryLabel::OknVor
                                                                   : SecondaryLabel::Okn;
      }
    }
  }
  return track;
}

PreparedRecording prepare(const Recording& recording, double fov_slack_deg) {
  PreparedRecording p;
  p.recording = &recording;
  p.t_us = recording.timestamps();
  p.world = trajectory(recording.samples, Frame::World);
  p.fov = trajectory(recording.samples, Frame::Fov);
  p.head = trajectory(recording.samples, Frame::Head);
  p.eh_speed = angular_speed_series(p.world);
  p.fov_speed = angular_speed_series(p.fov);
  p.outside_fov.assign(recording.samples.size(), false);
  for (std::size_t i = 0; i < recording.samples.size(); ++i) {
    const auto& s = recording.samples[i];
    if (!s.tracking_valid) continue;
    const FovDir f = world_to_fov(s.gaze, s.head);
    p.outside_fov[i] = !fov_within_bounds(f, recording.meta.fov_width_deg,
                                          recording.meta.fov_height_deg, fov_slack_deg);
  }
  return p;
}

std::vector<SampleRange> split_windows(std::span<const std::int64_t> t_us, SampleRange interval,
                                       std::int64_t interval_end_us, std::int64_t window_us,
                                       std::int64_t min_remainder_us) {
  std::vector<SampleRange> windows;
  std::size_t i = interval.begin;
  while (i < interval.end) {
    const std::int64_t t0 = t_us[i];
    std::size_t j = i;
    while (j < interval.end && t_us[j] < t0 + window_us) ++j;
    const bool partial = j == interval.end && interval_end_us - t0 < window_us;
    if (partial && !windows.empty() && interval_end_us - t0 < min_remainder_us) {
      windows.back().end = j;
    } else {
      windows.push_back({i, j});
    }
    i = j;
  }
  return windows;
}

PipelineResult run_pipeline_detailed(const PreparedRecording& p, Variant variant,
                                     const ThresholdSet& thresholds) {
  thresholds.validate();
  if (p.recording == nullptr) throw std::invalid_argument("run_pipeline: recording not prepared");
  const Recording& rec = *p.recording;
  const std::size_t n = p.t_us.size();

  PipelineResult out;
  out.track.t_us = p.t_us;
  out.track.primary.assign(n, PrimaryLabel::Noise);
  out.track.secondary.assign(n, SecondaryLabel::None);
  if (n == 0) return out;

  const auto& saccade_speed = variant == Variant::Fov ? p.fov_speed : p.eh_speed;
  auto blink = detect_blinks(rec, detect_saccades(saccade_speed, p.t_us, thresholds));
  out.saccades = std::move(blink.saccades);
  out.blinks = std::move(blink.blinks);

  std::vector<bool> taken(n, false);
  for (const auto& s : out.saccades) {
    if (is_short_saccade(s)) ++out.short_saccades;
    for (std::size_t i = s.first_sample; i < s.end_sample(); ++i) {
      out.track.primary[i] = PrimaryLabel::Saccade;
      taken[i] = true;
    }
  }
  for (const auto& b : out.blinks) {
    for (std::size_t i = b.first_sample; i < b.end_sample(); ++i) {
      out.track.primary[i] = PrimaryLabel::Noise;
      taken[i] = true;
    }
  }

  const std::span<const TimedDir> world(p.world), fov(p.fov), head(p.head);
  for (std::size_t i = 0; i < n;) {
    if (taken[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !taken[j]) ++j;
    const SampleRange interval{i, j};
    for (const auto& w : split_windows(p.t_us, interval, end_time(p.t_us, j))) {
      WindowRecord rec_w;
      rec_w.range = w;
      const std::size_t len = w.size();
      rec_w.speeds.v_eh = window_speed(world.subspan(w.begin, len));
      rec_w.speeds.v_fov = window_speed(fov.subspan(w.begin, len));
      rec_w.speeds.v_head = window_speed(head.subspan(w.begin, len));
      rec_w.speeds.valid = std::isfinite(rec_w.speeds.v_eh) && std::isfinite(rec_w.speeds.v_fov) &&
                           std::isfinite(rec_w.speeds.v_head);
      switch (variant) {
        case Variant::Combined: rec_w.decision = classify_window(rec_w.speeds, thresholds); break;
        case Variant::Fov:
          rec_w.decision = classify_window_single(rec_w.speeds.v_fov, thresholds);
          break;
        case Variant::Eh:
          rec_w.decision = classify_window_single(rec_w.speeds.v_eh, thresholds);
          break;
      }
      if (rec_w.decision.flagged) ++out.flagged_windows;
      for (std::size_t k = w.begin; k < w.end; ++k) {
        out.track.primary[k] = rec_w.decision.primary;
        out.track.secondary[k] = rec_w.decision.secondary;
      }
      out.windows.push_back(rec_w);
    }
    i = j;
  }

  OknOptions okn;
  okn.always_okn_vor = variant != Variant::Combined;
  out.track = detect_okn(std::move(out.track), out.saccades, fov, okn);

  for (std::size_t i = 0; i < n; ++i) {
    if (!p.outside_fov[i]) continue;
    ++out.outside_fov_samples;
    out.track.primary[i] = PrimaryLabel::Noise;
    out.track.secondary[i] = SecondaryLabel::None;
  }
  return out;
}

LabelTrack run_pipeline(const Recording& recording, Variant variant,
                        const ThresholdSet& thresholds) {
  return run_pipeline_detailed(prepare(recording), variant, thresholds).track;
}

LabelTrack ivt_prelabel(const Recording& recording, double threshold_dps) {
  auto track = LabelTrack::unlabelled(recording.timestamps());
  const auto speed = speed_series(recording.samples, Frame::Fov);
  for (std::size_t i = 0; i < speed.size(); ++i) {
    if (speed[i] > threshold_dps) track.primary[i] = PrimaryLabel::Saccade;
  }
  return track;
}

}  // namespace gaze360

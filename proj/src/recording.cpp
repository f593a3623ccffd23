#include "gaze360/recording.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gaze360 {

void RecordingMeta::validate() const {
  if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) {
    throw std::invalid_argument("sampling_rate_hz must be positive");
  }
  if (!(fov_width_deg > 0.0) || !(fov_height_deg > 0.0)) {
    throw std::invalid_argument("headset field of view (degrees) must be positive");
  }
  if (fov_width_px <= 0 || fov_height_px <= 0) {
    throw std::invalid_argument("headset field of view (pixels) must be positive");
  }
  if (video_width_px <= 0 || video_height_px <= 0) {
    throw std::invalid_argument("video dimensions must be positive");
  }
}

std::vector<std::int64_t> Recording::timestamps() const {
  std::vector<std::int64_t> t;
  t.reserve(samples.size());
  for (const auto& s : samples) t.push_back(s.t_us);
  return t;
}

std::int64_t Recording::duration_us() const {
  if (samples.empty()) return 0;
  const auto t = timestamps();
  return t.back() + nominal_step_us(t) - t.front();
}

std::pair<std::size_t, std::size_t> Recording::index_range(std::int64_t from_us,
                                                           std::int64_t to_us) const {
  auto by_time = [](const GazeSample& s, std::int64_t t) { return s.t_us < t; };
  const auto lo = std::lower_bound(samples.begin(), samples.end(), from_us, by_time);
  auto hi = std::lower_bound(samples.begin(), samples.end(), to_us, by_time);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo - samples.begin()),
          static_cast<std::size_t>(hi - samples.begin())};
}

std::vector<TimedDir> trajectory(std::span<const GazeSample> samples, Frame frame) {
  std::vector<TimedDir> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    SphericalDir dir;
    switch (frame) {
      case Frame::World: dir = s.gaze; break;
      case Frame::Fov: dir = world_to_fov(s.gaze, s.head).as_spherical(); break;
      case Frame::Head: dir = s.head.direction(); break;
    }
    out.push_back({s.t_us, dir, s.tracking_valid});
  }
  return out;
}

std::vector<double> speed_series(std::span<const GazeSample> samples, Frame frame) {
  const auto traj = trajectory(samples, frame);
  return angular_speed_series(traj);
}

double window_speed(std::span<const GazeSample> window, Frame frame) {
  const auto traj = trajectory(window, frame);
  return window_speed(std::span<const TimedDir>(traj));
}

std::vector<double> centred_head_speeds(const Recording& recording, std::int64_t window_us) {
  const auto traj = trajectory(recording.samples, Frame::Head);
  std::vector<double> out(traj.size(), std::numeric_limits<double>::quiet_NaN());
  const std::int64_t half = window_us / 2;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    while (traj[lo].t_us < traj[i].t_us - half) ++lo;
    while (hi < traj.size() && traj[hi].t_us <= traj[i].t_us + half) ++hi;
    out[i] = window_speed(std::span<const TimedDir>(traj).subspan(lo, hi - lo));
  }
  return out;
}

double head_motion_fraction(const Recording& recording, double threshold_dps,
                            std::int64_t window_us) {
  const auto speeds = centred_head_speeds(recording, window_us);
  std::size_t defined = 0, moving = 0;
  for (double v : speeds) {
    if (std::isnan(v)) continue;
    ++defined;
    if (v >= threshold_dps) ++moving;
  }
  return defined == 0 ? 0.0 : static_cast<double>(moving) / static_cast<double>(defined);
}

void annotate_event_stats(std::vector<EventSegment>& events, const Recording& recording) {
  const auto speeds = speed_series(recording.samples, Frame::World);
  for (auto& ev : events) {
    if (ev.n_samples == 0 || ev.end_sample() > recording.samples.size()) continue;
    const std::size_t from = ev.first_sample > 0 ? ev.first_sample - 1 : ev.first_sample;
    const std::size_t to = ev.end_sample() - 1;
    ev.amplitude_deg = great_circle_deg(recording.samples[from].gaze, recording.samples[to].gaze);
    double peak = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = ev.first_sample; i <= to; ++i) {
      if (std::isnan(speeds[i])) continue;
      peak = std::isnan(peak) ? speeds[i] : std::max(peak, speeds[i]);
    }
    ev.peak_speed_dps = peak;
  }
}

}  // namespace gaze360

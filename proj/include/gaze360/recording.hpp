#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gaze360/geometry.hpp"
#include "gaze360/labels.hpp"

namespace gaze360 {

struct GazeSample {
  std::int64_t t_us = 0;
  SphericalDir gaze;  // world frame
  HeadPose head;
  bool tracking_valid = true;

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct RecordingMeta {
  double sampling_rate_hz = 120.0;
  double fov_width_deg = 100.0;
  double fov_height_deg = 100.0;
  int fov_width_px = 1280;
  int fov_height_px = 1440;
  std::string video_id;
  int video_width_px = 3840;
  int video_height_px = 1920;
  std::string observer_id;
  /// Unrecognised header keys, in file order.
  std::vector<std::pair<std::string, std::string>> extra;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

struct Recording {
  RecordingMeta meta;
  std::vector<GazeSample> samples;

  std::vector<std::int64_t> timestamps() const;
  std::int64_t duration_us() const;
  /// Sample index range [begin, end) with from_us <= t < to_us.
  std::pair<std::size_t, std::size_t> index_range(std::int64_t from_us, std::int64_t to_us) const;
};

/// Frame of reference for a trajectory.
///  - World: gaze in world (E+H, eye-in-world) coordinates.
///  - Fov: gaze relative to the head (eye-in-head).
///  - Head: the head's forward direction (yaw, pitch); roll is ignored.
enum class Frame { World, Fov, Head };

std::vector<TimedDir> trajectory(std::span<const GazeSample> samples, Frame frame);

std::vector<double> speed_series(std::span<const GazeSample> samples, Frame frame);

double window_speed(std::span<const GazeSample> window, Frame frame);

/// Fraction of samples whose head speed over a 100 ms window centred on the
/// sample is at least `threshold_dps`. Samples whose window has fewer than two
/// valid samples are left out of the denominator.
double head_motion_fraction(const Recording& recording, double threshold_dps,
                            std::int64_t window_us = 100000);

/// Per-sample head window speeds used by head_motion_fraction (NaN where undefined).
std::vector<double> centred_head_speeds(const Recording& recording, std::int64_t window_us);

/// Fills amplitude (world-frame distance from the sample before the event to
/// its last sample) and peak per-sample world speed.
void annotate_event_stats(std::vector<EventSegment>& events, const Recording& recording);

}  // namespace gaze360

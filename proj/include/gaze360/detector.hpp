#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze360/geometry.hpp"
#include "gaze360/labels.hpp"
#include "gaze360/recording.hpp"

namespace gaze360 {

/// Speed thresholds of the classifier, deg/s.
struct ThresholdSet {
  double sacc_low = 35.0;    // samples joined to a saccade episode
  double sacc_high = 150.0;  // required peak of a saccade episode
  double gaze_low = 10.0;    // slow / medium gaze boundary (scaled by head speed)
  double gaze_high = 65.0;   // medium / fast gaze boundary (scaled by head speed)
  double head_low = 7.0;     // head counts as moving above this
  double head_ref = 60.0;    // head speed at which gaze thresholds double

  /// Throws std::invalid_argument unless 0 < sacc_low < sacc_high,
  /// 0 < gaze_low < gaze_high, head_low > 0 and head_ref > 0.
  void validate() const;

  friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

ThresholdSet parse_thresholds(std::string_view json_text);
std::string serialize_thresholds(const ThresholdSet& thresholds);
std::string describe(const ThresholdSet& thresholds);

enum class Variant { Combined, Fov, Eh };

std::string_view to_string(Variant variant);
std::optional<Variant> variant_from_string(std::string_view name);

struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  friend bool operator==(const SampleRange&, const SampleRange&) = default;
};

/// Two-threshold episode search: maximal runs of defined speeds above `low`
/// that contain at least one sample at or above `high`. NaN breaks runs.
std::vector<SampleRange> find_saccade_runs(std::span<const double> speeds, double low, double high);

std::vector<EventSegment> detect_saccades(std::span<const double> speeds,
                                          std::span<const std::int64_t> t_us,
                                          const ThresholdSet& thresholds);

/// One-sample episodes are kept but reported as short.
inline bool is_short_saccade(const EventSegment& e) { return e.n_samples < 2; }

struct BlinkResult {
  std::vector<EventSegment> blinks;    // label NOISE
  std::vector<EventSegment> saccades;  // saccades not absorbed into a blink
};

/// Every maximal tracking-loss run becomes a blink; a saccade separated from
/// the run by at most `max_gap_us` is absorbed into it.
BlinkResult detect_blinks(const Recording& recording, std::vector<EventSegment> saccades,
                          std::int64_t max_gap_us = 40000);

/// (1 + v_head / head_ref) * threshold.
double scaled(double threshold, double v_head, double head_ref);

struct WindowSpeeds {
  double v_head = 0.0;
  double v_fov = 0.0;
  double v_eh = 0.0;
  bool valid = true;
};

struct WindowDecision {
  PrimaryLabel primary = PrimaryLabel::Noise;
  SecondaryLabel secondary = SecondaryLabel::None;
  bool flagged = false;

  friend bool operator==(const WindowDecision&, const WindowDecision&) = default;
};

/// Combined decision table. gaze_low / gaze_high are scaled by the window's
/// head speed here; head_low is used as is. "Below" is strict.
WindowDecision classify_window(const WindowSpeeds& speeds, const ThresholdSet& thresholds);

/// Single-speed rule used by the FOV-only and E+H-only variants: unscaled
/// thresholds, no head-related secondary labels.
WindowDecision classify_window_single(double speed, const ThresholdSet& thresholds);

struct OknOptions {
  double slow_opposite_min_deg = 90.0;
  double saccade_collinear_max_deg = 70.0;
  double min_displacement_deg = 0.1;
  /// Longer gaps are not treated as slow phases.
  std::int64_t max_slow_phase_us = 2000000;
  /// Write OKN_VOR for every detection (single-speed variants).
  bool always_okn_vor = false;
};

/// Marks sawtooth episodes. For each gap between consecutive saccades that
/// holds only valid samples and lasts at most max_slow_phase_us, compares eye-in-head endpoint displacements:
/// slow phase at least 90 deg from both saccades, saccades within 70 deg of
/// each other. The gap and both saccades get OKN (OKN_VOR where VOR was set).
/// Primary labels are never touched.
LabelTrack detect_okn(LabelTrack track, std::span<const EventSegment> saccades,
                      std::span<const TimedDir> fov_trajectory, const OknOptions& options = {});

/// Per-recording quantities that do not depend on thresholds.
struct PreparedRecording {
  const Recording* recording = nullptr;
  std::vector<std::int64_t> t_us;
  std::vector<TimedDir> world;
  std::vector<TimedDir> fov;
  std::vector<TimedDir> head;
  std::vector<double> eh_speed;
  std::vector<double> fov_speed;
  std::vector<bool> outside_fov;
};

/// The recording must outlive the returned value.
PreparedRecording prepare(const Recording& recording, double fov_slack_deg = 10.0);

struct WindowRecord {
  SampleRange range;
  WindowSpeeds speeds;
  WindowDecision decision;
};

struct PipelineResult {
  LabelTrack track;
  std::vector<EventSegment> saccades;
  std::vector<EventSegment> blinks;
  std::vector<WindowRecord> windows;
  std::size_t short_saccades = 0;
  std::size_t flagged_windows = 0;
  std::size_t outside_fov_samples = 0;
};

inline constexpr std::int64_t kWindowUs = 100000;
inline constexpr std::int64_t kMinRemainderUs = 50000;

/// Splits an intersaccadic interval into consecutive windows of `window_us`.
/// A trailing remainder shorter than `min_remainder_us` joins the previous
/// window.
std::vector<SampleRange> split_windows(std::span<const std::int64_t> t_us, SampleRange interval,
                                       std::int64_t interval_end_us,
                                       std::int64_t window_us = kWindowUs,
                                       std::int64_t min_remainder_us = kMinRemainderUs);

PipelineResult run_pipeline_detailed(const PreparedRecording& prepared, Variant variant,
                                     const ThresholdSet& thresholds);

LabelTrack run_pipeline(const Recording& recording, Variant variant,
                        const ThresholdSet& thresholds = {});

/// I-VT pre-annotation: SACCADE where the eye-in-head sample speed exceeds
/// the threshold, UNLABELLED elsewhere.
LabelTrack ivt_prelabel(const Recording& recording, double threshold_dps = 140.0);

}  // namespace gaze360

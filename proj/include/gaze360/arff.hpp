#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gaze360/formats.hpp"

namespace gaze360 {

/// Reader for the ARFF layout used by the published 360-degree gaze corpus.
///
/// Mapping into the canonical recording:
///   %@METADATA width_px / height_px        -> video_width_px / video_height_px
///   %@METADATA fov_{width,height}_{deg,px} -> headset field of view (defaults
///                                             100 deg / 1280x1440 px if absent)
///   time                                   -> t_us (times time_scale_to_us)
///   x, y                                   -> gaze, equirectangular pixels
///   x_head, y_head                         -> head yaw / pitch, equirectangular pixels
///   angle_deg_head                         -> head roll, degrees
///   confidence                             -> valid when >= min_confidence
/// Optional nominal label attributes (names containing "primary" /
/// "secondary" unless given explicitly) become a label track. Samples with
/// lost tracking repeat the last valid gaze and head values.
struct ArffOptions {
  double min_confidence = 0.5;
  double time_scale_to_us = 1.0;
  /// Source gaze is eye-in-head: x/y are pixels of the headset view
  /// (top-left origin) and are rotated into the world by the head pose.
  bool gaze_in_fov = false;
  std::string primary_attr;
  std::string secondary_attr;
  std::string video_id;
  std::string observer_id;
};

struct ConvertedRecording {
  Recording recording;
  std::optional<LabelTrack> labels;
  ValidationReport report;
};

ConvertedRecording convert_arff(std::string_view text, const ArffOptions& options = {});

std::optional<PrimaryLabel> primary_from_dataset_token(std::string_view token);
std::optional<SecondaryLabel> secondary_from_dataset_token(std::string_view token);

}  // namespace gaze360

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze360/labels.hpp"
#include "gaze360/recording.hpp"

namespace gaze360 {

inline constexpr std::string_view kRecordingExt = ".rec";
inline constexpr std::string_view kLabelExt = ".lab";
inline constexpr std::string_view kEventExt = ".evt";

/// One manifest line: `<split> <recording> <labels>`; paths relative to the
/// manifest's directory. `#` starts a comment.
struct ManifestEntry {
  std::string split;
  std::filesystem::path recording;
  std::filesystem::path labels;
};

std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base_dir);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct LabelledRecording {
  std::string id;
  Recording recording;
  LabelTrack truth;
};

/// Loads the entries of one split (all entries when `split` is empty).
/// Throws if a label track is not aligned with its recording.
std::vector<LabelledRecording> load_split(std::span<const ManifestEntry> manifest,
                                          std::string_view split);

struct ClassShare {
  LabelClass label = PrimaryLabel::Fixation;
  std::size_t events = 0;
  std::size_t samples = 0;
  double share = 0.0;  // of all samples
};

struct LabelStatistics {
  std::size_t tracks = 0;
  std::size_t samples = 0;
  std::vector<ClassShare> primary;
  std::vector<ClassShare> secondary;
};

LabelStatistics label_statistics(std::span<const LabelTrack> tracks);
std::string format_statistics(const LabelStatistics& stats);

/// Regular files in `dir` with extension `ext`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::string_view ext);

/// Ids are file stems: letters, digits, '.', '_' and '-', not starting with '.'.
bool valid_id(std::string_view id);

}  // namespace gaze360

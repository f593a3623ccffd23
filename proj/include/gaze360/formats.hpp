#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaze360/labels.hpp"
#include "gaze360/recording.hpp"

namespace gaze360 {

// Canonical text formats. All are UTF-8, with a `# key: value` header whose
// first entry is `format`, followed by one whitespace-separated record per
// line.
//
//   recording  (gaze360-recording/1): t_us gaze_lon gaze_lat head_yaw head_pitch head_roll valid
//   labels     (gaze360-labels/1):    t_us primary secondary
//   events     (gaze360-events/1):    tier start_us end_us label n_samples amplitude_deg peak_speed_dps

inline constexpr std::string_view kRecordingFormat = "gaze360-recording/1";
inline constexpr std::string_view kLabelFormat = "gaze360-labels/1";
inline constexpr std::string_view kEventFormat = "gaze360-events/1";

using Header = std::vector<std::pair<std::string, std::string>>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ValidationIssue {
  enum class Kind { Malformed, NonMonotonic, OutOfRange };
  std::size_t line = 0;
  Kind kind = Kind::Malformed;
  std::string message;
};

struct TrackingLossRun {
  std::size_t first_sample = 0;
  std::size_t n_samples = 0;
  std::int64_t start_t = 0;
};

struct ValidationReport {
  std::size_t data_lines = 0;
  std::size_t skipped_lines = 0;
  std::vector<ValidationIssue> issues;
  std::vector<TrackingLossRun> tracking_loss;

  std::size_t count(ValidationIssue::Kind kind) const;
  std::string to_text() const;
};

struct ParsedRecording {
  Recording recording;
  ValidationReport report;
};

/// Lines failing to parse, or breaking timestamp monotonicity, are skipped
/// and reported; more than 10% skipped is a ParseError. Out-of-range angles
/// are canonicalised with a warning.
ParsedRecording parse_recording(std::string_view text);
std::string serialize_recording(const Recording& recording);

struct LabelFile {
  LabelTrack track;
  Header header;  // everything except `format`
};

LabelFile parse_labels(std::string_view text);
std::string serialize_labels(const LabelTrack& track, const Header& header = {});

std::string serialize_events(const TieredEvents& events, const Header& header = {});

/// Fills track_loss runs of a report from sample validity.
std::vector<TrackingLossRun> tracking_loss_runs(const Recording& recording);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename, so readers never see partial files.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

ParsedRecording load_recording(const std::filesystem::path& path);
LabelFile load_labels(const std::filesystem::path& path);

}  // namespace gaze360

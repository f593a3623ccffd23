#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaze360/labels.hpp"
#include "gaze360/recording.hpp"

namespace gaze360 {

/// Error carrying an HTTP-style status and a short machine-readable code.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct RecordingInfo {
  std::string id;
  std::size_t n_samples = 0;
  std::int64_t duration_us = 0;
  double sampling_rate_hz = 0.0;
  std::string status;  // "unannotated", "annotated" or "error"
  int revision = 0;
  std::string error;
};

struct SampleStream {
  std::string frame;  // "fov" or "eh"
  std::vector<std::int64_t> t_us;
  std::vector<double> x;  // longitude / azimuth, deg
  std::vector<double> y;  // latitude / elevation, deg
  std::vector<double> gaze_speed;  // deg/s in the same frame, NaN where undefined
  std::vector<double> head_speed;
  std::vector<bool> valid;
};

/// Sets every sample with from_us <= t < to_us on one tier.
struct LabelEdit {
  std::int64_t from_us = 0;
  std::int64_t to_us = 0;
  LabelClass label = PrimaryLabel::Unlabelled;
};

struct LabelState {
  int revision = 0;  // 0: nothing saved yet
  LabelTrack track;
};

/// On-disk annotation store.
///
///   <root>/<id>.rec                      recordings (read-only here)
///   <root>/.annotations/<id>/rev-N.lab   label track after revision N
///   <root>/.annotations/<id>/log.jsonl   one line per revision
///
/// Revisions only ever get appended; undo writes a new revision holding the
/// state before the current one. Writes to one recording are serialised.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::vector<RecordingInfo> list() const;

  /// Cached; throws ApiError 404 for unknown ids.
  std::shared_ptr<const Recording> recording(const std::string& id) const;

  /// frame is "fov" or "eh". Samples with from_us <= t < to_us.
  SampleStream samples(const std::string& id, const std::string& frame,
                       std::optional<std::int64_t> from_us,
                       std::optional<std::int64_t> to_us) const;

  LabelState labels(const std::string& id) const;

  /// Each write checks `base_revision` against the current revision (409 on
  /// mismatch) and returns the new revision number.
  int put_track(const std::string& id, int base_revision, const LabelTrack& track);
  int apply_edits(const std::string& id, int base_revision, const std::vector<LabelEdit>& edits);
  /// I-VT pre-annotation; 409 if the current track carries labels and !force.
  int prelabel(const std::string& id, bool force, double threshold_dps = 140.0);
  int undo(const std::string& id, std::optional<int> base_revision);

  /// Rebuilds the current track from the revision log alone.
  LabelTrack replay(const std::string& id) const;

 private:
  std::filesystem::path recording_path(const std::string& id) const;
  std::filesystem::path annotation_dir(const std::string& id) const;
  int current_revision(const std::string& id) const;
  LabelTrack track_at(const std::string& id, int revision) const;
  int commit(const std::string& id, const LabelTrack& track, const std::string& log_line);
  std::mutex& write_mutex(const std::string& id);

  std::filesystem::path root_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const Recording>> cache_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Applies a batch to a track. All-or-nothing: throws ApiError 400 when an
/// edit is out of range, empty, or overlaps an edit of the same tier with a
/// different label.
LabelTrack apply_label_edits(LabelTrack track, const std::vector<LabelEdit>& edits);

bool has_annotations(const LabelTrack& track);

}  // namespace gaze360

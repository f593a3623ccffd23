#include "gaze360/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaze360/corpus.hpp"
#include "gaze360/detector.hpp"
#include "gaze360/formats.hpp"

namespace gaze360 {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void not_found(const std::string& id) {
  throw ApiError(404, "not_found", "no recording '" + id + "'");
}

std::vector<json> read_log(const fs::path& path) {
  std::vector<json> entries;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    entries.push_back(json::parse(line));
  }
  return entries;
}

json edit_to_json(const LabelEdit& e) {
  return {{"from_us", e.from_us},
          {"to_us", e.to_us},
          {"tier", e.label.tier() == Tier::Primary ? "primary" : "secondary"},
          {"label", std::string(e.label.token())}};
}

LabelEdit edit_from_log(const json& j) {
  LabelEdit e;
  e.from_us = j.at("from_us").get<std::int64_t>();
  e.to_us = j.at("to_us").get<std::int64_t>();
  const auto token = j.at("label").get<std::string>();
  if (j.at("tier").get<std::string>() == "primary") {
    e.label = primary_from_token(token).value();
  } else {
    e.label = secondary_from_token(token).value();
  }
  return e;
}

// Revision whose state an entry represents: itself, or what an undo restored.
int effective_revision(const json& entry) {
  if (entry.at("kind") == "undo") return entry.at("restores").get<int>();
  return entry.at("revision").get<int>();
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

AnnotationStore::AnnotationStore(fs::path root) : root_(std::move(root)) {}

fs::path AnnotationStore::recording_path(const std::string& id) const {
  if (!valid_id(id)) not_found(id);
  return root_ / (id + std::string(kRecordingExt));
}

fs::path AnnotationStore::annotation_dir(const std::string& id) const {
  return root_ / ".annotations" / id;
}

std::shared_ptr<const Recording> AnnotationStore::recording(const std::string& id) const {
  const fs::path path = recording_path(id);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  }
  if (!fs::is_regular_file(path)) not_found(id);
  auto rec = std::make_shared<const Recording>(load_recording(path).recording);
  std::lock_guard lock(cache_mutex_);
  return cache_.emplace(id, std::move(rec)).first->second;
}

std::vector<RecordingInfo> AnnotationStore::list() const {
  std::vector<fs::path> files;
  try {
    files = list_files(root_, kRecordingExt);
  } catch (const fs::filesystem_error& e) {
    throw ApiError(500, "store_unreadable", e.what());
  }
  std::vector<RecordingInfo> out;
  for (const auto& f : files) {
    RecordingInfo info;
    info.id = f.stem().string();
    if (!valid_id(info.id)) continue;
    try {
      const auto rec = recording(info.id);
      info.n_samples = rec->samples.size();
      info.duration_us = rec->duration_us();
      info.sampling_rate_hz = rec->meta.sampling_rate_hz;
      const auto state = labels(info.id);
      info.revision = state.revision;
      info.status = has_annotations(state.track) ? "annotated" : "unannotated";
    } catch (const std::exception& e) {
      info.status = "error";
      info.error = e.what();
    }
    out.push_back(std::move(info));
  }
  return out;
}

SampleStream AnnotationStore::samples(const std::string& id, const std::string& frame,
                                      std::optional<std::int64_t> from_us,
                                      std::optional<std::int64_t> to_us) const {
  Frame f;
  if (frame == "fov") f = Frame::Fov;
  else if (frame == "eh") f = Frame::World;
  else throw ApiError(400, "bad_frame", "frame must be 'fov' or 'eh'");

  const auto rec = recording(id);
  const auto traj = trajectory(rec->samples, f);
  const auto gaze_speed = angular_speed_series(traj);
  const auto head_speed = speed_series(rec->samples, Frame::Head);

  SampleStream s;
  s.frame = frame;
  if (rec->samples.empty()) return s;
  const auto [lo, hi] = rec->index_range(from_us.value_or(rec->samples.front().t_us),
                                         to_us.value_or(rec->samples.back().t_us + 1));
  for (std::size_t i = lo; i < hi; ++i) {
    s.t_us.push_back(traj[i].t_us);
    s.x.push_back(traj[i].dir.lon);
    s.y.push_back(traj[i].dir.lat);
    s.gaze_speed.push_back(gaze_speed[i]);
    s.head_speed.push_back(head_speed[i]);
    s.valid.push_back(traj[i].valid);
  }
  return s;
}

int AnnotationStore::current_revision(const std::string& id) const {
  const auto log = read_log(annotation_dir(id) / "log.jsonl");
  return log.empty() ? 0 : log.back().at("revision").get<int>();
}

LabelTrack AnnotationStore::track_at(const std::string& id, int revision) const {
  if (revision == 0) return LabelTrack::unlabelled(recording(id)->timestamps());
  return load_labels(annotation_dir(id) / ("rev-" + std::to_string(revision) + ".lab")).track;
}

LabelState AnnotationStore::labels(const std::string& id) const {
  recording(id);
  const int rev = current_revision(id);
  return {rev, track_at(id, rev)};
}

std::mutex& AnnotationStore::write_mutex(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

int AnnotationStore::commit(const std::string& id, const LabelTrack& track,
                            const std::string& log_line) {
  const fs::path dir = annotation_dir(id);
  fs::create_directories(dir);
  const int rev = current_revision(id) + 1;
  write_text_file_atomic(dir / ("rev-" + std::to_string(rev) + ".lab"),
                         serialize_labels(track, {{"recording", id},
                                                  {"revision", std::to_string(rev)}}));
  // The log line is what makes the revision current, so it goes last.
  std::ofstream log(dir / "log.jsonl", std::ios::app);
  log << log_line << '\n';
  log.flush();
  if (!log) throw ApiError(500, "write_failed", "cannot append to revision log of '" + id + "'");
  return rev;
}

namespace {

void check_base(int current, int base) {
  if (base != current) {
    throw ApiError(409, "revision_conflict",
                   "base revision " + std::to_string(base) + " is not the current revision " +
                       std::to_string(current));
  }
}

}  // namespace

int AnnotationStore::put_track(const std::string& id, int base_revision, const LabelTrack& track) {
  const auto rec = recording(id);
  std::lock_guard lock(write_mutex(id));
  const int current = current_revision(id);
  check_base(current, base_revision);
  if (track.t_us != rec->timestamps() || track.primary.size() != track.size() ||
      track.secondary.size() != track.size()) {
    throw ApiError(400, "misaligned_track", "label track does not match the recording's samples");
  }
  json entry = {{"revision", current + 1}, {"kind", "put"}, {"base", current},
                {"time_ms", now_ms()}};
  return commit(id, track, entry.dump());
}

int AnnotationStore::apply_edits(const std::string& id, int base_revision,
                                 const std::vector<LabelEdit>& edits) {
  recording(id);
  std::lock_guard lock(write_mutex(id));
  const int current = current_revision(id);
  check_base(current, base_revision);
  const LabelTrack next = apply_label_edits(track_at(id, current), edits);
  json list = json::array();
  for (const auto& e : edits) list.push_back(edit_to_json(e));
  json entry = {{"revision", current + 1}, {"kind", "edits"}, {"base", current},
                {"time_ms", now_ms()}, {"edits", list}};
  return commit(id, next, entry.dump());
}

int AnnotationStore::prelabel(const std::string& id, bool force, double threshold_dps) {
  const auto rec = recording(id);
  std::lock_guard lock(write_mutex(id));
  const int current = current_revision(id);
  if (!force && has_annotations(track_at(id, current))) {
    throw ApiError(409, "already_annotated",
                   "recording '" + id + "' has labels; pass force=1 to overwrite");
  }
  json entry = {{"revision", current + 1}, {"kind", "prelabel"}, {"base", current},
                {"time_ms", now_ms()}, {"threshold_dps", threshold_dps}};
  return commit(id, ivt_prelabel(*rec, threshold_dps), entry.dump());
}

int AnnotationStore::undo(const std::string& id, std::optional<int> base_revision) {
  recording(id);
  std::lock_guard lock(write_mutex(id));
  const auto log = read_log(annotation_dir(id) / "log.jsonl");
  const int current = log.empty() ? 0 : log.back().at("revision").get<int>();
  if (base_revision) check_base(current, *base_revision);
  const int effective = log.empty() ? 0 : effective_revision(log.back());
  if (effective == 0) throw ApiError(409, "nothing_to_undo", "no earlier revision to restore");
  // Step back from the revision currently in effect, skipping over undos.
  int target = effective - 1;
  if (target > 0) target = effective_revision(log[static_cast<std::size_t>(target - 1)]);
  json entry = {{"revision", current + 1}, {"kind", "undo"}, {"base", current},
                {"time_ms", now_ms()}, {"restores", target}};
  return commit(id, track_at(id, target), entry.dump());
}

LabelTrack AnnotationStore::replay(const std::string& id) const {
  const auto rec = recording(id);
  std::vector<LabelTrack> states{LabelTrack::unlabelled(rec->timestamps())};
  for (const auto& entry : read_log(annotation_dir(id) / "log.jsonl")) {
    const std::string kind = entry.at("kind");
    const int rev = entry.at("revision");
    if (kind == "edits") {
      std::vector<LabelEdit> edits;
      for (const auto& e : entry.at("edits")) edits.push_back(edit_from_log(e));
      states.push_back(apply_label_edits(states.back(), edits));
    } else if (kind == "prelabel") {
      states.push_back(ivt_prelabel(*rec, entry.at("threshold_dps").get<double>()));
    } else if (kind == "undo") {
      states.push_back(states.at(static_cast<std::size_t>(entry.at("restores").get<int>())));
    } else {
      states.push_back(track_at(id, rev));
    }
  }
  return states.back();
}

LabelTrack apply_label_edits(LabelTrack track, const std::vector<LabelEdit>& edits) {
  if (edits.empty()) throw ApiError(400, "empty_batch", "edit batch is empty");
  if (track.size() == 0) throw ApiError(400, "edit_out_of_range", "recording has no samples");
  const std::int64_t first = track.t_us.front();
  const std::int64_t end = track.t_us.back() + nominal_step_us(track.t_us);
  for (const auto& e : edits) {
    if (e.from_us >= e.to_us) {
      throw ApiError(400, "empty_range", "edit range must have from_us < to_us");
    }
    if (e.from_us < first || e.to_us > end) {
      throw ApiError(400, "edit_out_of_range",
                     "edit [" + std::to_string(e.from_us) + ", " + std::to_string(e.to_us) +
                         ") lies outside the recording [" + std::to_string(first) + ", " +
                         std::to_string(end) + ")");
    }
  }
  for (std::size_t a = 0; a < edits.size(); ++a) {
    for (std::size_t b = a + 1; b < edits.size(); ++b) {
      const auto& x = edits[a];
      const auto& y = edits[b];
      if (x.label.tier() != y.label.tier() || x.label == y.label) continue;
      if (x.from_us < y.to_us && y.from_us < x.to_us) {
        throw ApiError(400, "conflicting_edits",
                       "edits " + std::to_string(a) + " and " + std::to_string(b) +
                           " overlap with different labels");
      }
    }
  }
  for (const auto& e : edits) {
    auto by_time = [](std::int64_t t, std::int64_t v) { return t < v; };
    const auto lo = std::lower_bound(track.t_us.begin(), track.t_us.end(), e.from_us, by_time) -
                    track.t_us.begin();
    const auto hi = std::lower_bound(track.t_us.begin(), track.t_us.end(), e.to_us, by_time) -
                    track.t_us.begin();
    for (auto i = lo; i < hi; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (e.label.tier() == Tier::Primary) track.primary[k] = e.label.primary();
      else track.secondary[k] = e.label.secondary();
    }
  }
  return track;
}

bool has_annotations(const LabelTrack& track) {
  return std::any_of(track.primary.begin(), track.primary.end(),
                     [](PrimaryLabel l) { return l != PrimaryLabel::Unlabelled; }) ||
         std::any_of(track.secondary.begin(), track.secondary.end(),
                     [](SecondaryLabel l) { return l != SecondaryLabel::None; });
}

}  // namespace gaze360

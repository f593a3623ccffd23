#include "gaze360/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gaze360/formats.hpp"

namespace gaze360 {

namespace fs = std::filesystem;

std::vector<ManifestEntry> parse_manifest(std::string_view text, const fs::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ManifestEntry e;
    std::string rec, lab, extra;
    if (!(fields >> e.split)) continue;
    if (!(fields >> rec >> lab) || (fields >> extra)) {
      throw ParseError(line_no, "manifest lines are '<split> <recording> <labels>'");
    }
    e.recording = base_dir / rec;
    e.labels = base_dir / lab;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

std::vector<LabelledRecording> load_split(std::span<const ManifestEntry> manifest,
                                          std::string_view split) {
  std::vector<LabelledRecording> out;
  for (const auto& e : manifest) {
    if (!split.empty() && e.split != split) continue;
    LabelledRecording r;
    r.id = e.recording.stem().string();
    r.recording = load_recording(e.recording).recording;
    r.truth = load_labels(e.labels).track;
    if (r.truth.t_us != r.recording.timestamps()) {
      throw std::runtime_error(e.labels.string() + ": labels are not aligned with " +
                               e.recording.string());
    }
    out.push_back(std::move(r));
  }
  return out;
}

LabelStatistics label_statistics(std::span<const LabelTrack> tracks) {
  LabelStatistics s;
  for (auto l : kScoredPrimary) s.primary.push_back({l});
  for (auto l : kScoredSecondary) s.secondary.push_back({l});
  auto row = [](std::vector<ClassShare>& rows, const LabelClass& cls) -> ClassShare* {
    for (auto& r : rows) {
      if (r.label == cls) return &r;
    }
    return nullptr;
  };

  for (const auto& t : tracks) {
    ++s.tracks;
    s.samples += t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (auto* r = row(s.primary, t.primary[i])) ++r->samples;
      if (auto* r = row(s.secondary, t.secondary[i])) ++r->samples;
    }
    const auto ev = samples_to_events(t);
    for (const auto& e : ev.primary) {
      if (auto* r = row(s.primary, e.label)) ++r->events;
    }
    for (const auto& e : ev.secondary) {
      if (auto* r = row(s.secondary, e.label)) ++r->events;
    }
  }
  for (auto* rows : {&s.primary, &s.secondary}) {
    for (auto& r : *rows) {
      r.share = s.samples ? static_cast<double>(r.samples) / static_cast<double>(s.samples) : 0.0;
    }
  }
  return s;
}

std::string format_statistics(const LabelStatistics& s) {
  std::ostringstream os;
  os << "tracks " << s.tracks << ", samples " << s.samples << "\n";
  char buf[128];
  for (const auto* rows : {&s.primary, &s.secondary}) {
    for (const auto& r : *rows) {
      std::snprintf(buf, sizeof buf, "%-9s %-12s events %7zu  samples %9zu  share %6.2f%%\n",
                    r.label.tier() == Tier::Primary ? "primary" : "secondary",
                    std::string(r.label.token()).c_str(), r.events, r.samples, 100.0 * r.share);
      os << buf;
    }
  }
  return os.str();
}

std::vector<fs::path> list_files(const fs::path& dir, std::string_view ext) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 200 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

}  // namespace gaze360

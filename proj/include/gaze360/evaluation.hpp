#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gaze360/labels.hpp"

namespace gaze360 {

struct SampleCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EventCounts {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
};

/// 2TP / (2TP + FP + FN); 1.0 when the class is absent from both sides.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Throws std::invalid_argument unless both tracks have identical timestamps.
void require_aligned(const LabelTrack& gt, const LabelTrack& pred);

SampleCounts sample_counts(const LabelTrack& gt, const LabelTrack& pred, const LabelClass& cls);
double sample_f1(const LabelTrack& gt, const LabelTrack& pred, const LabelClass& cls);

/// Throws std::invalid_argument if the list is unsorted or has overlapping events.
void require_disjoint(std::span<const EventSegment> events);

/// One-to-one matching: ground-truth events of the class, in time order, each
/// take the earliest overlapping predicted event of that class not yet taken.
EventCounts match_events(std::span<const EventSegment> gt, std::span<const EventSegment> pred,
                         const LabelClass& cls);
double event_f1(std::span<const EventSegment> gt, std::span<const EventSegment> pred,
                const LabelClass& cls);

struct ClassScores {
  LabelClass label = PrimaryLabel::Fixation;
  double sample_f1 = 0.0;
  double event_f1 = 0.0;
  SampleCounts samples;
  EventCounts events;
};

struct EvaluationReport {
  std::size_t recordings = 0;
  std::vector<ClassScores> classes;  // primary classes first, then secondary

  const ClassScores& at(const LabelClass& cls) const;
};

using TrackPair = std::pair<LabelTrack, LabelTrack>;  // (ground truth, prediction)

/// Counts are pooled over all pairs before computing F1.
EvaluationReport evaluate_corpus(std::span<const TrackPair> pairs);

/// Pooling helper for callers that score recordings separately.
class CorpusAccumulator {
 public:
  CorpusAccumulator();
  void add(const LabelTrack& gt, const LabelTrack& pred);
  EvaluationReport report() const;

 private:
  std::size_t recordings_ = 0;
  std::vector<LabelClass> classes_;
  std::vector<SampleCounts> samples_;
  std::vector<EventCounts> events_;
};

std::string report_csv(const EvaluationReport& report);
std::string report_markdown(const EvaluationReport& report);

}  // namespace gaze360

#include "gaze360/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gaze360 {

namespace {

bool has_label(const LabelTrack& t, std::size_t i, const LabelClass& cls) {
  return cls.tier() == Tier::Primary ? t.primary[i] == cls.primary()
                                     : t.secondary[i] == cls.secondary();
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

void require_aligned(const LabelTrack& gt, const LabelTrack& pred) {
  if (gt.t_us.size() != pred.t_us.size()) {
    throw std::invalid_argument("tracks differ in length (" + std::to_string(gt.t_us.size()) +
                                " vs " + std::to_string(pred.t_us.size()) + " samples)");
  }
  for (std::size_t i = 0; i < gt.t_us.size(); ++i) {
    if (gt.t_us[i] != pred.t_us[i]) {
      throw std::invalid_argument("tracks are not sample-aligned at index " + std::to_string(i));
    }
  }
  if (gt.primary.size() != gt.size() || gt.secondary.size() != gt.size() ||
      pred.primary.size() != pred.size() || pred.secondary.size() != pred.size()) {
    throw std::invalid_argument("label track has inconsistent column lengths");
  }
}

SampleCounts sample_counts(const LabelTrack& gt, const LabelTrack& pred, const LabelClass& cls) {
  require_aligned(gt, pred);
  SampleCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool g = has_label(gt, i, cls), p = has_label(pred, i, cls);
    if (g && p) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
  }
  return c;
}

double sample_f1(const LabelTrack& gt, const LabelTrack& pred, const LabelClass& cls) {
  const auto c = sample_counts(gt, pred, cls);
  return f1_score(c.tp, c.fp, c.fn);
}

void require_disjoint(std::span<const EventSegment> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].start_t < events[i - 1].end_t) {
      throw std::invalid_argument("event list has overlapping or unsorted events at " +
                                  std::to_string(events[i].start_t) + " us");
    }
  }
}

EventCounts match_events(std::span<const EventSegment> gt, std::span<const EventSegment> pred,
                         const LabelClass& cls) {
  require_disjoint(gt);
  require_disjoint(pred);
  const auto g = events_of(gt, cls);
  const auto p = events_of(pred, cls);

  EventCounts c;
  std::vector<bool> taken(p.size(), false);
  std::size_t first = 0;  // first predicted event that can still overlap
  for (const auto& e : g) {
    while (first < p.size() && p[first].end_t <= e.start_t) ++first;
    bool hit = false;
    for (std::size_t k = first; k < p.size() && p[k].start_t < e.end_t; ++k) {
      if (!taken[k]) {
        taken[k] = true;
        hit = true;
        break;
      }
    }
    if (hit) ++c.hits;
    else ++c.misses;
  }
  c.false_alarms = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
  return c;
}

double event_f1(std::span<const EventSegment> gt, std::span<const EventSegment> pred,
                const LabelClass& cls) {
  const auto c = match_events(gt, pred, cls);
  return f1_score(c.hits, c.false_alarms, c.misses);
}

const ClassScores& EvaluationReport::at(const LabelClass& cls) const {
  for (const auto& c : classes) {
    if (c.label == cls) return c;
  }
  throw std::out_of_range("class not scored: " + std::string(cls.token()));
}

CorpusAccumulator::CorpusAccumulator() {
  for (auto l : kScoredPrimary) classes_.emplace_back(l);
  for (auto l : kScoredSecondary) classes_.emplace_back(l);
  samples_.resize(classes_.size());
  events_.resize(classes_.size());
}

void CorpusAccumulator::add(const LabelTrack& gt, const LabelTrack& pred) {
  require_aligned(gt, pred);
  const auto ge = samples_to_events(gt);
  const auto pe = samples_to_events(pred);
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const auto& cls = classes_[k];
    const auto s = sample_counts(gt, pred, cls);
    samples_[k].tp += s.tp;
    samples_[k].fp += s.fp;
    samples_[k].fn += s.fn;
    const auto e = match_events(ge.tier(cls.tier()), pe.tier(cls.tier()), cls);
    events_[k].hits += e.hits;
    events_[k].misses += e.misses;
    events_[k].false_alarms += e.false_alarms;
  }
  ++recordings_;
}

EvaluationReport CorpusAccumulator::report() const {
  EvaluationReport r;
  r.recordings = recordings_;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    ClassScores c;
    c.label = classes_[k];
    c.samples = samples_[k];
    c.events = events_[k];
    c.sample_f1 = f1_score(c.samples.tp, c.samples.fp, c.samples.fn);
    c.event_f1 = f1_score(c.events.hits, c.events.false_alarms, c.events.misses);
    r.classes.push_back(c);
  }
  return r;
}

EvaluationReport evaluate_corpus(std::span<const TrackPair> pairs) {
  CorpusAccumulator acc;
  for (const auto& [gt, pred] : pairs) acc.add(gt, pred);
  return acc.report();
}

std::string report_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << "tier,class,sample_f1,event_f1,sample_tp,sample_fp,sample_fn,hits,misses,false_alarms\n";
  for (const auto& c : r.classes) {
    os << (c.label.tier() == Tier::Primary ? "primary" : "secondary") << ',' << c.label.token()
       << ',' << fixed3(c.sample_f1) << ',' << fixed3(c.event_f1) << ',' << c.samples.tp << ','
       << c.samples.fp << ',' << c.samples.fn << ',' << c.events.hits << ',' << c.events.misses
       << ',' << c.events.false_alarms << '\n';
  }
  return os.str();
}

std::string report_markdown(const EvaluationReport& r) {
  std::ostringstream os;
  os << "| tier | class | sample F1 | event F1 | hits | misses | false alarms |\n";
  os << "|---|---|---:|---:|---:|---:|---:|\n";
  for (const auto& c : r.classes) {
    os << "| " << (c.label.tier() == Tier::Primary ? "primary" : "secondary") << " | "
       << c.label.token() << " | " << fixed3(c.sample_f1) << " | " << fixed3(c.event_f1) << " | "
       << c.events.hits << " | " << c.events.misses << " | " << c.events.false_alarms << " |\n";
  }
  os << "\n" << r.recordings << " recording(s), counts pooled before scoring.\n";
  return os.str();
}

}  // namespace gaze360

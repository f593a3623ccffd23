#include <doctest.h>

#include <algorithm>
#include <random>

#include "gaze360/evaluation.hpp"

using namespace gaze360;
using P = PrimaryLabel;
using S = SecondaryLabel;

namespace {

LabelTrack track_of(std::vector<P> primary, std::vector<S> secondary = {}) {
  std::vector<std::int64_t> t;
  for (std::size_t i = 0; i < primary.size(); ++i) t.push_back(static_cast<std::int64_t>(i) * 10000);
  if (secondary.empty()) secondary.assign(primary.size(), S::None);
  return {t, std::move(primary), std::move(secondary)};
}

EventSegment fixation(std::int64_t from, std::int64_t to) {
  return {from, to, P::Fixation, 0, 1};
}

// Oracle: scan every predicted event for each ground-truth event.
EventCounts brute_force_match(const std::vector<EventSegment>& gt,
                              const std::vector<EventSegment>& pred, const LabelClass& cls) {
  EventCounts c;
  std::vector<bool> used(pred.size(), false);
  for (const auto& g : gt) {
    if (g.label != cls) continue;
    std::size_t best = pred.size();
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const auto& p = pred[k];
      if (used[k] || p.label != cls) continue;
      if (p.start_t >= g.end_t || g.start_t >= p.end_t) continue;
      if (best == pred.size() || p.start_t < pred[best].start_t) best = k;
    }
    if (best == pred.size()) {
      ++c.misses;
    } else {
      used[best] = true;
      ++c.hits;
    }
  }
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].label == cls && !used[k]) ++c.false_alarms;
  }
  return c;
}

LabelTrack random_track(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> lp(1, 4), ls(0, 4), run(1, 30);
  std::vector<P> p;
  std::vector<S> s;
  while (p.size() < n) {
    const auto a = static_cast<P>(lp(rng));
    const auto b = static_cast<S>(ls(rng));
    for (int k = run(rng); k > 0 && p.size() < n; --k) {
      p.push_back(a);
      s.push_back(b);
    }
  }
  return track_of(p, s);
}

}  // namespace

TEST_CASE("sample F1 confusion arithmetic") {
  std::vector<P> gt(80, P::Fixation);
  gt.insert(gt.end(), 20, P::SmoothPursuit);
  const auto g = track_of(gt);
  const auto p = track_of(std::vector<P>(100, P::Fixation));
  const auto c = sample_counts(g, p, P::Fixation);
  CHECK(c.tp == 80);
  CHECK(c.fp == 20);
  CHECK(c.fn == 0);
  CHECK(sample_f1(g, p, P::Fixation) == doctest::Approx(160.0 / 180.0));
  CHECK(sample_f1(g, p, P::SmoothPursuit) == 0.0);
  CHECK(sample_f1(g, p, P::Noise) == 1.0);

  const auto all_fix = track_of(std::vector<P>(10, P::Fixation));
  const auto all_sac = track_of(std::vector<P>(10, P::Saccade));
  CHECK(sample_f1(all_sac, all_fix, P::Fixation) == 0.0);
  CHECK(sample_f1(all_sac, all_fix, P::Saccade) == 0.0);
}

TEST_CASE("tracks must be sample-aligned") {
  auto a = track_of({P::Fixation, P::Fixation});
  auto b = a;
  b.t_us[1] = 10001;
  CHECK_THROWS_AS(sample_f1(a, b, P::Fixation), std::invalid_argument);
  CHECK_THROWS_AS(sample_f1(a, track_of({P::Fixation}), P::Fixation), std::invalid_argument);
}

TEST_CASE("event matching by hand") {
  const std::vector<EventSegment> gt{fixation(0, 1000000)};
  const std::vector<EventSegment> split{fixation(0, 400000), fixation(500000, 1000000)};
  const auto c = match_events(gt, split, P::Fixation);
  CHECK(c.hits == 1);
  CHECK(c.misses == 0);
  CHECK(c.false_alarms == 1);
  CHECK(event_f1(gt, split, P::Fixation) == 2.0 / 3.0);

  CHECK(event_f1(gt, gt, P::Fixation) == 1.0);
  CHECK(event_f1(gt, {}, P::Fixation) == 0.0);
  CHECK(event_f1({}, {}, P::Fixation) == 1.0);

  // Touching events do not overlap.
  const std::vector<EventSegment> after{fixation(1000000, 1200000)};
  CHECK(match_events(gt, after, P::Fixation).hits == 0);

  const std::vector<EventSegment> overlapping{fixation(0, 500), fixation(400, 900)};
  CHECK_THROWS_AS(match_events(overlapping, gt, P::Fixation), std::invalid_argument);
}

TEST_CASE("earliest-overlap matching agrees with the brute-force oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = samples_to_events(random_track(rng, 300));
    const auto p = samples_to_events(random_track(rng, 300));
    for (auto cls : kScoredPrimary) {
      const auto a = match_events(g.primary, p.primary, cls);
      const auto b = brute_force_match(g.primary, p.primary, cls);
      CHECK(a.hits == b.hits);
      CHECK(a.misses == b.misses);
      CHECK(a.false_alarms == b.false_alarms);
    }
    for (auto cls : kScoredSecondary) {
      const auto a = match_events(g.secondary, p.secondary, cls);
      CHECK(a.hits == brute_force_match(g.secondary, p.secondary, cls).hits);
    }
  }
}

TEST_CASE("identical tracks score 1 everywhere") {
  std::mt19937_64 rng(2);
  std::vector<TrackPair> pairs;
  for (int i = 0; i < 5; ++i) {
    const auto t = random_track(rng, 500);
    pairs.emplace_back(t, t);
  }
  const auto report = evaluate_corpus(pairs);
  CHECK(report.recordings == 5);
  CHECK(report.classes.size() == 8);
  for (const auto& c : report.classes) {
    CHECK(c.sample_f1 == 1.0);
    CHECK(c.event_f1 == 1.0);
  }
}

TEST_CASE("pooled scores: bounds, order independence and micro-averaging") {
  std::mt19937_64 rng(8);
  std::vector<TrackPair> pairs;
  for (int i = 0; i < 6; ++i) {
    auto gt = random_track(rng, 400);
    auto pred = random_track(rng, 400);
    pairs.emplace_back(gt, pred);
  }
  const auto report = evaluate_corpus(pairs);
  for (const auto& c : report.classes) {
    CHECK(c.sample_f1 >= 0.0);
    CHECK(c.sample_f1 <= 1.0);
    CHECK(c.event_f1 >= 0.0);
    CHECK(c.event_f1 <= 1.0);
  }

  auto shuffled = pairs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto again = evaluate_corpus(shuffled);
  for (std::size_t k = 0; k < report.classes.size(); ++k) {
    CHECK(again.classes[k].sample_f1 == report.classes[k].sample_f1);
    CHECK(again.classes[k].event_f1 == report.classes[k].event_f1);
  }

  // Pooled counts, not an average of per-recording F1.
  SampleCounts pooled;
  for (const auto& [g, p] : pairs) {
    const auto c = sample_counts(g, p, P::SmoothPursuit);
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
  }
  CHECK(report.at(P::SmoothPursuit).sample_f1 ==
        doctest::Approx(2.0 * pooled.tp / (2.0 * pooled.tp + pooled.fp + pooled.fn)));

  CorpusAccumulator acc;
  for (const auto& [g, p] : pairs) acc.add(g, p);
  CHECK(acc.report().at(S::Vor).event_f1 == report.at(S::Vor).event_f1);
}

TEST_CASE("reports") {
  const auto t = track_of({P::Fixation, P::Saccade});
  const std::vector<TrackPair> pairs{{t, t}};
  const auto report = evaluate_corpus(pairs);
  const auto csv = report_csv(report);
  CHECK(csv.starts_with("tier,class,sample_f1,event_f1"));
  CHECK(csv.find("primary,FIXATION,1.000,1.000") != std::string::npos);
  CHECK(report_markdown(report).find("| SP |") != std::string::npos);
}

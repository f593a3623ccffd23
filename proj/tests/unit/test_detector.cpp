#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "gaze360/detector.hpp"
#include "gaze360/synth.hpp"
#include "support.hpp"

using namespace gaze360;
using P = PrimaryLabel;
using S = SecondaryLabel;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Oracle: a sample is saccadic when it is above `low` and the block of
// contiguous above-`low` samples around it reaches `high` somewhere.
std::vector<bool> saccadic_samples(const std::vector<double>& v, double low, double high) {
  std::vector<bool> out(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > low)) continue;
    std::size_t a = i, b = i;
    while (a > 0 && v[a - 1] > low) --a;
    while (b + 1 < v.size() && v[b + 1] > low) ++b;
    for (std::size_t k = a; k <= b; ++k) out[i] = out[i] || v[k] >= high;
  }
  return out;
}

std::vector<bool> covered(const std::vector<SampleRange>& runs, std::size_t n) {
  std::vector<bool> out(n, false);
  for (const auto& r : runs) {
    for (std::size_t i = r.begin; i < r.end; ++i) out[i] = true;
  }
  return out;
}

double agreement(const LabelTrack& a, const LabelTrack& b, Tier tier, const std::vector<bool>& skip) {
  std::size_t n = 0, same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (skip[i]) continue;
    ++n;
    if (a.at(i, tier) == b.at(i, tier)) ++same;
  }
  return n ? static_cast<double>(same) / static_cast<double>(n) : 1.0;
}

double share(const LabelTrack& t, LabelClass cls, const std::vector<bool>& skip) {
  std::size_t n = 0, hit = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (skip[i]) continue;
    ++n;
    if (t.at(i, cls.tier()) == cls) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("two-threshold saccade examples") {
  const ThresholdSet th;
  std::vector<double> a{20, 40, 160, 40, 20};
  CHECK(find_saccade_runs(a, th.sacc_low, th.sacc_high) == std::vector<SampleRange>{{1, 4}});

  std::vector<double> b{20, 40, 100, 40, 20};
  CHECK(find_saccade_runs(b, th.sacc_low, th.sacc_high).empty());

  std::vector<double> c{kNaN, 160, kNaN};
  std::vector<std::int64_t> t{0, 8333, 16667};
  const auto ev = detect_saccades(c, t, th);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].first_sample == 1);
  CHECK(is_short_saccade(ev[0]));

  // Exactly at the low threshold does not join; exactly at the high one counts.
  std::vector<double> d{35, 150, 35};
  CHECK(find_saccade_runs(d, 35, 150) == std::vector<SampleRange>{{1, 2}});
}

TEST_CASE("saccade runs agree with the per-sample oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> speed(0, 260);
  std::bernoulli_distribution undefined(0.05);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(200);
    for (auto& x : v) x = undefined(rng) ? kNaN : speed(rng) * speed(rng) / 260.0;
    const auto runs = find_saccade_runs(v, 35, 150);
    CHECK(covered(runs, v.size()) == saccadic_samples(v, 35, 150));
    for (const auto& r : runs) {
      bool peak = false;
      for (std::size_t i = r.begin; i < r.end; ++i) {
        CHECK(v[i] > 35.0);
        peak = peak || v[i] >= 150.0;
      }
      CHECK(peak);
    }
  }
}

TEST_CASE("blinks absorb nearby saccades") {
  using testing_support::make_recording;
  auto rec = make_recording(60, 100, [](double) { return SphericalDir{}; });
  // Saccade over samples 10-14, ending at 150 ms.
  const std::vector<EventSegment> sacc{{100000, 150000, P::Saccade, 10, 5}};

  SUBCASE("20 ms gap merges") {
    for (std::size_t i = 17; i < 25; ++i) rec.samples[i].tracking_valid = false;
    const auto r = detect_blinks(rec, sacc);
    REQUIRE(r.blinks.size() == 1);
    CHECK(r.blinks[0].first_sample == 10);
    CHECK(r.blinks[0].end_sample() == 25);
    CHECK(r.blinks[0].label == LabelClass(P::Noise));
    CHECK(r.saccades.empty());
  }
  SUBCASE("60 ms gap stays separate") {
    for (std::size_t i = 21; i < 25; ++i) rec.samples[i].tracking_valid = false;
    const auto r = detect_blinks(rec, sacc);
    REQUIRE(r.blinks.size() == 1);
    CHECK(r.blinks[0].first_sample == 21);
    CHECK(r.saccades.size() == 1);
  }
  SUBCASE("saccade after the loss run") {
    for (std::size_t i = 5; i < 8; ++i) rec.samples[i].tracking_valid = false;
    const auto r = detect_blinks(rec, sacc);
    REQUIRE(r.blinks.size() == 1);
    CHECK(r.blinks[0].first_sample == 5);
    CHECK(r.blinks[0].end_sample() == 15);
  }
  SUBCASE("no loss") {
    const auto r = detect_blinks(rec, sacc);
    CHECK(r.blinks.empty());
    CHECK(r.saccades.size() == 1);
  }
}

TEST_CASE("head-speed threshold scaling") {
  CHECK(scaled(10, 0, 60) == 10);
  CHECK(scaled(10, 30, 60) == 15);
  CHECK(scaled(65, 60, 60) == 130);
}

TEST_CASE("combined decision table") {
  const ThresholdSet th;
  CHECK(classify_window({0, 5, 5}, th) == WindowDecision{P::Fixation, S::None});
  CHECK(classify_window({30, 2, 30}, th) == WindowDecision{P::Fixation, S::HeadPursuit});
  CHECK(classify_window({0, 30, 30}, th) == WindowDecision{P::SmoothPursuit, S::None});
  CHECK(classify_window({20, 25, 40}, th) == WindowDecision{P::SmoothPursuit, S::Vor});
  // Head turning, gaze stable in the world.
  CHECK(classify_window({40, 40, 1}, th) == WindowDecision{P::Fixation, S::Vor});
  // Medium E+H speed with a fast eye-in-head speed.
  CHECK(classify_window({0, 70, 30}, th).primary == P::Noise);
  // Fast gaze.
  CHECK(classify_window({0, 5, 80}, th).primary == P::Noise);
  const auto invalid = classify_window({0, 5, kNaN}, th);
  CHECK(invalid.primary == P::Noise);
  CHECK(invalid.flagged);
}

TEST_CASE("single-speed decision") {
  const ThresholdSet th;
  CHECK(classify_window_single(5, th).primary == P::Fixation);
  CHECK(classify_window_single(10, th).primary == P::SmoothPursuit);
  CHECK(classify_window_single(65, th).primary == P::Noise);
  CHECK(classify_window_single(kNaN, th).flagged);
}

TEST_CASE("window splitting") {
  std::vector<std::int64_t> t;
  for (int i = 0; i < 40; ++i) t.push_back(i * 10000);

  // 250 ms: the 50 ms tail is long enough to stand alone.
  auto w = split_windows(t, {0, 25}, 250000);
  CHECK(w == std::vector<SampleRange>{{0, 10}, {10, 20}, {20, 25}});

  // 240 ms: the 40 ms tail joins the previous window.
  w = split_windows(t, {0, 24}, 240000);
  CHECK(w == std::vector<SampleRange>{{0, 10}, {10, 24}});

  // An interval shorter than the minimum is still one window.
  w = split_windows(t, {5, 7}, 70000);
  CHECK(w == std::vector<SampleRange>{{5, 7}});
}

TEST_CASE("threshold files") {
  const auto th = parse_thresholds(R"({"sacc_low": 40, "gaze_high": 70, "_tool": "x"})");
  CHECK(th.sacc_low == 40);
  CHECK(th.gaze_high == 70);
  CHECK(th.sacc_high == 150);
  CHECK(parse_thresholds(serialize_thresholds(th)) == th);
  CHECK_THROWS_AS(parse_thresholds(R"({"sacc_low": 200})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_thresholds(R"({"sacc_lo": 20})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_thresholds("[1]"), std::invalid_argument);
}

TEST_CASE("OKN sawtooth detection") {
  // 100 Hz eye-in-head trace: fast phase right, slow drift left, fast phase
  // along `second_dir` degrees.
  auto build = [](double second_dir_deg) {
    std::vector<TimedDir> fov;
    double x = 0, y = 0;
    auto push = [&] { fov.push_back({static_cast<std::int64_t>(fov.size()) * 10000, {x, y}, true}); };
    for (int i = 0; i < 3; ++i) push();
    for (int i = 0; i < 3; ++i) { x += 2; push(); }
    for (int i = 0; i < 20; ++i) { x -= 0.3; push(); }
    const double r = second_dir_deg * std::numbers::pi / 180.0;
    for (int i = 0; i < 3; ++i) { x += 2 * std::cos(r); y += 2 * std::sin(r); push(); }
    for (int i = 0; i < 3; ++i) push();
    return fov;
  };
  const std::vector<EventSegment> sacc{{30000, 60000, P::Saccade, 3, 3},
                                       {260000, 290000, P::Saccade, 26, 3}};

  SUBCASE("collinear fast phases") {
    const auto fov = build(5.0);
    const auto track = detect_okn(LabelTrack::unlabelled(std::vector<std::int64_t>(fov.size())),
                                  sacc, fov);
    for (std::size_t i = 3; i < 29; ++i) CHECK(track.secondary[i] == S::Okn);
    CHECK(track.secondary[2] == S::None);
    CHECK(track.secondary[29] == S::None);
    CHECK(track.primary[10] == P::Unlabelled);
  }
  SUBCASE("fast phases 90 degrees apart") {
    const auto fov = build(90.0);
    const auto track = detect_okn(LabelTrack::unlabelled(std::vector<std::int64_t>(fov.size())),
                                  sacc, fov);
    for (auto s : track.secondary) CHECK(s == S::None);
  }
  SUBCASE("slow phase already VOR") {
    const auto fov = build(0.0);
    auto in = LabelTrack::unlabelled(std::vector<std::int64_t>(fov.size()));
    for (std::size_t i = 6; i < 26; ++i) in.secondary[i] = S::Vor;
    const auto track = detect_okn(in, sacc, fov);
    for (std::size_t i = 3; i < 29; ++i) CHECK(track.secondary[i] == S::OknVor);
  }
  SUBCASE("slow phase longer than the cap") {
    const auto fov = build(0.0);
    OknOptions opt;
    opt.max_slow_phase_us = 100000;
    const auto track = detect_okn(LabelTrack::unlabelled(std::vector<std::int64_t>(fov.size())),
                                  sacc, fov, opt);
    for (auto s : track.secondary) CHECK(s == S::None);
  }
}

TEST_CASE("all samples lost") {
  auto rec = testing_support::make_recording(240, 120, [](double) { return SphericalDir{}; });
  for (auto& s : rec.samples) s.tracking_valid = false;
  for (auto v : {Variant::Combined, Variant::Fov, Variant::Eh}) {
    const auto track = run_pipeline(rec, v);
    for (auto p : track.primary) CHECK(p == P::Noise);
  }
}

TEST_CASE("gaze outside the headset view is noise") {
  // Head turns away from a fixed world target until it leaves the view.
  const auto rec = testing_support::make_recording(
      240, 120, [](double) { return SphericalDir{}; },
      [](double t) { return HeadPose{-40.0 * t, 0, 0}; });
  const auto res = run_pipeline_detailed(prepare(rec), Variant::Combined, {});
  CHECK(res.outside_fov_samples > 0);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const double az = std::abs(world_to_fov(rec.samples[i].gaze, rec.samples[i].head).azimuth);
    if (az > 60.0) CHECK(res.track.primary[i] == P::Noise);
    if (az < 55.0) CHECK(res.track.primary[i] == P::Fixation);
  }
}

TEST_CASE("VOR fixation: combined sees fixation, eye-in-head alone sees pursuit") {
  auto phase = default_phase(PhaseKind::VorFixation);
  phase.noise_sd = 0;
  phase.duration = 20;
  const auto trace = generate({phase}, 120, 4);
  const auto skip = near_transition(trace.truth, 100000);
  const auto combined = run_pipeline(trace.recording, Variant::Combined);
  const auto fov = run_pipeline(trace.recording, Variant::Fov);
  CHECK(share(combined, P::Fixation, skip) > 0.95);
  CHECK(share(combined, S::Vor, skip) > 0.95);
  CHECK(share(fov, P::SmoothPursuit, skip) > 0.9);
}

TEST_CASE("static-head stimulus: combined and E+H variants agree") {
  auto phase = default_phase(PhaseKind::BasicEm);
  phase.noise_sd = 0;
  phase.duration = 40;
  const auto trace = generate({phase}, 120, 8);
  const auto prepared = prepare(trace.recording);
  const auto combined = run_pipeline_detailed(prepared, Variant::Combined, {});
  const auto eh = run_pipeline_detailed(prepared, Variant::Eh, {});

  // Window-boundary samples: one sample either side of every window edge.
  std::vector<bool> skip(trace.truth.size(), false);
  for (const auto& w : combined.windows) {
    for (std::size_t i : {w.range.begin, w.range.end - 1}) {
      for (std::size_t k = i > 0 ? i - 1 : 0; k <= i + 1 && k < skip.size(); ++k) skip[k] = true;
    }
  }
  CHECK(agreement(combined.track, eh.track, Tier::Primary, skip) >= 0.99);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gaze360/detector.hpp"
#include "gaze360/synth.hpp"

using namespace gaze360;
using P = PrimaryLabel;
using S = SecondaryLabel;

namespace {

PhaseSpec noiseless(PhaseKind kind) {
  auto p = default_phase(kind);
  p.noise_sd = 0;
  return p;
}

// Mean of a per-sample speed over the samples whose truth matches.
double mean_speed(const std::vector<double>& speed, const LabelTrack& truth, P p, S s) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    if (truth.primary[i] != p || truth.secondary[i] != s || truth.primary[i - 1] != p) continue;
    if (std::isnan(speed[i])) continue;
    sum += speed[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : NAN;
}

}  // namespace

TEST_CASE("timestamps follow the sample grid and labels are complete") {
  const auto trace = generate(standard_session(), 120, 1);
  const auto& s = trace.recording.samples;
  CHECK(s.size() == 6000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].t_us == std::llround(static_cast<double>(i) * 1e6 / 120.0));
  }
  CHECK(trace.truth.t_us == trace.recording.timestamps());
  CHECK(trace.truth.complete());
  for (auto kind : {P::Fixation, P::Saccade, P::SmoothPursuit}) {
    CHECK(std::count(trace.truth.primary.begin(), trace.truth.primary.end(), kind) > 0);
  }
  for (auto kind : {S::Vor, S::Okn, S::HeadPursuit}) {
    CHECK(std::count(trace.truth.secondary.begin(), trace.truth.secondary.end(), kind) > 0);
  }
}

TEST_CASE("the seed fixes the output") {
  const auto a = generate(standard_session(), 120, 42);
  const auto b = generate(standard_session(), 120, 42);
  const auto c = generate(standard_session(), 120, 43);
  CHECK(a.recording.samples == b.recording.samples);
  CHECK(a.truth == b.truth);
  CHECK(a.recording.samples != c.recording.samples);
}

TEST_CASE("VOR fixation holds gaze still in the world while the head turns") {
  auto p = noiseless(PhaseKind::VorFixation);
  const auto trace = generate({p}, 120, 2);
  for (std::size_t i = 0; i < trace.truth.size(); ++i) {
    CHECK(trace.truth.primary[i] == P::Fixation);
    CHECK(trace.truth.secondary[i] == S::Vor);
  }
  const auto eh = speed_series(trace.recording.samples, Frame::World);
  const auto fov = speed_series(trace.recording.samples, Frame::Fov);
  const auto head = speed_series(trace.recording.samples, Frame::Head);
  for (std::size_t i = 0; i < eh.size(); ++i) {
    CHECK(eh[i] < 1e-6);
    CHECK(fov[i] == doctest::Approx(head[i]).epsilon(1e-6));
    CHECK(head[i] <= p.target_speed * 1.001);
  }
  CHECK(mean_speed(head, trace.truth, P::Fixation, S::Vor) > 0.9 * p.target_speed);
}

TEST_CASE("long pursuit with a static head moves at the target speed") {
  auto p = noiseless(PhaseKind::LongPursuit);
  p.head_ratio = 0;
  p.extent = 60;
  p.duration = 20;
  const auto trace = generate({p}, 120, 3);
  const auto res = run_pipeline_detailed(prepare(trace.recording), Variant::Combined, {});
  std::size_t checked = 0;
  for (const auto& w : res.windows) {
    bool sp = true;
    for (std::size_t i = w.range.begin; i < w.range.end; ++i) {
      sp = sp && trace.truth.primary[i] == P::SmoothPursuit;
    }
    if (!sp) continue;
    CHECK(w.speeds.v_eh == doctest::Approx(15.0).epsilon(0.1 / 15.0));
    CHECK(w.speeds.v_head == 0.0);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("long pursuit alternates eye and head legs") {
  const auto trace = generate({noiseless(PhaseKind::LongPursuit)}, 120, 3);
  const auto counts = [&](S s) {
    return std::count(trace.truth.secondary.begin(), trace.truth.secondary.end(), s);
  };
  CHECK(std::count(trace.truth.primary.begin(), trace.truth.primary.end(), P::SmoothPursuit) > 0);
  CHECK(counts(S::HeadPursuit) > 0);
}

TEST_CASE("OKN slow phases run at the stimulus speed and resets oppose them") {
  auto p = noiseless(PhaseKind::Okn);
  p.gain = 1.0;
  const auto trace = generate({p}, 120, 5);
  const auto fov = speed_series(trace.recording.samples, Frame::Fov);
  CHECK(mean_speed(fov, trace.truth, P::SmoothPursuit, S::Okn) ==
        doctest::Approx(50.0).epsilon(0.01));

  const auto traj = trajectory(trace.recording.samples, Frame::Fov);
  const auto ev = samples_to_events(trace.truth);
  std::size_t opposed = 0;
  for (std::size_t k = 1; k + 1 < ev.primary.size(); ++k) {
    const auto& slow = ev.primary[k];
    if (slow.label != LabelClass(P::SmoothPursuit)) continue;
    const auto& reset = ev.primary[k + 1];
    REQUIRE(reset.label == LabelClass(P::Saccade));
    const auto d_slow = planar_displacement(traj[slow.first_sample].dir,
                                            traj[slow.end_sample() - 1].dir);
    const auto d_reset = planar_displacement(traj[reset.first_sample - 1].dir,
                                             traj[reset.end_sample() - 1].dir);
    if (angle_between_deg(d_slow, d_reset) > 170.0) ++opposed;
  }
  CHECK(opposed >= 10);
}

TEST_CASE("OKN with head rotation is labelled OKN_VOR") {
  auto p = noiseless(PhaseKind::Okn);
  p.head_speed = 10;
  const auto trace = generate({p}, 120, 6);
  CHECK(std::count(trace.truth.secondary.begin(), trace.truth.secondary.end(), S::OknVor) > 0);
  CHECK(std::count(trace.truth.secondary.begin(), trace.truth.secondary.end(), S::Okn) == 0);
}

TEST_CASE("saccades reach the detector thresholds") {
  const auto trace = generate({noiseless(PhaseKind::BasicEm)}, 120, 9);
  const auto eh = speed_series(trace.recording.samples, Frame::World);
  for (const auto& e : samples_to_events(trace.truth).primary) {
    if (e.label != LabelClass(P::Saccade)) continue;
    double peak = 0;
    for (std::size_t i = e.first_sample; i < e.end_sample(); ++i) {
      CHECK(eh[i] > 35.0);
      peak = std::max(peak, eh[i]);
    }
    CHECK(peak >= 150.0);
  }
}

TEST_CASE("phase files") {
  const auto phases = parse_phases(R"({"phases": [{"kind": "OKN", "head_speed": 10},
                                                  {"kind": "BASIC_EM", "duration": 5}]})");
  REQUIRE(phases.size() == 2);
  CHECK(phases[0].gain == 0.6);
  CHECK(phases[0].head_speed == 10);
  CHECK(phases[1].duration == 5);
  CHECK(parse_phases(serialize_phases(phases)).size() == 2);

  CHECK_THROWS_AS(parse_phases(R"([{"kind": "WALK"}])"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phases(R"([{"kind": "OKN", "speed": 3}])"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phases(R"([{"kind": "OKN", "gain": 0}])"), std::invalid_argument);
  CHECK_THROWS_AS(parse_phases(R"([{"kind": "BASIC_EM", "duration": -1}])"),
                  std::invalid_argument);
}

TEST_CASE("rates too low for saccades are rejected") {
  CHECK_THROWS_AS(generate(standard_session(), 30, 1), std::invalid_argument);
  CHECK_NOTHROW(generate({default_phase(PhaseKind::BasicEm)}, 60, 1));
}

TEST_CASE("transition margins") {
  LabelTrack t{{0, 10, 20, 30, 40, 50},
               {P::Fixation, P::Fixation, P::Fixation, P::Saccade, P::Saccade, P::Saccade},
               std::vector<S>(6, S::None)};
  const auto near = near_transition(t, 10);
  CHECK(near == std::vector<bool>{false, false, true, true, true, false});
}

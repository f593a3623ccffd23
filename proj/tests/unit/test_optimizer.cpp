#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "gaze360/optimizer.hpp"
#include "gaze360/synth.hpp"

using namespace gaze360;

namespace {

struct Corpus {
  std::vector<SyntheticTrace> traces;
  std::vector<TrainingItem> items;
};

// Items borrow the recordings, so the traces are allocated up front.
Corpus synthetic_corpus(std::initializer_list<std::uint64_t> seeds) {
  Corpus c;
  c.traces.reserve(seeds.size());
  for (auto seed : seeds) {
    auto phases = standard_session();
    for (auto& p : phases) {
      p.noise_sd = 0;
      p.duration = 6;
    }
    c.traces.push_back(generate(phases, 120, seed));
  }
  for (const auto& t : c.traces) c.items.push_back(make_training_item(t.recording, t.truth));
  return c;
}

}  // namespace

TEST_CASE("grid ranges keep their end point") {
  CHECK(grid_range(0.1, 0.3, 0.1).size() == 3);
  CHECK(grid_range(10, 60, 5).size() == 11);
  CHECK(grid_range(5, 5, 1) == std::vector<double>{5});
  CHECK_THROWS_AS(grid_range(1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(grid_range(0, 1, 0), std::invalid_argument);
}

TEST_CASE("grid files") {
  const auto g = parse_grid(R"({"sacc_low": [30, 35], "gaze_high": {"from": 50, "to": 70, "step": 10}})");
  CHECK(g.sacc_low == std::vector<double>{30, 35});
  CHECK(g.gaze_high == std::vector<double>{50, 60, 70});
  CHECK(g.sacc_high == ThresholdGrid::defaults().sacc_high);
  CHECK_THROWS_AS(parse_grid(R"({"head_low": [1]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid(R"({"sacc_low": []})"), std::invalid_argument);
}

TEST_CASE("parallel_for visits every index once and forwards errors") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(50, 4,
                               [](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("singleton grids return their point") {
  auto corpus = synthetic_corpus({1});
  const std::vector<double> lo{35}, hi{150};
  const auto s = fit_saccade_thresholds(corpus.items, {}, lo, hi);
  CHECK(s.thresholds.sacc_low == 35);
  CHECK(s.thresholds.sacc_high == 150);
  const std::vector<double> glo{10}, ghi{65};
  const auto g = fit_gaze_thresholds(corpus.items, {}, glo, ghi);
  CHECK(g.thresholds.gaze_low == 10);
  CHECK(g.thresholds.gaze_high == 65);
  CHECK(g.scores.size() == 1);
}

TEST_CASE("ties go to the smallest high, then low") {
  auto corpus = synthetic_corpus({1});
  const std::vector<double> lo{40, 30}, hi{200, 160};
  const auto r = fit_saccade_thresholds(corpus.items, {}, lo, hi, {},
                                        [](const EvaluationReport&) { return 0.5; });
  CHECK(r.thresholds.sacc_low == 30);
  CHECK(r.thresholds.sacc_high == 160);
}

TEST_CASE("staged search on the noise-free synthetic corpus") {
  auto corpus = synthetic_corpus({1, 2});
  const std::vector<double> lo{25, 35, 45}, hi{120, 150, 200};
  const auto s = fit_saccade_thresholds(corpus.items, {}, lo, hi);
  CHECK(s.objective == 1.0);
  CHECK(s.scores.size() == 9);

  const std::vector<double> glo{5, 10, 15}, ghi{40, 65, 90};
  const auto g = fit_gaze_thresholds(corpus.items, s.thresholds, glo, ghi);
  CHECK(g.objective >= 0.95);
  CHECK(g.thresholds.sacc_low == s.thresholds.sacc_low);
}

TEST_CASE("fits do not depend on recording order or thread count") {
  auto corpus = synthetic_corpus({3, 4});
  std::vector<TrainingItem> swapped{corpus.items[1], corpus.items[0]};
  const std::vector<double> lo{5, 10, 20}, hi{40, 65};
  FitOptions one;
  one.jobs = 1;
  FitOptions many;
  many.jobs = 4;
  const auto a = fit_gaze_thresholds(corpus.items, {}, lo, hi, one);
  const auto b = fit_gaze_thresholds(swapped, {}, lo, hi, many);
  CHECK(a.thresholds == b.thresholds);
  REQUIRE(a.scores.size() == b.scores.size());
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    CHECK(a.scores[i].objective == b.scores[i].objective);
  }
}

TEST_CASE("training items must be aligned with their recording") {
  auto corpus = synthetic_corpus({5});
  auto truth = corpus.traces[0].truth;
  truth.t_us.pop_back();
  truth.primary.pop_back();
  truth.secondary.pop_back();
  CHECK_THROWS_AS(make_training_item(corpus.traces[0].recording, truth), std::invalid_argument);
}

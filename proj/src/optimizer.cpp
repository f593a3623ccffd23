#include "gaze360/optimizer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace gaze360 {

namespace {

using json = nlohmann::json;

using Apply = void (*)(ThresholdSet&, double low, double high);

FitResult fit_pairs(std::span<const TrainingItem> items, const ThresholdSet& base,
                    std::span<const double> lows, std::span<const double> highs, Apply apply,
                    const FitOptions& options, const Objective& objective) {
  if (items.empty()) throw std::invalid_argument("optimizer: no training recordings");
  std::vector<ThresholdSet> points;
  std::vector<GridScore> scores;
  for (double lo : lows) {
    for (double hi : highs) {
      if (!(lo < hi)) continue;
      ThresholdSet t = base;
      apply(t, lo, hi);
      t.validate();
      points.push_back(t);
      scores.push_back({lo, hi, 0.0});
    }
  }
  if (points.empty()) throw std::invalid_argument("optimizer: grid has no point with low < high");

  parallel_for(points.size(), options.jobs, [&](std::size_t i) {
    scores[i].objective = objective(evaluate_thresholds(items, points[i], options.variant));
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto& a = scores[i];
    const auto& b = scores[best];
    if (a.objective > b.objective + 1e-12) {
      best = i;
    } else if (std::abs(a.objective - b.objective) <= 1e-12 &&
               (a.high < b.high || (a.high == b.high && a.low < b.low))) {
      best = i;
    }
  }
  FitResult r;
  r.thresholds = points[best];
  r.objective = scores[best].objective;
  r.scores = std::move(scores);
  return r;
}

std::vector<double> axis_from_json(const json& v, const std::string& key) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw std::invalid_argument("grid: '" + key + "' must hold numbers");
      out.push_back(x.get<double>());
    }
    if (out.empty()) throw std::invalid_argument("grid: '" + key + "' is empty");
    return out;
  }
  if (v.is_object() && v.contains("from") && v.contains("to") && v.contains("step")) {
    return grid_range(v["from"].get<double>(), v["to"].get<double>(), v["step"].get<double>());
  }
  throw std::invalid_argument("grid: '" + key + "' must be an array or {from, to, step}");
}

}  // namespace

TrainingItem make_training_item(const Recording& recording, LabelTrack truth) {
  TrainingItem item{prepare(recording), std::move(truth)};
  require_aligned(item.truth, LabelTrack::unlabelled(item.prepared.t_us));
  return item;
}

std::vector<double> grid_range(double from, double to, double step) {
  if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to) || to < from) {
    throw std::invalid_argument("grid: invalid range");
  }
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(from + step * static_cast<double>(i));
  return out;
}

ThresholdGrid ThresholdGrid::defaults() {
  return {grid_range(10, 60, 5), grid_range(100, 300, 10), grid_range(2, 20, 1),
          grid_range(30, 120, 5)};
}

ThresholdGrid parse_grid(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("grid: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("grid: expected a JSON object");
  ThresholdGrid g = ThresholdGrid::defaults();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "sacc_low") g.sacc_low = axis_from_json(*it, k);
    else if (k == "sacc_high") g.sacc_high = axis_from_json(*it, k);
    else if (k == "gaze_low") g.gaze_low = axis_from_json(*it, k);
    else if (k == "gaze_high") g.gaze_high = axis_from_json(*it, k);
    else throw std::invalid_argument("grid: unknown key '" + k + "'");
  }
  return g;
}

double saccade_objective(const EvaluationReport& report) {
  const auto& s = report.at(PrimaryLabel::Saccade);
  return (s.sample_f1 + s.event_f1) / 2.0;
}

double gaze_objective(const EvaluationReport& report) {
  double sum = 0.0;
  for (auto l : {PrimaryLabel::Fixation, PrimaryLabel::SmoothPursuit, PrimaryLabel::Noise}) {
    const auto& c = report.at(l);
    sum += (c.sample_f1 + c.event_f1) / 2.0;
  }
  return sum / 3.0;
}

EvaluationReport evaluate_thresholds(std::span<const TrainingItem> items,
                                     const ThresholdSet& thresholds, Variant variant) {
  CorpusAccumulator acc;
  for (const auto& item : items) {
    acc.add(item.truth, run_pipeline_detailed(item.prepared, variant, thresholds).track);
  }
  return acc.report();
}

FitResult fit_saccade_thresholds(std::span<const TrainingItem> items, const ThresholdSet& base,
                                 std::span<const double> lows, std::span<const double> highs,
                                 const FitOptions& options, const Objective& objective) {
  return fit_pairs(
      items, base, lows, highs,
      [](ThresholdSet& t, double lo, double hi) {
        t.sacc_low = lo;
        t.sacc_high = hi;
      },
      options, objective);
}

FitResult fit_gaze_thresholds(std::span<const TrainingItem> items, const ThresholdSet& base,
                              std::span<const double> lows, std::span<const double> highs,
                              const FitOptions& options, const Objective& objective) {
  return fit_pairs(
      items, base, lows, highs,
      [](ThresholdSet& t, double lo, double hi) {
        t.gaze_low = lo;
        t.gaze_high = hi;
      },
      options, objective);
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gaze360

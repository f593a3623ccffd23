#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze360/detector.hpp"
#include "gaze360/evaluation.hpp"

namespace gaze360 {

/// A training recording with its ground truth. The prepared recording
/// borrows the Recording, which must stay alive.
struct TrainingItem {
  PreparedRecording prepared;
  LabelTrack truth;
};

TrainingItem make_training_item(const Recording& recording, LabelTrack truth);

/// Candidate values per threshold. Pairs with low >= high are skipped.
struct ThresholdGrid {
  std::vector<double> sacc_low;
  std::vector<double> sacc_high;
  std::vector<double> gaze_low;
  std::vector<double> gaze_high;

  static ThresholdGrid defaults();
};

/// Inclusive arithmetic range; rounding keeps the end point despite float steps.
std::vector<double> grid_range(double from, double to, double step);

/// JSON object whose keys are threshold names and values either explicit
/// arrays or {"from", "to", "step"}. Missing keys keep the default grid.
ThresholdGrid parse_grid(std::string_view json_text);

using Objective = std::function<double(const EvaluationReport&)>;

/// Mean of SACCADE sample F1 and event F1.
double saccade_objective(const EvaluationReport& report);
/// Mean over FIXATION, SP and NOISE of (sample F1 + event F1) / 2.
double gaze_objective(const EvaluationReport& report);

/// Pooled evaluation of the combined pipeline over the items.
EvaluationReport evaluate_thresholds(std::span<const TrainingItem> items,
                                     const ThresholdSet& thresholds,
                                     Variant variant = Variant::Combined);

struct GridScore {
  double low = 0.0;
  double high = 0.0;
  double objective = 0.0;
};

struct FitResult {
  ThresholdSet thresholds;
  double objective = 0.0;
  std::vector<GridScore> scores;  // every evaluated point, grid order
};

struct FitOptions {
  unsigned jobs = 0;  // 0: hardware concurrency
  Variant variant = Variant::Combined;
};

/// Maximises `objective` over (sacc_low, sacc_high); other thresholds come
/// from `base`. Ties go to the smallest (high, low).
FitResult fit_saccade_thresholds(std::span<const TrainingItem> items, const ThresholdSet& base,
                                 std::span<const double> lows, std::span<const double> highs,
                                 const FitOptions& options = {},
                                 const Objective& objective = saccade_objective);

FitResult fit_gaze_thresholds(std::span<const TrainingItem> items, const ThresholdSet& base,
                              std::span<const double> lows, std::span<const double> highs,
                              const FitOptions& options = {},
                              const Objective& objective = gaze_objective);

/// Runs f(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f);

}  // namespace gaze360

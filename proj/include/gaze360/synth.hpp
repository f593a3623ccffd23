#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gaze360/labels.hpp"
#include "gaze360/recording.hpp"

namespace gaze360 {

enum class PhaseKind { BasicEm, VorFixation, LongPursuit, HeadPursuit, Okn };

std::string_view to_token(PhaseKind kind);
PhaseKind phase_kind_from_token(std::string_view token);

/// One block of the synthetic stimulus. Speeds in deg/s, angles in degrees,
/// times in seconds.
struct PhaseSpec {
  PhaseKind kind = PhaseKind::BasicEm;
  double duration = 10.0;
  /// BASIC_EM: pursuit speed. VOR_FIXATION: head speed. LONG_PURSUIT and
  /// HEAD_PURSUIT: target speed. OKN: stimulus speed.
  double target_speed = 20.0;
  /// BASIC_EM: half-width of the target box. VOR_FIXATION: peak-to-peak head
  /// yaw. LONG_PURSUIT / HEAD_PURSUIT: sweep length. OKN: length of one pass.
  double extent = 15.0;
  double noise_sd = 0.15;

  /// LONG_PURSUIT: share of each sweep carried by the head.
  double head_ratio = 0.5;
  /// OKN: head yaw speed during the phase (0 keeps the head still).
  double head_speed = 0.0;
  /// OKN: slow-phase eye speed as a fraction of the stimulus speed.
  double gain = 1.0;
  double pause_s = 2.5;
  double sequence_s = 5.0;
  /// Fixation emitted before the phase, standing in for an instruction screen.
  double instruction_s = 0.0;

  /// Throws std::invalid_argument for out-of-range parameters.
  void validate() const;
};

/// Defaults for a phase kind, matching the published stimulus where it gives numbers.
PhaseSpec default_phase(PhaseKind kind);

/// The five phases, 10 s each.
std::vector<PhaseSpec> standard_session();

/// Accepts a JSON array of phase objects, or an object with a "phases"
/// array. Missing fields take the kind's defaults.
std::vector<PhaseSpec> parse_phases(std::string_view json_text);
std::string serialize_phases(const std::vector<PhaseSpec>& phases);

struct SyntheticTrace {
  Recording recording;
  LabelTrack truth;
};

/// Deterministic for a given seed (and standard library).
SyntheticTrace generate(const std::vector<PhaseSpec>& phases, double rate_hz,
                        std::uint64_t seed);

/// Samples within `margin_us` of a label change in either tier.
std::vector<bool> near_transition(const LabelTrack& track, std::int64_t margin_us);

}  // namespace gaze360

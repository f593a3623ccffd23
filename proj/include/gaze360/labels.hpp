#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gaze360 {

enum class PrimaryLabel : std::uint8_t { Unlabelled, Fixation, Saccade, SmoothPursuit, Noise };

enum class SecondaryLabel : std::uint8_t { None, Vor, Okn, OknVor, HeadPursuit };

enum class Tier : std::uint8_t { Primary, Secondary };

/// Fixed uppercase tokens used by every file format and the HTTP API.
std::string_view to_token(PrimaryLabel label);
std::string_view to_token(SecondaryLabel label);
std::optional<PrimaryLabel> primary_from_token(std::string_view token);
std::optional<SecondaryLabel> secondary_from_token(std::string_view token);

inline constexpr PrimaryLabel kScoredPrimary[] = {PrimaryLabel::Fixation, PrimaryLabel::Saccade,
                                                  PrimaryLabel::SmoothPursuit, PrimaryLabel::Noise};
inline constexpr SecondaryLabel kScoredSecondary[] = {SecondaryLabel::Okn, SecondaryLabel::Vor,
                                                      SecondaryLabel::OknVor,
                                                      SecondaryLabel::HeadPursuit};

/// A label of either tier.
class LabelClass {
 public:
  LabelClass(PrimaryLabel l) : value_(l) {}    // NOLINT(google-explicit-constructor)
  LabelClass(SecondaryLabel l) : value_(l) {}  // NOLINT(google-explicit-constructor)

  Tier tier() const { return value_.index() == 0 ? Tier::Primary : Tier::Secondary; }
  PrimaryLabel primary() const { return std::get<PrimaryLabel>(value_); }
  SecondaryLabel secondary() const { return std::get<SecondaryLabel>(value_); }
  std::string_view token() const;
  /// The "nothing assigned" value of the tier; never forms an event.
  bool is_empty() const;

  friend bool operator==(const LabelClass&, const LabelClass&) = default;

 private:
  std::variant<PrimaryLabel, SecondaryLabel> value_;
};

/// Per-sample two-tier labels, aligned to the recording's timestamps.
struct LabelTrack {
  std::vector<std::int64_t> t_us;
  std::vector<PrimaryLabel> primary;
  std::vector<SecondaryLabel> secondary;

  static LabelTrack unlabelled(std::vector<std::int64_t> timestamps);

  std::size_t size() const { return t_us.size(); }
  bool complete() const;
  LabelClass at(std::size_t i, Tier tier) const;

  friend bool operator==(const LabelTrack&, const LabelTrack&) = default;
};

/// Run of identical labels over [start_t, end_t).
struct EventSegment {
  std::int64_t start_t = 0;
  std::int64_t end_t = 0;
  LabelClass label = PrimaryLabel::Unlabelled;
  std::size_t first_sample = 0;
  std::size_t n_samples = 0;
  /// Derived statistics; NaN until filled by annotate_event_stats().
  double amplitude_deg = std::numeric_limits<double>::quiet_NaN();
  double peak_speed_dps = std::numeric_limits<double>::quiet_NaN();

  std::size_t end_sample() const { return first_sample + n_samples; }
  std::int64_t duration_us() const { return end_t - start_t; }
};

struct TieredEvents {
  std::vector<EventSegment> primary;
  std::vector<EventSegment> secondary;
  std::vector<std::string> warnings;

  const std::vector<EventSegment>& tier(Tier t) const {
    return t == Tier::Primary ? primary : secondary;
  }
};

/// Median sample spacing, used to close the final event of a track.
std::int64_t nominal_step_us(std::span<const std::int64_t> t_us);

/// Time covered by the track: last timestamp plus one nominal step, minus the first.
std::int64_t track_duration_us(const LabelTrack& track);

/// Maximal runs of identical labels per tier. Unlabelled / NONE runs do not
/// form events.
TieredEvents samples_to_events(const LabelTrack& track);

/// Inverse of samples_to_events: samples not covered by an event get the
/// tier's empty label.
LabelTrack events_to_samples(const TieredEvents& events, std::vector<std::int64_t> timestamps);

/// Events of one class, in order.
std::vector<EventSegment> events_of(std::span<const EventSegment> events, const LabelClass& label);

}  // namespace gaze360

#include "gaze360/labels.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>

namespace gaze360 {

namespace {

constexpr std::array<std::pair<PrimaryLabel, std::string_view>, 5> kPrimaryTokens{{
    {PrimaryLabel::Unlabelled, "UNLABELLED"},
    {PrimaryLabel::Fixation, "FIXATION"},
    {PrimaryLabel::Saccade, "SACCADE"},
    {PrimaryLabel::SmoothPursuit, "SP"},
    {PrimaryLabel::Noise, "NOISE"},
}};

constexpr std::array<std::pair<SecondaryLabel, std::string_view>, 5> kSecondaryTokens{{
    {SecondaryLabel::None, "NONE"},
    {SecondaryLabel::Vor, "VOR"},
    {SecondaryLabel::Okn, "OKN"},
    {SecondaryLabel::OknVor, "OKN_VOR"},
    {SecondaryLabel::HeadPursuit, "HEAD_PURSUIT"},
}};

template <typename Table, typename Label>
std::string_view lookup_token(const Table& table, Label label) {
  for (const auto& [l, tok] : table) {
    if (l == label) return tok;
  }
  throw std::logic_error("unknown label value");
}

template <typename Label, typename Table>
std::optional<Label> lookup_label(const Table& table, std::string_view token) {
  for (const auto& [l, tok] : table) {
    if (tok == token) return l;
  }
  return std::nullopt;
}

template <typename Label>
void append_runs(const std::vector<std::int64_t>& t, const std::vector<Label>& labels,
                 std::int64_t final_end, std::vector<EventSegment>& out) {
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    const LabelClass cls{labels[i]};
    if (!cls.is_empty()) {
      EventSegment ev;
      ev.start_t = t[i];
      ev.end_t = j < t.size() ? t[j] : final_end;
      ev.label = cls;
      ev.first_sample = i;
      ev.n_samples = j - i;
      out.push_back(ev);
    }
    i = j;
  }
}

}  // namespace

std::string_view to_token(PrimaryLabel label) { return lookup_token(kPrimaryTokens, label); }
std::string_view to_token(SecondaryLabel label) { return lookup_token(kSecondaryTokens, label); }

std::optional<PrimaryLabel> primary_from_token(std::string_view token) {
  return lookup_label<PrimaryLabel>(kPrimaryTokens, token);
}

std::optional<SecondaryLabel> secondary_from_token(std::string_view token) {
  return lookup_label<SecondaryLabel>(kSecondaryTokens, token);
}

std::string_view LabelClass::token() const {
  return tier() == Tier::Primary ? to_token(primary()) : to_token(secondary());
}

bool LabelClass::is_empty() const {
  return tier() == Tier::Primary ? primary() == PrimaryLabel::Unlabelled
                                 : secondary() == SecondaryLabel::None;
}

LabelTrack LabelTrack::unlabelled(std::vector<std::int64_t> timestamps) {
  LabelTrack track;
  track.primary.assign(timestamps.size(), PrimaryLabel::Unlabelled);
  track.secondary.assign(timestamps.size(), SecondaryLabel::None);
  track.t_us = std::move(timestamps);
  return track;
}

bool LabelTrack::complete() const {
  return std::none_of(primary.begin(), primary.end(),
                      [](PrimaryLabel l) { return l == PrimaryLabel::Unlabelled; });
}

LabelClass LabelTrack::at(std::size_t i, Tier tier) const {
  if (tier == Tier::Primary) return primary.at(i);
  return secondary.at(i);
}

std::int64_t nominal_step_us(std::span<const std::int64_t> t_us) {
  if (t_us.size() < 2) return 1;
  std::vector<std::int64_t> steps;
  steps.reserve(t_us.size() - 1);
  for (std::size_t i = 1; i < t_us.size(); ++i) steps.push_back(t_us[i] - t_us[i - 1]);
  auto mid = steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2);
  std::nth_element(steps.begin(), mid, steps.end());
  return std::max<std::int64_t>(*mid, 1);
}

std::int64_t track_duration_us(const LabelTrack& track) {
  if (track.t_us.empty()) return 0;
  return track.t_us.back() + nominal_step_us(track.t_us) - track.t_us.front();
}

TieredEvents samples_to_events(const LabelTrack& track) {
  if (track.primary.size() != track.size() || track.secondary.size() != track.size()) {
    throw std::invalid_argument("samples_to_events: label columns differ in length");
  }
  TieredEvents out;
  if (track.t_us.empty()) return out;
  const std::int64_t final_end = track.t_us.back() + nominal_step_us(track.t_us);
  append_runs(track.t_us, track.primary, final_end, out.primary);
  append_runs(track.t_us, track.secondary, final_end, out.secondary);
  if (out.primary.empty()) out.warnings.emplace_back("track has no labelled primary samples");
  return out;
}

LabelTrack events_to_samples(const TieredEvents& events, std::vector<std::int64_t> timestamps) {
  LabelTrack track = LabelTrack::unlabelled(std::move(timestamps));
  const auto& t = track.t_us;
  auto fill = [&](const EventSegment& ev, auto&& assign) {
    auto lo = std::lower_bound(t.begin(), t.end(), ev.start_t);
    auto hi = std::lower_bound(t.begin(), t.end(), ev.end_t);
    for (auto it = lo; it != hi; ++it) assign(static_cast<std::size_t>(it - t.begin()));
  };
  for (const auto& ev : events.primary) {
    fill(ev, [&](std::size_t i) { track.primary[i] = ev.label.primary(); });
  }
  for (const auto& ev : events.secondary) {
    fill(ev, [&](std::size_t i) { track.secondary[i] = ev.label.secondary(); });
  }
  return track;
}

std::vector<EventSegment> events_of(std::span<const EventSegment> events, const LabelClass& label) {
  std::vector<EventSegment> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [&](const EventSegment& e) { return e.label == label; });
  return out;
}

}  // namespace gaze360

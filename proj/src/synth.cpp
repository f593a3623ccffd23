#include "gaze360/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace gaze360 {

namespace {

using json = nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Tangent basis at a direction: east is increasing longitude, north increasing latitude.
void tangent_basis(const SphericalDir& d, Eigen::Vector3d& east, Eigen::Vector3d& north) {
  const double lon = d.lon * kDeg, lat = d.lat * kDeg;
  east = {-std::sin(lon), std::cos(lon), 0.0};
  north = {-std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat)};
}

// Moves `dist` degrees along the great circle leaving `from` at `heading`
// (0 = east, 90 = north).
SphericalDir along(const SphericalDir& from, double heading_deg, double dist_deg) {
  Eigen::Vector3d east, north;
  tangent_basis(from, east, north);
  const Eigen::Vector3d t =
      std::cos(heading_deg * kDeg) * east + std::sin(heading_deg * kDeg) * north;
  const Eigen::Vector3d p = to_unit(from);
  return from_unit(std::cos(dist_deg * kDeg) * p + std::sin(dist_deg * kDeg) * t);
}

double heading_to(const SphericalDir& from, const SphericalDir& to) {
  Eigen::Vector3d east, north;
  tangent_basis(from, east, north);
  const Eigen::Vector3d p = to_unit(from), q = to_unit(to);
  const Eigen::Vector3d t = q - p.dot(q) * p;
  return std::atan2(t.dot(north), t.dot(east)) / kDeg;
}

SphericalDir slerp(const SphericalDir& a, const SphericalDir& b, double f) {
  const double theta = great_circle_deg(a, b) * kDeg;
  if (theta < 1e-12) return a;
  const Eigen::Vector3d pa = to_unit(a), pb = to_unit(b);
  return from_unit((std::sin((1.0 - f) * theta) * pa + std::sin(f * theta) * pb) /
                   std::sin(theta));
}

// Raised-cosine speed profile, integrated: position fraction at normalised time u.
double saccade_profile(double u) {
  return u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi);
}

std::size_t saccade_samples(double amplitude, double rate) {
  // 30-60 ms, following the main sequence, but short enough that the first
  // and last steps still clear the default low saccade threshold with margin.
  const int n_min = std::max(2, static_cast<int>(std::ceil(0.030 * rate)));
  const int n_max = std::max(n_min, static_cast<int>(std::floor(0.060 * rate)));
  int n = std::clamp(static_cast<int>(std::lround((21.0 + 2.2 * amplitude) * 1e-3 * rate)), n_min,
                     n_max);
  while (n > 2 && amplitude * saccade_profile(1.0 / n) * rate < 42.0) --n;
  return static_cast<std::size_t>(n);
}

double triangle(double d, double half_amp) {
  const double period = 4.0 * half_amp;
  const double phase = std::fmod(d + half_amp, period);
  return phase < 2.0 * half_amp ? phase - half_amp : 3.0 * half_amp - phase;
}

// Head yaw as a function of sample index. With half_amp 0 the motion is a
// ramp in `sign` direction, otherwise a triangle wave starting upwards.
struct HeadMotion {
  HeadPose base;
  double speed = 0.0;
  double half_amp = 0.0;
  double sign = 1.0;
  std::size_t origin = 0;

  HeadPose at(std::size_t i, double rate) const {
    if (speed <= 0.0) return base;
    const double d = speed * static_cast<double>(i - origin) / rate;
    const double offset = half_amp > 0.0 ? triangle(d, half_amp) : sign * d;
    return HeadPose::canonical(base.yaw + offset, base.pitch, base.roll);
  }
};

class Builder {
 public:
  Builder(double rate, std::uint64_t seed) : rate(rate), rng(seed) {}

  std::size_t size() const { return truth.t_us.size(); }
  std::size_t samples_for(double seconds) const {
    return static_cast<std::size_t>(std::llround(seconds * rate));
  }

  void hold_head() { motion = HeadMotion{head}; }

  // gaze_at(k, head) gives the world gaze k samples after the last emitted one.
  template <class F>
  void emit(std::size_t n, F&& gaze_at, PrimaryLabel p, SecondaryLabel s) {
    for (std::size_t k = 1; k <= n; ++k) {
      const std::size_t i = size();
      const HeadPose h = motion.at(i, rate);
      const SphericalDir g = gaze_at(k, h);
      push(i, g, h, p, s);
    }
  }

  double rate;
  double noise_sd = 0.0;
  std::mt19937_64 rng;
  SphericalDir gaze;  // noise-free state at the last emitted sample
  HeadPose head;
  HeadMotion motion;
  std::vector<GazeSample> samples;
  LabelTrack truth;

 private:
  void push(std::size_t i, const SphericalDir& g, const HeadPose& h, PrimaryLabel p,
            SecondaryLabel s) {
    gaze = g;
    head = h;
    SphericalDir observed = g;
    if (noise_sd > 0.0) {
      std::normal_distribution<double> jitter(0.0, noise_sd);
      const double e = jitter(rng), n = jitter(rng);
      observed = along(g, std::atan2(n, e) / kDeg, std::hypot(e, n));
    }
    const auto t = static_cast<std::int64_t>(std::llround(static_cast<double>(i) * 1e6 / rate));
    samples.push_back({t, observed, h, true});
    truth.t_us.push_back(t);
    truth.primary.push_back(p);
    truth.secondary.push_back(s);
  }
};

void fixate(Builder& b, std::size_t n, SecondaryLabel s = SecondaryLabel::None) {
  const SphericalDir g = b.gaze;
  b.emit(n, [&](std::size_t, const HeadPose&) { return g; }, PrimaryLabel::Fixation, s);
}

void fixate_in_head(Builder& b, std::size_t n, SecondaryLabel s) {
  const FovDir f = world_to_fov(b.gaze, b.head);
  b.emit(n, [&](std::size_t, const HeadPose& h) { return fov_to_world(f, h); },
         PrimaryLabel::Fixation, s);
}

std::size_t saccade_length(const Builder& b, const SphericalDir& target) {
  return saccade_samples(great_circle_deg(b.gaze, target), b.rate);
}

void saccade(Builder& b, const SphericalDir& target, SecondaryLabel s = SecondaryLabel::None) {
  const SphericalDir from = b.gaze;
  const std::size_t n = saccade_length(b, target);
  b.emit(n,
         [&](std::size_t k, const HeadPose&) {
           return slerp(from, target, saccade_profile(static_cast<double>(k) / n));
         },
         PrimaryLabel::Saccade, s);
}

void pursue(Builder& b, std::size_t n, double heading, double speed, SecondaryLabel s) {
  const SphericalDir from = b.gaze;
  b.emit(n,
         [&](std::size_t k, const HeadPose&) {
           return along(from, heading, speed * static_cast<double>(k) / b.rate);
         },
         PrimaryLabel::SmoothPursuit, s);
}

// Moves the gaze to `target`: small offsets drift slowly as part of a fixation,
// larger ones use a saccade.
void reposition(Builder& b, const SphericalDir& target, SecondaryLabel fix_label) {
  const double dist = great_circle_deg(b.gaze, target);
  if (dist < 0.05) return;
  if (dist < 3.0) {
    const SphericalDir from = b.gaze;
    const std::size_t n = b.samples_for(std::max(0.3, dist / 4.0));
    b.emit(n,
           [&](std::size_t k, const HeadPose&) {
             return slerp(from, target, static_cast<double>(k) / n);
           },
           PrimaryLabel::Fixation, fix_label);
    return;
  }
  saccade(b, target);
}

void basic_em(Builder& b, const PhaseSpec& p, std::size_t end) {
  b.hold_head();
  const HeadPose head = b.head;
  const double half_lon = p.extent, half_lat = p.extent * 2.0 / 3.0;
  auto world = [&](double az, double el) { return fov_to_world({az, el, false}, head); };
  auto inside = [&](const SphericalDir& g) {
    const FovDir f = world_to_fov(g, head);
    return std::abs(f.azimuth) <= half_lon && std::abs(f.elevation) <= half_lat;
  };
  auto left = [&] { return end > b.size() ? end - b.size() : 0; };
  std::uniform_real_distribution<double> fix_s(0.4, 0.8), sp_s(0.6, 1.2), unit(-1.0, 1.0),
      post_amp(5.0, 10.0);

  if (!inside(b.gaze)) reposition(b, world(0.0, 0.0), SecondaryLabel::None);

  auto random_saccade = [&]() -> bool {
    SphericalDir target = b.gaze;
    for (int tries = 0; tries < 100; ++tries) {
      const SphericalDir cand = world(half_lon * unit(b.rng), half_lat * unit(b.rng));
      const double amp = great_circle_deg(b.gaze, cand);
      if (amp >= 5.0 && amp <= 25.0) {
        target = cand;
        break;
      }
    }
    if (great_circle_deg(b.gaze, target) < 5.0) return false;
    if (left() < saccade_length(b, target) + 1) return false;
    saccade(b, target);
    return true;
  };
  auto fixation = [&] {
    fixate(b, std::min(left(), b.samples_for(fix_s(b.rng))));
  };

  while (left() > 0) {
    fixation();
    if (!random_saccade()) continue;
    fixation();
    if (left() == 0) break;

    // Pursuit heads roughly towards the box centre so it stays inside.
    const double heading = heading_to(b.gaze, world(0.0, 0.0)) + 45.0 * unit(b.rng);
    std::size_t n = std::min(left(), b.samples_for(sp_s(b.rng)));
    // Leave room for a 5 deg catch-up saccade along the pursuit direction.
    while (n > 0 && !inside(along(b.gaze, heading, p.target_speed * n / b.rate + 5.0))) --n;
    if (n < b.samples_for(0.4)) continue;
    pursue(b, n, heading, p.target_speed, SecondaryLabel::None);

    // The following saccade keeps roughly the pursuit direction, as a catch-up
    // would; a reversed one would mimic an optokinetic reset.
    SphericalDir target = b.gaze;
    for (int tries = 0; tries < 50; ++tries) {
      target = along(b.gaze, heading + 30.0 * unit(b.rng), post_amp(b.rng));
      if (inside(target)) break;
    }
    if (!inside(target)) target = along(b.gaze, heading, 5.0);
    if (left() >= saccade_length(b, target) + 1) saccade(b, target);
  }
}

void vor_fixation(Builder& b, const PhaseSpec& p, std::size_t end) {
  b.motion = HeadMotion{b.head, p.target_speed, p.extent / 2.0, 1.0, b.size()};
  fixate(b, end - std::min(end, b.size()), SecondaryLabel::Vor);
  b.hold_head();
}

void head_pursuit(Builder& b, const PhaseSpec& p, std::size_t end) {
  b.motion = HeadMotion{b.head, p.target_speed, p.extent / 2.0, 1.0, b.size()};
  fixate_in_head(b, end - std::min(end, b.size()), SecondaryLabel::HeadPursuit);
  b.hold_head();
}

void long_pursuit(Builder& b, const PhaseSpec& p, std::size_t end) {
  b.hold_head();
  const double eye_half = (1.0 - p.head_ratio) * p.extent / 2.0;
  const double head_leg = p.head_ratio * p.extent;
  auto left = [&] { return end > b.size() ? end - b.size() : 0; };

  reposition(b, fov_to_world({-eye_half, 0.0, false}, b.head), SecondaryLabel::None);
  double sign = 1.0;
  while (left() > 0) {
    const std::size_t n_sp =
        std::min(left(), b.samples_for(2.0 * eye_half / p.target_speed));
    pursue(b, n_sp, sign > 0 ? 0.0 : 180.0, p.target_speed, SecondaryLabel::None);
    if (head_leg > 0.0 && left() > 0) {
      b.motion = HeadMotion{b.head, p.target_speed, 0.0, sign, b.size()};
      fixate_in_head(b, std::min(left(), b.samples_for(head_leg / p.target_speed)),
                     SecondaryLabel::HeadPursuit);
      b.hold_head();
    }
    sign = -sign;
  }
}

void okn(Builder& b, const PhaseSpec& p, std::size_t end) {
  const bool head_moves = p.head_speed > 0.0;
  const SecondaryLabel fix_label = head_moves ? SecondaryLabel::Vor : SecondaryLabel::None;
  const SecondaryLabel okn_label = head_moves ? SecondaryLabel::OknVor : SecondaryLabel::Okn;
  const SphericalDir centre = b.head.direction();
  auto at = [&](double x) { return SphericalDir::canonical(centre.lon + x, centre.lat); };
  auto left = [&] { return end > b.size() ? end - b.size() : 0; };

  b.hold_head();
  reposition(b, centre, SecondaryLabel::None);
  if (head_moves) b.motion = HeadMotion{b.head, p.head_speed, 20.0, 1.0, b.size()};
  fixate(b, std::min(left(), b.samples_for(0.5)), fix_label);

  const double slow = p.gain * p.target_speed;
  const std::size_t pass_n = b.samples_for(p.extent / slow);
  const std::size_t reset_n = saccade_samples(p.extent, b.rate);
  const std::size_t edge_n = saccade_samples(p.extent / 2.0, b.rate);
  const auto passes = std::max<std::size_t>(
      1, static_cast<std::size_t>(p.sequence_s * b.rate / static_cast<double>(pass_n + reset_n)));

  double dir = 1.0;
  while (left() > 2 * edge_n + pass_n) {
    saccade(b, at(-dir * p.extent / 2.0), okn_label);
    for (std::size_t k = 0; k < passes; ++k) {
      if (k > 0) {
        if (left() < reset_n + pass_n + edge_n) break;
        saccade(b, at(-dir * p.extent / 2.0), okn_label);
      }
      pursue(b, pass_n, dir > 0 ? 0.0 : 180.0, slow, okn_label);
    }
    saccade(b, centre, okn_label);
    fixate(b, std::min(left(), b.samples_for(p.pause_s)), fix_label);
    dir = -dir;
  }
  fixate(b, left(), fix_label);
  b.hold_head();
}

bool finite_at_least(double v, double lo) { return std::isfinite(v) && v >= lo; }
bool finite_above(double v, double lo) { return std::isfinite(v) && v > lo; }

}  // namespace

std::string_view to_token(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::BasicEm: return "BASIC_EM";
    case PhaseKind::VorFixation: return "VOR_FIXATION";
    case PhaseKind::LongPursuit: return "LONG_PURSUIT";
    case PhaseKind::HeadPursuit: return "HEAD_PURSUIT";
    case PhaseKind::Okn: return "OKN";
  }
  return "BASIC_EM";
}

PhaseKind phase_kind_from_token(std::string_view token) {
  for (auto k : {PhaseKind::BasicEm, PhaseKind::VorFixation, PhaseKind::LongPursuit,
                 PhaseKind::HeadPursuit, PhaseKind::Okn}) {
    if (to_token(k) == token) return k;
  }
  throw std::invalid_argument("unknown phase kind '" + std::string(token) + "'");
}

void PhaseSpec::validate() const {
  const std::string name(to_token(kind));
  auto fail = [&](const std::string& what) { throw std::invalid_argument(name + ": " + what); };
  if (!finite_above(duration, 0.0)) fail("duration must be > 0");
  if (!finite_above(target_speed, 0.0)) fail("target_speed must be > 0");
  if (!finite_above(extent, 0.0)) fail("extent must be > 0");
  if (!finite_at_least(noise_sd, 0.0)) fail("noise_sd must be >= 0");
  if (!finite_at_least(instruction_s, 0.0)) fail("instruction_s must be >= 0");
  switch (kind) {
    case PhaseKind::BasicEm:
      if (extent > 40.0) fail("extent (box half-width) must be <= 40");
      if (extent < 5.0) fail("extent (box half-width) must be >= 5");
      break;
    case PhaseKind::VorFixation:
      if (extent > 80.0) fail("extent (head yaw, peak to peak) must be <= 80");
      break;
    case PhaseKind::LongPursuit:
      if (!finite_at_least(head_ratio, 0.0) || head_ratio >= 1.0) fail("head_ratio must be in [0, 1)");
      if ((1.0 - head_ratio) * extent / 2.0 > 45.0) fail("eye-in-head excursion exceeds 45 deg");
      break;
    case PhaseKind::HeadPursuit: break;
    case PhaseKind::Okn:
      if (extent > 60.0 || extent < 6.0) fail("extent (pass length) must be in [6, 60]");
      if (!finite_above(gain, 0.0) || gain > 1.5) fail("gain must be in (0, 1.5]");
      if (!finite_at_least(pause_s, 0.0)) fail("pause_s must be >= 0");
      if (!finite_above(sequence_s, 0.0)) fail("sequence_s must be > 0");
      if (!finite_at_least(head_speed, 0.0)) fail("head_speed must be >= 0");
      break;
  }
}

PhaseSpec default_phase(PhaseKind kind) {
  PhaseSpec p;
  p.kind = kind;
  switch (kind) {
    case PhaseKind::BasicEm:
      p.target_speed = 20.0;
      p.extent = 15.0;
      break;
    case PhaseKind::VorFixation:
      p.target_speed = 20.0;
      p.extent = 60.0;
      break;
    case PhaseKind::LongPursuit:
      p.target_speed = 15.0;
      p.extent = 150.0;
      break;
    case PhaseKind::HeadPursuit:
      p.target_speed = 15.0;
      p.extent = 150.0;
      break;
    case PhaseKind::Okn:
      p.target_speed = 50.0;
      p.extent = 25.0;
      // Observers rarely follow a 50 deg/s stimulus with unit gain.
      p.gain = 0.6;
      break;
  }
  return p;
}

std::vector<PhaseSpec> standard_session() {
  return {default_phase(PhaseKind::BasicEm), default_phase(PhaseKind::VorFixation),
          default_phase(PhaseKind::LongPursuit), default_phase(PhaseKind::HeadPursuit),
          default_phase(PhaseKind::Okn)};
}

std::vector<PhaseSpec> parse_phases(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("phases: ") + e.what());
  }
  if (j.is_object() && j.contains("phases")) j = j["phases"];
  if (!j.is_array()) throw std::invalid_argument("phases: expected an array of phase objects");

  std::vector<PhaseSpec> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("kind") || !item["kind"].is_string()) {
      throw std::invalid_argument("phases: every phase needs a string 'kind'");
    }
    PhaseSpec p = default_phase(phase_kind_from_token(item["kind"].get<std::string>()));
    const std::pair<const char*, double*> fields[] = {
        {"duration", &p.duration},     {"target_speed", &p.target_speed},
        {"extent", &p.extent},         {"noise_sd", &p.noise_sd},
        {"head_ratio", &p.head_ratio}, {"head_speed", &p.head_speed},
        {"gain", &p.gain},             {"pause_s", &p.pause_s},
        {"sequence_s", &p.sequence_s}, {"instruction_s", &p.instruction_s}};
    for (auto it = item.begin(); it != item.end(); ++it) {
      if (it.key() == "kind") continue;
      auto f = std::find_if(std::begin(fields), std::end(fields),
                            [&](const auto& kv) { return it.key() == kv.first; });
      if (f == std::end(fields)) throw std::invalid_argument("phases: unknown field '" + it.key() + "'");
      if (!it->is_number()) throw std::invalid_argument("phases: '" + it.key() + "' must be a number");
      *f->second = it->get<double>();
    }
    p.validate();
    out.push_back(p);
  }
  return out;
}

std::string serialize_phases(const std::vector<PhaseSpec>& phases) {
  json arr = json::array();
  for (const auto& p : phases) {
    arr.push_back({{"kind", std::string(to_token(p.kind))},
                   {"duration", p.duration},
                   {"target_speed", p.target_speed},
                   {"extent", p.extent},
                   {"noise_sd", p.noise_sd},
                   {"head_ratio", p.head_ratio},
                   {"head_speed", p.head_speed},
                   {"gain", p.gain},
                   {"pause_s", p.pause_s},
                   {"sequence_s", p.sequence_s},
                   {"instruction_s", p.instruction_s}});
  }
  return arr.dump(2) + "\n";
}

SyntheticTrace generate(const std::vector<PhaseSpec>& phases, double rate_hz,
                        std::uint64_t seed) {
  if (!finite_above(rate_hz, 0.0)) throw std::invalid_argument("sampling rate must be > 0");
  if (rate_hz < 60.0) throw std::invalid_argument("sampling rate below 60 Hz cannot resolve saccades");
  for (const auto& p : phases) p.validate();

  Builder b(rate_hz, seed);
  for (const auto& p : phases) {
    b.noise_sd = p.noise_sd;
    b.hold_head();
    if (p.instruction_s > 0.0) fixate(b, b.samples_for(p.instruction_s));
    const std::size_t end = b.size() + b.samples_for(p.duration);
    switch (p.kind) {
      case PhaseKind::BasicEm: basic_em(b, p, end); break;
      case PhaseKind::VorFixation: vor_fixation(b, p, end); break;
      case PhaseKind::LongPursuit: long_pursuit(b, p, end); break;
      case PhaseKind::HeadPursuit: head_pursuit(b, p, end); break;
      case PhaseKind::Okn: okn(b, p, end); break;
    }
  }

  SyntheticTrace out;
  out.recording.meta.sampling_rate_hz = rate_hz;
  out.recording.meta.video_id = "synthetic";
  out.recording.meta.extra = {{"seed", std::to_string(seed)}};
  out.recording.samples = std::move(b.samples);
  out.truth = std::move(b.truth);
  return out;
}

std::vector<bool> near_transition(const LabelTrack& track, std::int64_t margin_us) {
  std::vector<std::int64_t> changes;
  for (std::size_t i = 1; i < track.size(); ++i) {
    if (track.primary[i] != track.primary[i - 1] || track.secondary[i] != track.secondary[i - 1]) {
      changes.push_back(track.t_us[i]);
    }
  }
  std::vector<bool> out(track.size(), false);
  for (std::size_t i = 0; i < track.size(); ++i) {
    const std::int64_t t = track.t_us[i];
    auto it = std::lower_bound(changes.begin(), changes.end(), t - margin_us);
    out[i] = it != changes.end() && *it <= t + margin_us;
  }
  return out;
}

}  // namespace gaze360

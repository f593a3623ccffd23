#include "gaze360/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

namespace gaze360 {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double wrap_longitude(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r - 180.0;
}

double clamp_latitude(double deg) { return std::clamp(deg, -90.0, 90.0); }

SphericalDir SphericalDir::canonical(double lon, double lat) {
  const double la = clamp_latitude(lat);
  if (std::abs(la) == 90.0) return {0.0, la};
  return {wrap_longitude(lon), la};
}

HeadPose HeadPose::canonical(double yaw, double pitch, double roll) {
  return {wrap_longitude(yaw), clamp_latitude(pitch), wrap_longitude(roll)};
}

Eigen::Vector3d to_unit(const SphericalDir& dir) {
  const double lon = dir.lon * kDegToRad;
  const double lat = dir.lat * kDegToRad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

SphericalDir from_unit(const Eigen::Vector3d& v) {
  const double horiz = std::hypot(v.x(), v.y());
  const double lat = std::atan2(v.z(), horiz) * kRadToDeg;
  if (horiz == 0.0) return {0.0, lat};
  return SphericalDir::canonical(std::atan2(v.y(), v.x()) * kRadToDeg, lat);
}

Flagged<SphericalDir> equirect_to_spherical(double x, double y, double width, double height) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(width) || !std::isfinite(height)) {
    throw std::invalid_argument("equirect_to_spherical: non-finite input");
  }
  if (width <= 0.0 || height <= 0.0) {
    throw std::invalid_argument("equirect_to_spherical: frame dimensions must be positive");
  }
  bool adjusted = false;
  if (x < 0.0 || x > width) adjusted = true;
  if (y < 0.0 || y > height) {
    y = std::clamp(y, 0.0, height);
    adjusted = true;
  }
  // Literal linear map: the pole rows keep their column so the map inverts.
  const double lon = wrap_longitude(x / width * 360.0 - 180.0);
  const double lat = 90.0 - y / height * 180.0;
  return {{lon, lat}, adjusted};
}

EquirectPoint spherical_to_equirect(const SphericalDir& dir, double width, double height) {
  return {(wrap_longitude(dir.lon) + 180.0) / 360.0 * width,
          (90.0 - clamp_latitude(dir.lat)) / 180.0 * height};
}

double great_circle_deg(const SphericalDir& a, const SphericalDir& b) {
  // Vincenty form of the central angle; stable for tiny and near-antipodal arcs.
  const double la1 = a.lat * kDegToRad;
  const double la2 = b.lat * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double c1 = std::cos(la1), s1 = std::sin(la1);
  const double c2 = std::cos(la2), s2 = std::sin(la2);
  const double cd = std::cos(dlon), sd = std::sin(dlon);
  const double num = std::hypot(c2 * sd, c1 * s2 - s1 * c2 * cd);
  const double den = s1 * s2 + c1 * c2 * cd;
  return std::atan2(num, den) * kRadToDeg;
}

Eigen::Matrix3d head_rotation(const HeadPose& head) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  return (AngleAxisd(head.yaw * kDegToRad, Vector3d::UnitZ()) *
          AngleAxisd(-head.pitch * kDegToRad, Vector3d::UnitY()) *
          AngleAxisd(head.roll * kDegToRad, Vector3d::UnitX()))
      .toRotationMatrix();
}

FovDir world_to_fov(const SphericalDir& gaze, const HeadPose& head) {
  const Eigen::Vector3d in_head = head_rotation(head).transpose() * to_unit(gaze);
  const SphericalDir d = from_unit(in_head);
  static const double kBackwardCos = -std::cos(1.0 * kDegToRad);
  return {d.lon, d.lat, in_head.x() < kBackwardCos};
}

SphericalDir fov_to_world(const FovDir& fov, const HeadPose& head) {
  return from_unit(head_rotation(head) * to_unit(fov.as_spherical()));
}

bool fov_within_bounds(const FovDir& fov, double fov_width_deg, double fov_height_deg,
                       double slack_deg) {
  return std::abs(fov.azimuth) <= fov_width_deg / 2.0 + slack_deg &&
         std::abs(fov.elevation) <= fov_height_deg / 2.0 + slack_deg;
}

std::vector<double> angular_speed_series(std::span<const TimedDir> samples) {
  std::vector<double> speed(samples.size(), kNaN);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& prev = samples[i - 1];
    const auto& cur = samples[i];
    if (cur.t_us <= prev.t_us) {
      throw std::invalid_argument("angular_speed_series: timestamps must be strictly increasing");
    }
    if (!prev.valid || !cur.valid) continue;
    const double dt = static_cast<double>(cur.t_us - prev.t_us) * 1e-6;
    speed[i] = great_circle_deg(prev.dir, cur.dir) / dt;
  }
  if (speed.size() >= 2 && samples[0].valid) speed[0] = speed[1];
  return speed;
}

double window_speed(std::span<const TimedDir> window) {
  const auto first = std::find_if(window.begin(), window.end(),
                                  [](const TimedDir& s) { return s.valid; });
  const auto last = std::find_if(window.rbegin(), window.rend(),
                                 [](const TimedDir& s) { return s.valid; });
  if (first == window.end() || &*first == &*last) return kNaN;
  const double dt = static_cast<double>(last->t_us - first->t_us) * 1e-6;
  if (dt <= 0.0) return kNaN;
  return great_circle_deg(first->dir, last->dir) / dt;
}

Eigen::Vector2d planar_displacement(const SphericalDir& from, const SphericalDir& to) {
  return {wrap_longitude(to.lon - from.lon), to.lat - from.lat};
}

double angle_between_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double cross = a.x() * b.y() - a.y() * b.x();
  return std::abs(std::atan2(cross, a.dot(b))) * kRadToDeg;
}

}  // namespace gaze360

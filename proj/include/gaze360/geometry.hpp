#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gaze360 {

/// Direction on the viewing sphere, degrees.
///
/// longitude in [-180, 180), latitude in [-90, 90]. Longitude 0 / latitude 0
/// is the centre of the equirectangular frame; longitude grows to the right
/// of the frame, latitude grows upwards.
struct SphericalDir {
  double lon = 0.0;
  double lat = 0.0;

  /// Wraps longitude, clamps latitude and sets longitude to 0 at the poles.
  static SphericalDir canonical(double lon, double lat);

  friend bool operator==(const SphericalDir&, const SphericalDir&) = default;
};

/// Head orientation, degrees.
///
/// Rotation order is intrinsic yaw (about world up), then pitch (about the
/// rotated right axis, positive raises the forward axis), then roll (about the
/// resulting forward axis, positive turns the head's left axis upwards).
/// yaw/pitch are the longitude/latitude of the head's forward direction.
struct HeadPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  static HeadPose canonical(double yaw, double pitch, double roll);
  SphericalDir direction() const { return {yaw, pitch}; }

  friend bool operator==(const HeadPose&, const HeadPose&) = default;
};

/// Eye-in-head direction relative to the head's forward axis, degrees.
struct FovDir {
  double azimuth = 0.0;
  double elevation = 0.0;
  /// Set when the gaze is within a degree of the head's backward axis; the
  /// azimuth is numerically meaningless there.
  bool ill_conditioned = false;

  SphericalDir as_spherical() const { return {azimuth, elevation}; }
};

/// Value plus a flag recording that the input was adjusted to produce it.
template <typename T>
struct Flagged {
  T value;
  bool adjusted = false;
};

struct EquirectPoint {
  double x = 0.0;
  double y = 0.0;
};

double wrap_longitude(double deg);
double clamp_latitude(double deg);

Eigen::Vector3d to_unit(const SphericalDir& dir);
SphericalDir from_unit(const Eigen::Vector3d& v);

/// Linear equirectangular map. x outside [0, width] wraps, y outside
/// [0, height] clamps; either sets the flag. Throws std::invalid_argument on
/// non-finite input or non-positive dimensions.
Flagged<SphericalDir> equirect_to_spherical(double x, double y, double width, double height);
EquirectPoint spherical_to_equirect(const SphericalDir& dir, double width, double height);

/// Central angle between two directions, degrees in [0, 180].
double great_circle_deg(const SphericalDir& a, const SphericalDir& b);

/// Rotation taking head-frame vectors to world-frame vectors.
Eigen::Matrix3d head_rotation(const HeadPose& head);

FovDir world_to_fov(const SphericalDir& gaze, const HeadPose& head);
SphericalDir fov_to_world(const FovDir& fov, const HeadPose& head);

/// True when the eye-in-head direction lies inside the headset field of view
/// (full extents in degrees) enlarged by `slack_deg` on every side.
bool fov_within_bounds(const FovDir& fov, double fov_width_deg, double fov_height_deg,
                       double slack_deg);

/// One point of a direction trajectory.
struct TimedDir {
  std::int64_t t_us = 0;
  SphericalDir dir;
  bool valid = true;
};

/// Sample-to-sample angular speed in deg/s.
///
/// speed[i] is the great-circle step from i-1 to i divided by the time step;
/// speed[0] copies speed[1]. A step touching an invalid sample yields NaN.
/// Throws std::invalid_argument if timestamps are not strictly increasing.
std::vector<double> angular_speed_series(std::span<const TimedDir> samples);

/// Endpoint speed of a window: distance between the first and last valid
/// sample over the time between them. NaN with fewer than two valid samples.
double window_speed(std::span<const TimedDir> window);

/// Signed 2-D displacement (d_lon, d_lat) with longitude difference wrapped.
Eigen::Vector2d planar_displacement(const SphericalDir& from, const SphericalDir& to);

/// Angle between two planar vectors, degrees in [0, 180].
double angle_between_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

}  // namespace gaze360

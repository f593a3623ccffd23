#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "gaze360/recording.hpp"

namespace testing_support {

inline std::int64_t sample_time(std::size_t i, double rate_hz) {
  return std::llround(static_cast<double>(i) * 1e6 / rate_hz);
}

/// Recording built from per-sample gaze / head functions of time in seconds.
inline gaze360::Recording make_recording(
    std::size_t n, double rate_hz,
    const std::function<gaze360::SphericalDir(double)>& gaze,
    const std::function<gaze360::HeadPose(double)>& head = [](double) {
      return gaze360::HeadPose{};
    }) {
  gaze360::Recording rec;
  rec.meta.sampling_rate_hz = rate_hz;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = sample_time(i, rate_hz);
    const double s = static_cast<double>(t) * 1e-6;
    rec.samples.push_back({t, gaze(s), head(s), true});
  }
  return rec;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gaze360-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support

// Copyright 2026 The ealss Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EALSS__GEOMETRY_HPP_
#define EALSS__GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ealss/errors.hpp"
#include "ealss/parallel.hpp"
#include "ealss/tensor.hpp"

// Pixel convention: (row, col) with row growing downward and col rightward.
// A camera-frame point (x, y, z) lands at col = fx*x/z + cx, row = fy*y/z + cy
// (plus skew when the intrinsics carry one).

namespace ealss::geometry
{

struct Vec3
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  bool operator==(const Vec3 &) const = default;
};

using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline constexpr Mat4 identity4()
{
  return Mat4{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
}

struct PointCloud
{
  std::vector<Vec3> points;
  std::vector<float> intensity;  // optional; empty or one per point

  std::size_t size() const noexcept { return points.size(); }
};

struct CameraCalib
{
  int view_id{0};
  Mat3 intrinsics{};
  Mat4 ego_from_camera{identity4()};

  double fx() const noexcept { return intrinsics[0][0]; }
  double fy() const noexcept { return intrinsics[1][1]; }
  double cx() const noexcept { return intrinsics[0][2]; }
  double cy() const noexcept { return intrinsics[1][2]; }
  double skew() const noexcept { return intrinsics[0][1]; }
};

inline CameraCalib make_pinhole(
  int view_id, double fx, double fy, double cx, double cy, const Mat4 & ego_from_camera = identity4())
{
  CameraCalib c;
  c.view_id = view_id;
  c.intrinsics = Mat3{{{fx, 0.0, cx}, {0.0, fy, cy}, {0.0, 0.0, 1.0}}};
  c.ego_from_camera = ego_from_camera;
  return c;
}

/// Half-open camera-depth interval [d_min, d_max) kept by projection.
struct DepthRange
{
  double d_min{1.0};
  double d_max{60.0};
};

struct ImageShape
{
  std::size_t height{256};
  std::size_t width{704};
};

/// Throws CalibrationError unless fx, fy > 0, the intrinsics are upper triangular with
/// K[2][2] = 1, and ego_from_camera is rigid (R^T R = I within 1e-9, bottom row 0 0 0 1).
inline void validate(const CameraCalib & c)
{
  const auto tag = "calibration of view " + std::to_string(c.view_id) + ": ";
  for (const auto & row : c.intrinsics) {
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw CalibrationError(tag + "non-finite intrinsics");
      }
    }
  }
  if (!(c.fx() > 0.0) || !(c.fy() > 0.0)) {
    throw CalibrationError(tag + "fx and fy must be positive");
  }
  const auto & k = c.intrinsics;
  if (k[1][0] != 0.0 || k[2][0] != 0.0 || k[2][1] != 0.0 || k[2][2] != 1.0) {
    throw CalibrationError(tag + "intrinsics must be upper triangular with K[2][2] = 1");
  }
  const auto & t = c.ego_from_camera;
  for (const auto & row : t) {
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw CalibrationError(tag + "non-finite ego_from_camera");
      }
    }
  }
  if (t[3][0] != 0.0 || t[3][1] != 0.0 || t[3][2] != 0.0 || t[3][3] != 1.0) {
    throw CalibrationError(tag + "ego_from_camera bottom row must be 0 0 0 1");
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int r = 0; r < 3; ++r) {
        dot += t[r][a] * t[r][b];
      }
      if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-9) {
        throw CalibrationError(tag + "rotation block of ego_from_camera is not orthonormal");
      }
    }
  }
}

inline void validate(const PointCloud & cloud)
{
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto & p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw InputError("point " + std::to_string(i) + " has non-finite coordinates");
    }
  }
  if (!cloud.intensity.empty() && cloud.intensity.size() != cloud.points.size()) {
    throw InputError("intensity count does not match point count");
  }
}

inline void validate(const DepthRange & range)
{
  if (!(range.d_min >= 0.0) || !(range.d_min < range.d_max) || !std::isfinite(range.d_max)) {
    throw ConfigError("depth range requires 0 <= d_min < d_max");
  }
}

/// Ego-frame point to camera frame: R^T (p - t).
inline Vec3 camera_from_ego(const CameraCalib & c, const Vec3 & p)
{
  const auto & t = c.ego_from_camera;
  const double dx = p.x - t[0][3];
  const double dy = p.y - t[1][3];
  const double dz = p.z - t[2][3];
  return {
    t[0][0] * dx + t[1][0] * dy + t[2][0] * dz,
    t[0][1] * dx + t[1][1] * dy + t[2][1] * dz,
    t[0][2] * dx + t[1][2] * dy + t[2][2] * dz};
}

inline Vec3 ego_from_camera(const CameraCalib & c, const Vec3 & p)
{
  const auto & t = c.ego_from_camera;
  return {
    t[0][0] * p.x + t[0][1] * p.y + t[0][2] * p.z + t[0][3],
    t[1][0] * p.x + t[1][1] * p.y + t[1][2] * p.z + t[1][3],
    t[2][0] * p.x + t[2][1] * p.y + t[2][2] * p.z + t[2][3]};
}

/// Continuous image position of a camera-frame point in front of the camera.
struct ImagePoint
{
  double row{0.0};
  double col{0.0};
  double depth{0.0};
};

inline std::optional<ImagePoint> image_point(const CameraCalib & c, const Vec3 & ego)
{
  const Vec3 cam = camera_from_ego(c, ego);
  if (!(cam.z > 0.0)) {
    return std::nullopt;
  }
  const auto & k = c.intrinsics;
  const double col = (k[0][0] * cam.x + k[0][1] * cam.y) / cam.z + k[0][2];
  const double row = k[1][1] * cam.y / cam.z + k[1][2];
  return ImagePoint{row, col, cam.z};
}

/// Back-projects pixel (row, col) at camera depth `depth` into the ego frame.
inline Vec3 unproject_pixel(const CameraCalib & c, double row, double col, double depth)
{
  if (!(depth > 0.0)) {
    throw DomainError("unproject_pixel requires depth > 0");
  }
  const auto & k = c.intrinsics;
  const double yn = (row - k[1][2]) / k[1][1];
  const double xn = (col - k[0][2] - k[0][1] * yn) / k[0][0];
  return ego_from_camera(c, Vec3{xn * depth, yn * depth, depth});
}

/// Single-view sparse depth grid (rows x cols). Nearest-integer pixel rounding,
/// depth filter [d_min, d_max), nearest surface wins on collisions, 0 = no return.
inline Tensor<double> project_points(
  const PointCloud & cloud, const CameraCalib & calib, ImageShape shape, DepthRange range)
{
  validate(calib);
  validate(cloud);
  validate(range);
  Tensor<double> grid({shape.height, shape.width}, 0.0);
  const auto h = static_cast<double>(shape.height);
  const auto w = static_cast<double>(shape.width);
  for (const auto & p : cloud.points) {
    const auto ip = image_point(calib, p);
    if (!ip || ip->depth < range.d_min || ip->depth >= range.d_max) {
      continue;
    }
    const double r = std::round(ip->row);
    const double q = std::round(ip->col);
    if (!(r >= 0.0 && r < h && q >= 0.0 && q < w)) {
      continue;
    }
    double & cell = grid(static_cast<std::size_t>(r), static_cast<std::size_t>(q));
    if (cell == 0.0 || ip->depth < cell) {
      cell = ip->depth;
    }
  }
  return grid;
}

/// Sorts calibrations by view id, requiring ids to be exactly 0..n-1.
inline std::vector<CameraCalib> ordered_views(const std::vector<CameraCalib> & calibs)
{
  std::vector<CameraCalib> out(calibs.size());
  std::vector<bool> seen(calibs.size(), false);
  for (const auto & c : calibs) {
    if (c.view_id < 0 || static_cast<std::size_t>(c.view_id) >= calibs.size()) {
      throw ConfigError(
        "view_id " + std::to_string(c.view_id) + " outside [0, " +
        std::to_string(calibs.size()) + ")");
    }
    const auto v = static_cast<std::size_t>(c.view_id);
    if (seen[v]) {
      throw ConfigError("duplicate view_id " + std::to_string(c.view_id));
    }
    seen[v] = true;
    out[v] = c;
  }
  return out;
}

/// Per-view project_points stacked in view_id order: shape (views, rows, cols).
inline DepthStack project_multiview(
  const PointCloud & cloud, const std::vector<CameraCalib> & calibs, ImageShape shape,
  DepthRange range)
{
  const auto views = ordered_views(calibs);
  validate(cloud);
  validate(range);
  for (const auto & c : views) {
    validate(c);
  }
  DepthStack stack({views.size(), shape.height, shape.width}, 0.0);
  parallel_for(views.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      const auto grid = project_points(cloud, views[v], shape, range);
      std::copy(grid.storage().begin(), grid.storage().end(), stack.slice(v).begin());
    }
  });
  return stack;
}

}  // namespace ealss::geometry

#endif  // EALSS__GEOMETRY_HPP_

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

#ifndef EALSS__IO_HPP_
#define EALSS__IO_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ealss/errors.hpp"
#include "ealss/geometry.hpp"
#include "ealss/tensor.hpp"
#include "json.hpp"

namespace ealss::io
{

// ---------------------------------------------------------------------------
// EALSS1 tensor files
//
//   EALSS1\n
//   dims: d0 d1 ... dn\n
//   dtype: f32|f64\n
//   <little-endian values, row-major>

enum class DType { kF32, kF64 };

inline constexpr std::string_view kMagic = "EALSS1\n";

namespace detail
{

template <typename U>
void put_le(std::string & out, U bits)
{
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
}

template <typename U>
U get_le(const unsigned char * p)
{
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(p[i]) << (8 * i);
  }
  return bits;
}

inline std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path & path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw InputError("write failed for " + path.string());
  }
}

inline std::string_view take_line(std::string_view & buf, const char * what)
{
  const auto nl = buf.find('\n');
  if (nl == std::string_view::npos) {
    throw InputError(std::string("EALSS1: missing ") + what + " line");
  }
  auto line = buf.substr(0, nl);
  buf.remove_prefix(nl + 1);
  return line;
}

}  // namespace detail

inline std::string encode_tensor(const Tensor<double> & t, DType dtype = DType::kF64)
{
  std::string out(kMagic);
  out += "dims:";
  for (std::size_t d : t.shape()) {
    out += ' ' + std::to_string(d);
  }
  out += dtype == DType::kF64 ? "\ndtype: f64\n" : "\ndtype: f32\n";
  out.reserve(out.size() + t.size() * (dtype == DType::kF64 ? 8 : 4));
  for (double v : t.values()) {
    if (dtype == DType::kF64) {
      detail::put_le(out, std::bit_cast<std::uint64_t>(v));
    } else {
      detail::put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

inline Tensor<double> decode_tensor(std::string_view buf)
{
  if (buf.substr(0, kMagic.size()) != kMagic) {
    throw InputError("not an EALSS1 tensor (bad magic)");
  }
  buf.remove_prefix(kMagic.size());
  const auto dims_line = detail::take_line(buf, "dims");
  if (dims_line.substr(0, 5) != "dims:") {
    throw InputError("EALSS1: expected 'dims:' header");
  }
  Shape shape;
  std::istringstream ds{std::string(dims_line.substr(5))};
  std::string tok;
  while (ds >> tok) {
    std::size_t d = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw InputError("EALSS1: bad dimension '" + tok + "'");
    }
    shape.push_back(d);
  }
  if (shape.empty()) {
    throw InputError("EALSS1: tensor must have at least one dimension");
  }
  const auto dtype_line = detail::take_line(buf, "dtype");
  std::size_t width = 0;
  if (dtype_line == "dtype: f64") {
    width = 8;
  } else if (dtype_line == "dtype: f32") {
    width = 4;
  } else {
    throw InputError("EALSS1: unsupported '" + std::string(dtype_line) + "'");
  }
  const std::size_t n = shape_numel(shape);
  if (buf.size() != n * width) {
    throw InputError(
      "EALSS1: payload has " + std::to_string(buf.size()) + " bytes, shape " + shape_str(shape) +
      " needs " + std::to_string(n * width));
  }
  std::vector<double> values(n);
  const auto * p = reinterpret_cast<const unsigned char *>(buf.data());
  for (std::size_t i = 0; i < n; ++i, p += width) {
    values[i] = width == 8 ? std::bit_cast<double>(detail::get_le<std::uint64_t>(p))
                           : std::bit_cast<float>(detail::get_le<std::uint32_t>(p));
  }
  return Tensor<double>(std::move(shape), std::move(values));
}

inline void write_tensor(
  const std::filesystem::path & path, const Tensor<double> & t, DType dtype = DType::kF64)
{
  detail::write_file(path, encode_tensor(t, dtype));
}

inline Tensor<double> read_tensor(const std::filesystem::path & path)
{
  const auto bytes = detail::read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const InputError & e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PGM export

enum class PgmKind { kDepth, kEdge };

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples) of a rows x cols plane.
/// Depth maps are scaled by 1/d_max, edge maps written as-is; values clamp to [0, 1].
inline std::string encode_pgm(std::span<const double> plane, std::size_t rows, std::size_t cols, double scale)
{
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n65535\n";
  out.reserve(out.size() + 2 * plane.size());
  for (double v : plane) {
    const double u = std::clamp(v * scale, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(u * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xFF));
  }
  return out;
}

/// Writes one `<prefix>_v<view>.pgm` per view of a (views, rows, cols) stack.
inline std::vector<std::filesystem::path> export_pgm(
  const DepthStack & stack, const std::filesystem::path & prefix, PgmKind kind, double d_max = 1.0)
{
  require_rank(stack, 3, "stack");
  if (kind == PgmKind::kDepth && !(d_max > 0.0)) {
    throw ConfigError("PGM depth export needs d_max > 0");
  }
  const double scale = kind == PgmKind::kDepth ? 1.0 / d_max : 1.0;
  std::vector<std::filesystem::path> written;
  for (std::size_t v = 0; v < stack.dim(0); ++v) {
    auto path = prefix;
    path += "_v" + std::to_string(v) + ".pgm";
    detail::write_file(path, encode_pgm(stack.slice(v), stack.dim(1), stack.dim(2), scale));
    written.push_back(path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Point clouds: text `x,y,z[,intensity]` per line (`#` comments), or `.bin` with
// little-endian float32 quadruples (x, y, z, intensity).

inline geometry::PointCloud parse_point_text(std::string_view text)
{
  geometry::PointCloud cloud;
  bool any_intensity = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.remove_suffix(1);
    }
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) {
      line.remove_prefix(1);
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    std::array<double, 4> f{};
    std::size_t n = 0;
    while (true) {
      const auto comma = line.find(',');
      auto field = line.substr(0, comma);
      while (!field.empty() && field.front() == ' ') {
        field.remove_prefix(1);
      }
      while (!field.empty() && field.back() == ' ') {
        field.remove_suffix(1);
      }
      if (n == 4) {
        throw InputError("point line " + std::to_string(line_no) + ": more than 4 fields");
      }
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), f[n]);
      if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw InputError(
          "point line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
      }
      ++n;
      if (comma == std::string_view::npos) {
        break;
      }
      line.remove_prefix(comma + 1);
    }
    if (n < 3) {
      throw InputError("point line " + std::to_string(line_no) + ": need x,y,z");
    }
    cloud.points.push_back({f[0], f[1], f[2]});
    cloud.intensity.push_back(static_cast<float>(n == 4 ? f[3] : 0.0));
    any_intensity = any_intensity || n == 4;
  }
  if (!any_intensity) {
    cloud.intensity.clear();
  }
  geometry::validate(cloud);
  return cloud;
}

inline geometry::PointCloud parse_point_binary(std::string_view bytes)
{
  if (bytes.size() % 16 != 0) {
    throw InputError("binary point file size is not a multiple of 16 bytes");
  }
  geometry::PointCloud cloud;
  const auto * p = reinterpret_cast<const unsigned char *>(bytes.data());
  for (std::size_t i = 0; i < bytes.size() / 16; ++i, p += 16) {
    const auto f = [&](int k) { return std::bit_cast<float>(detail::get_le<std::uint32_t>(p + 4 * k)); };
    cloud.points.push_back({f(0), f(1), f(2)});
    cloud.intensity.push_back(f(3));
  }
  geometry::validate(cloud);
  return cloud;
}

inline geometry::PointCloud read_point_cloud(const std::filesystem::path & path)
{
  const auto bytes = detail::read_file(path);
  try {
    return path.extension() == ".bin" ? parse_point_binary(bytes) : parse_point_text(bytes);
  } catch (const InputError & e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void write_point_cloud_binary(const std::filesystem::path & path, const geometry::PointCloud & cloud)
{
  std::string out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto & p = cloud.points[i];
    const float in = cloud.intensity.empty() ? 0.0f : cloud.intensity[i];
    for (float v : {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z), in}) {
      detail::put_le(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  detail::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Calibration JSON: [{"view_id": int, "intrinsics": 3x3, "ego_from_camera": 4x4}, ...]

namespace detail
{

template <std::size_t N>
std::array<std::array<double, N>, N> matrix_from_json(const nlohmann::json & j, const std::string & what)
{
  std::array<std::array<double, N>, N> m{};
  if (!j.is_array() || j.size() != N) {
    throw InputError(what + " must be a " + std::to_string(N) + "x" + std::to_string(N) + " array");
  }
  for (std::size_t r = 0; r < N; ++r) {
    if (!j[r].is_array() || j[r].size() != N) {
      throw InputError(what + " row " + std::to_string(r) + " must have " + std::to_string(N) + " numbers");
    }
    for (std::size_t c = 0; c < N; ++c) {
      if (!j[r][c].is_number()) {
        throw InputError(what + " entries must be numbers");
      }
      m[r][c] = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline std::vector<geometry::CameraCalib> parse_calibs(std::string_view text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw InputError(std::string("calibration JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw InputError("calibration JSON must be a list of camera objects");
  }
  std::vector<geometry::CameraCalib> calibs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto & obj = doc[i];
    const std::string tag = "calibration[" + std::to_string(i) + "]";
    if (!obj.is_object()) {
      throw InputError(tag + " must be an object");
    }
    for (const auto & [key, _] : obj.items()) {
      if (key != "view_id" && key != "intrinsics" && key != "ego_from_camera") {
        throw InputError(tag + ": unknown key '" + key + "'");
      }
    }
    if (!obj.contains("view_id") || !obj["view_id"].is_number_integer()) {
      throw InputError(tag + ".view_id must be an integer");
    }
    if (!obj.contains("intrinsics") || !obj.contains("ego_from_camera")) {
      throw InputError(tag + " needs intrinsics and ego_from_camera");
    }
    geometry::CameraCalib c;
    c.view_id = obj["view_id"].get<int>();
    c.intrinsics = detail::matrix_from_json<3>(obj["intrinsics"], tag + ".intrinsics");
    c.ego_from_camera = detail::matrix_from_json<4>(obj["ego_from_camera"], tag + ".ego_from_camera");
    calibs.push_back(c);
  }
  return calibs;
}

inline std::vector<geometry::CameraCalib> read_calibs(const std::filesystem::path & path)
{
  const auto text = detail::read_file(path);
  try {
    return parse_calibs(text);
  } catch (const InputError & e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json calibs_to_json(const std::vector<geometry::CameraCalib> & calibs)
{
  auto doc = nlohmann::json::array();
  for (const auto & c : calibs) {
    doc.push_back(
      {{"view_id", c.view_id}, {"intrinsics", c.intrinsics}, {"ego_from_camera", c.ego_from_camera}});
  }
  return doc;
}

inline void write_calibs(const std::filesystem::path & path, const std::vector<geometry::CameraCalib> & calibs)
{
  detail::write_file(path, calibs_to_json(calibs).dump(2) + "\n");
}

}  // namespace ealss::io

#endif  // EALSS__IO_HPP_

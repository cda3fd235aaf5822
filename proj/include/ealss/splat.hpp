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

#ifndef EALSS__SPLAT_HPP_
#define EALSS__SPLAT_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ealss/errors.hpp"
#include "ealss/geometry.hpp"
#include "ealss/parallel.hpp"
#include "ealss/supervision.hpp"
#include "ealss/tensor.hpp"

// Lift-splat view transform. Every (view, bin, row, col) frustum sample is placed at
// its bin-center depth, unprojected to the ego frame and, when inside the half-open
// grid bounds, its feature pred * ctx is summed into BEV cell (ix, iy). Height is an
// inclusion filter only. Ego x maps to grid ix, ego y to grid iy.
//
// Accumulation order per cell is view, then row-major pixel, then bin. splat() keeps
// that order under any thread count, so it matches splat_reference() bit for bit.

namespace ealss::splat
{

struct BevGridSpec
{
  double x_min{-50.0};
  double x_max{50.0};
  double y_min{-50.0};
  double y_max{50.0};
  double z_min{-10.0};
  double z_max{10.0};
  double resolution{0.5};

  std::size_t nx() const { return cells(x_min, x_max); }
  std::size_t ny() const { return cells(y_min, y_max); }

private:
  std::size_t cells(double lo, double hi) const
  {
    return static_cast<std::size_t>(std::llround((hi - lo) / resolution));
  }
};

inline void validate(const BevGridSpec & g)
{
  for (double v : {g.x_min, g.x_max, g.y_min, g.y_max, g.z_min, g.z_max, g.resolution}) {
    if (!std::isfinite(v)) {
      throw ConfigError("grid bounds and resolution must be finite");
    }
  }
  if (!(g.resolution > 0.0)) {
    throw ConfigError("grid resolution must be positive");
  }
  if (!(g.x_min < g.x_max) || !(g.y_min < g.y_max) || !(g.z_min < g.z_max)) {
    throw ConfigError("grid bounds must satisfy min < max on every axis");
  }
  for (double extent : {g.x_max - g.x_min, g.y_max - g.y_min}) {
    const double n = extent / g.resolution;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
      throw ConfigError("grid extent must be an integer multiple of the resolution");
    }
  }
}

struct BevGrid
{
  BevGridSpec spec;
  std::size_t channels{0};
  Tensor<double> data;  // (nx, ny, channels)
  /// Fraction of predicted depth probability whose sample fell outside the grid.
  double dropped_mass{0.0};
};

/// Frustum features: (views, bins, rows, cols, channels) = pred(v, b, r, c) * ctx(v, :, r, c).
inline Tensor<double> lift(const Tensor<double> & pred, const Tensor<double> & ctx)
{
  require_rank(pred, 4, "predicted distribution");
  require_rank(ctx, 4, "context features");
  if (ctx.dim(0) != pred.dim(0) || ctx.dim(2) != pred.dim(2) || ctx.dim(3) != pred.dim(3)) {
    throw DimensionError(
      "context " + shape_str(ctx.shape()) + " does not match prediction " +
      shape_str(pred.shape()));
  }
  const std::size_t bins = pred.dim(1);
  const std::size_t rows = pred.dim(2);
  const std::size_t cols = pred.dim(3);
  const std::size_t chans = ctx.dim(1);
  Tensor<double> frustum({pred.dim(0), bins, rows, cols, chans}, 0.0);
  parallel_for(pred.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const double p = pred(v, b, r, c);
            for (std::size_t ch = 0; ch < chans; ++ch) {
              frustum(v, b, r, c, ch) = p * ctx(v, ch, r, c);
            }
          }
        }
      }
    }
  });
  return frustum;
}

/// Flat cell index (ix * ny + iy) of an ego point, or -1 outside the half-open bounds.
inline std::int64_t cell_of(const BevGridSpec & g, const geometry::Vec3 & p)
{
  if (!(p.x >= g.x_min && p.x < g.x_max && p.y >= g.y_min && p.y < g.y_max &&
        p.z >= g.z_min && p.z < g.z_max)) {
    return -1;
  }
  const auto ix = static_cast<std::int64_t>(std::floor((p.x - g.x_min) / g.resolution));
  const auto iy = static_cast<std::int64_t>(std::floor((p.y - g.y_min) / g.resolution));
  const auto nx = static_cast<std::int64_t>(g.nx());
  const auto ny = static_cast<std::int64_t>(g.ny());
  if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) {
    return -1;
  }
  return ix * ny + iy;
}

namespace detail
{

inline std::vector<geometry::CameraCalib> check_inputs(
  const Tensor<double> & pred, const Tensor<double> & ctx,
  const std::vector<geometry::CameraCalib> & calibs, const supervision::DepthBinning & binning,
  const BevGridSpec & grid)
{
  validate(grid);
  supervision::validate(binning);
  require_rank(pred, 4, "predicted distribution");
  require_rank(ctx, 4, "context features");
  if (ctx.dim(0) != pred.dim(0) || ctx.dim(2) != pred.dim(2) || ctx.dim(3) != pred.dim(3)) {
    throw DimensionError(
      "context " + shape_str(ctx.shape()) + " does not match prediction " +
      shape_str(pred.shape()));
  }
  if (pred.dim(1) != binning.n_bins) {
    throw DimensionError("prediction bin count does not match binning");
  }
  if (calibs.size() != pred.dim(0)) {
    throw ConfigError(
      "got " + std::to_string(calibs.size()) + " calibrations for " +
      std::to_string(pred.dim(0)) + " views");
  }
  auto views = geometry::ordered_views(calibs);
  for (const auto & c : views) {
    geometry::validate(c);
  }
  return views;
}

inline double dropped_fraction(std::span<const double> total, std::span<const double> dropped)
{
  const double all = pairwise_sum(total);
  return all > 0.0 ? pairwise_sum(dropped) / all : 0.0;
}

}  // namespace detail

/// Naive single-threaded scatter; the oracle splat() must reproduce exactly.
inline BevGrid splat_reference(
  const Tensor<double> & pred, const Tensor<double> & ctx,
  const std::vector<geometry::CameraCalib> & calibs, const supervision::DepthBinning & binning,
  const BevGridSpec & spec)
{
  const auto views = detail::check_inputs(pred, ctx, calibs, binning, spec);
  const std::size_t bins = pred.dim(1);
  const std::size_t rows = pred.dim(2);
  const std::size_t cols = pred.dim(3);
  const std::size_t chans = ctx.dim(1);
  BevGrid out{spec, chans, Tensor<double>({spec.nx(), spec.ny(), chans}, 0.0), 0.0};
  std::vector<double> mass;
  std::vector<double> dropped;
  mass.reserve(pred.size());
  dropped.reserve(pred.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t b = 0; b < bins; ++b) {
          const double p = pred(v, b, r, c);
          const auto ego = geometry::unproject_pixel(
            views[v], static_cast<double>(r), static_cast<double>(c), binning.center(b));
          const std::int64_t cell = cell_of(spec, ego);
          mass.push_back(p);
          dropped.push_back(cell < 0 ? p : 0.0);
          if (cell < 0) {
            continue;
          }
          double * dst = out.data.data() + static_cast<std::size_t>(cell) * chans;
          for (std::size_t ch = 0; ch < chans; ++ch) {
            dst[ch] += p * ctx(v, ch, r, c);
          }
        }
      }
    }
  }
  out.dropped_mass = detail::dropped_fraction(mass, dropped);
  return out;
}

/// Parallel scatter. Cell indices are computed per (view, row) in parallel; the grid is
/// then split into bands of ix, and each worker replays the samples in canonical order,
/// keeping only those in its band, so every cell sees the sequential summation order.
inline BevGrid splat(
  const Tensor<double> & pred, const Tensor<double> & ctx,
  const std::vector<geometry::CameraCalib> & calibs, const supervision::DepthBinning & binning,
  const BevGridSpec & spec)
{
  const auto views = detail::check_inputs(pred, ctx, calibs, binning, spec);
  const std::size_t n_views = views.size();
  const std::size_t bins = pred.dim(1);
  const std::size_t rows = pred.dim(2);
  const std::size_t cols = pred.dim(3);
  const std::size_t chans = ctx.dim(1);
  const std::size_t ny = spec.ny();
  BevGrid out{spec, chans, Tensor<double>({spec.nx(), ny, chans}, 0.0), 0.0};

  // sample s = ((v * rows + r) * cols + c) * bins + b
  const std::size_t n_samples = n_views * rows * cols * bins;
  std::vector<std::int64_t> cell(n_samples, -1);
  std::vector<double> mass(n_samples, 0.0);
  std::vector<double> dropped(n_samples, 0.0);
  parallel_for(n_views * rows, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t vr = lo; vr < hi; ++vr) {
      const std::size_t v = vr / rows;
      const std::size_t r = vr % rows;
      for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t b = 0; b < bins; ++b) {
          const std::size_t s = (vr * cols + c) * bins + b;
          const double p = pred(v, b, r, c);
          const auto ego = geometry::unproject_pixel(
            views[v], static_cast<double>(r), static_cast<double>(c), binning.center(b));
          cell[s] = cell_of(spec, ego);
          mass[s] = p;
          dropped[s] = cell[s] < 0 ? p : 0.0;
        }
      }
    }
  });
  out.dropped_mass = detail::dropped_fraction(mass, dropped);
  if (chans == 0) {
    return out;
  }

  parallel_for(spec.nx(), [&](std::size_t ix_lo, std::size_t ix_hi) {
    const auto lo = static_cast<std::int64_t>(ix_lo * ny);
    const auto hi = static_cast<std::int64_t>(ix_hi * ny);
    for (std::size_t s = 0; s < n_samples; ++s) {
      const std::int64_t k = cell[s];
      if (k < lo || k >= hi) {
        continue;
      }
      const std::size_t b = s % bins;
      const std::size_t pix = s / bins;
      const std::size_t c = pix % cols;
      const std::size_t vr = pix / cols;
      const std::size_t v = vr / rows;
      const std::size_t r = vr % rows;
      const double p = pred(v, b, r, c);
      double * dst = out.data.data() + static_cast<std::size_t>(k) * chans;
      for (std::size_t ch = 0; ch < chans; ++ch) {
        dst[ch] += p * ctx(v, ch, r, c);
      }
    }
  });
  return out;
}

}  // namespace ealss::splat

#endif  // EALSS__SPLAT_HPP_

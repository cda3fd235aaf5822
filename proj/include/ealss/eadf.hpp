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

#ifndef EALSS__EADF_HPP_
#define EALSS__EADF_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>

#include "ealss/errors.hpp"
#include "ealss/parallel.hpp"
#include "ealss/tensor.hpp"

// Edge-aware depth fusion: sparse depth D -> block-max dense depth D' ->
// four stride-k differences G -> per-view normalized edge map G' -> [D : G'].

namespace ealss::eadf
{

struct EadfConfig
{
  std::size_t k{7};
};

inline void validate(const EadfConfig & cfg, std::size_t rows, std::size_t cols)
{
  if (cfg.k < 1 || cfg.k > std::min(rows, cols)) {
    throw ConfigError(
      "k = " + std::to_string(cfg.k) + " must lie in [1, min(rows, cols) = " +
      std::to_string(std::min(rows, cols)) + "]");
  }
}

/// Fills every k x k block (anchored at the origin, ragged at the far edges)
/// with the block's maximum value.
inline DepthStack densify(const DepthStack & depth, std::size_t k)
{
  require_rank(depth, 3, "depth stack");
  const std::size_t rows = depth.dim(1);
  const std::size_t cols = depth.dim(2);
  validate(EadfConfig{k}, rows, cols);
  DepthStack dense(depth.shape(), 0.0);
  parallel_for(depth.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r0 = 0; r0 < rows; r0 += k) {
        const std::size_t r1 = std::min(rows, r0 + k);
        for (std::size_t c0 = 0; c0 < cols; c0 += k) {
          const std::size_t c1 = std::min(cols, c0 + k);
          double m = 0.0;
          for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) {
              m = std::max(m, depth(v, r, c));
            }
          }
          for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) {
              dense(v, r, c) = m;
            }
          }
        }
      }
    }
  });
  return dense;
}

/// Direction order of the last gradient axis.
enum Direction : std::size_t { kDown = 0, kUp = 1, kRight = 2, kLeft = 3 };

/// Signed differences d'(p) - d'(p + k*dir) for dir = down, up, right, left.
/// Output shape (views, rows, cols, 4); a neighbor outside the grid yields 0.
inline Tensor<double> directional_gradients(const DepthStack & dense, std::size_t k)
{
  require_rank(dense, 3, "dense depth stack");
  const std::size_t rows = dense.dim(1);
  const std::size_t cols = dense.dim(2);
  validate(EadfConfig{k}, rows, cols);
  Tensor<double> grads({dense.dim(0), rows, cols, 4}, 0.0);
  parallel_for(dense.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double d = dense(v, r, c);
          if (r + k < rows) {
            grads(v, r, c, kDown) = d - dense(v, r + k, c);
          }
          if (r >= k) {
            grads(v, r, c, kUp) = d - dense(v, r - k, c);
          }
          if (c + k < cols) {
            grads(v, r, c, kRight) = d - dense(v, r, c + k);
          }
          if (c >= k) {
            grads(v, r, c, kLeft) = d - dense(v, r, c - k);
          }
        }
      }
    }
  });
  return grads;
}

/// Max over the four directions, negatives clamped to 0, then each view divided by
/// its own maximum (an all-zero view stays zero). Values in [0, 1].
inline DepthStack edge_map(const Tensor<double> & grads)
{
  if (grads.rank() != 4 || grads.dim(3) != 4) {
    throw DimensionError("gradient stack must have shape (views, rows, cols, 4)");
  }
  const std::size_t rows = grads.dim(1);
  const std::size_t cols = grads.dim(2);
  DepthStack edges({grads.dim(0), rows, cols}, 0.0);
  parallel_for(grads.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      double view_max = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          double m = 0.0;
          for (std::size_t t = 0; t < 4; ++t) {
            m = std::max(m, grads(v, r, c, t));
          }
          edges(v, r, c) = m;
          view_max = std::max(view_max, m);
        }
      }
      if (view_max > 0.0) {
        for (double & e : edges.slice(v)) {
          e /= view_max;
        }
      }
    }
  });
  return edges;
}

/// Channel-stacked feature, shape (views, 2, rows, cols): channel 0 = D, channel 1 = G'.
inline Tensor<double> fuse_eadf(const DepthStack & depth, const DepthStack & edges)
{
  require_rank(depth, 3, "depth stack");
  if (depth.shape() != edges.shape()) {
    throw DimensionError(
      "depth " + shape_str(depth.shape()) + " and edge map " + shape_str(edges.shape()) +
      " differ in shape");
  }
  const std::size_t plane = depth.dim(1) * depth.dim(2);
  Tensor<double> fused({depth.dim(0), 2, depth.dim(1), depth.dim(2)}, 0.0);
  for (std::size_t v = 0; v < depth.dim(0); ++v) {
    auto out = fused.slice(v);
    std::copy(depth.slice(v).begin(), depth.slice(v).end(), out.begin());
    std::copy(edges.slice(v).begin(), edges.slice(v).end(), out.begin() + plane);
  }
  return fused;
}

struct EadfOutputs
{
  DepthStack dense;
  Tensor<double> gradients;
  DepthStack edges;
  Tensor<double> fused;
};

inline EadfOutputs eadf_pipeline(const DepthStack & depth, const EadfConfig & cfg)
{
  EadfOutputs out;
  out.dense = densify(depth, cfg.k);
  out.gradients = directional_gradients(out.dense, cfg.k);
  out.edges = edge_map(out.gradients);
  out.fused = fuse_eadf(depth, out.edges);
  return out;
}

}  // namespace ealss::eadf

#endif  // EALSS__EADF_HPP_

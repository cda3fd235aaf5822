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

#ifndef EALSS__TOY_HEAD_HPP_
#define EALSS__TOY_HEAD_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ealss/eadf.hpp"
#include "ealss/errors.hpp"
#include "ealss/geometry.hpp"
#include "ealss/parallel.hpp"
#include "ealss/random.hpp"
#include "ealss/supervision.hpp"
#include "ealss/tensor.hpp"

// A deliberately small trainable depth-bin classifier: s x s mean-pool of the input
// features, a per-pixel affine map to bin logits, softmax, then nearest-neighbour
// upsampling back to the ground-truth resolution. Used to show that the two depth
// losses train end to end; it is not a stand-in for backbone capacity.

namespace ealss::toy
{

using geometry::CameraCalib;
using supervision::DepthBinning;
using supervision::FocalParams;

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SceneConfig
{
  std::size_t views{2};
  std::size_t height{56};
  std::size_t width{112};
  std::size_t n_boxes{6};
  double sparsity{0.3};   // fraction of pixels that receive a lidar point
  double noise{1.0};      // feature noise standard deviation
  std::size_t blur{2};    // box-filter radius smearing the depth signal across edges
  std::size_t align{14};  // box corners snap to multiples of this many pixels
};

inline void validate(const SceneConfig & s)
{
  if (s.views < 1 || s.height < 1 || s.width < 1) {
    throw ConfigError("scene needs at least one view and a non-empty image");
  }
  if (s.n_boxes < 1) {
    throw ConfigError("scene needs n_boxes >= 1");
  }
  if (!(s.sparsity >= 0.0 && s.sparsity <= 1.0)) {
    throw ConfigError("scene sparsity must lie in [0, 1]");
  }
  if (!(s.noise >= 0.0) || !std::isfinite(s.noise)) {
    throw ConfigError("scene noise must be finite and >= 0");
  }
  if (s.align < 1) {
    throw ConfigError("scene align must be >= 1");
  }
}

struct SyntheticScene
{
  SceneConfig config;
  std::vector<CameraCalib> calibs;
  geometry::PointCloud cloud;
  DepthStack true_depth;    // (views, rows, cols), every value a bin center
  Tensor<double> features;  // (views, 2 * bins, rows, cols)
};

/// Camera v looks horizontally along yaw 2*pi*v/views from 1.5 m above the ego origin;
/// the field of view is narrow enough that neighbouring views never overlap.
inline std::vector<CameraCalib> ring_cameras(std::size_t views, std::size_t height, std::size_t width)
{
  const double half_fov = std::min(0.9 * std::numbers::pi / static_cast<double>(views),
                                   std::numbers::pi / 4.0);
  const double f = 0.5 * static_cast<double>(width) / std::tan(half_fov);
  std::vector<CameraCalib> calibs;
  for (std::size_t v = 0; v < views; ++v) {
    const double yaw = 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(views);
    const double cy = std::cos(yaw);
    const double sy = std::sin(yaw);
    // camera (right, down, forward) -> ego (forward, left, up), then yaw about ego z
    const geometry::Mat3 base{{{0, 0, 1}, {-1, 0, 0}, {0, -1, 0}}};
    const geometry::Mat3 rz{{{cy, -sy, 0}, {sy, cy, 0}, {0, 0, 1}}};
    geometry::Mat4 t = geometry::identity4();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        t[i][j] = rz[i][0] * base[0][j] + rz[i][1] * base[1][j] + rz[i][2] * base[2][j];
      }
    }
    t[2][3] = 1.5;
    calibs.push_back(geometry::make_pinhole(
      static_cast<int>(v), f, f, 0.5 * static_cast<double>(width - 1),
      0.5 * static_cast<double>(height - 1), t));
  }
  return calibs;
}

/// Deterministic in `seed`. Box 0 is a far background covering the frame; the remaining
/// boxes are axis-aligned rectangles at distinct bin-center depths, nearer boxes winning.
/// Features hold two independently noised copies of the box-blurred one-hot true bin.
inline SyntheticScene make_synthetic_scene(
  std::uint64_t seed, const SceneConfig & cfg, const DepthBinning & binning)
{
  validate(cfg);
  supervision::validate(binning);
  const std::size_t bins = binning.n_bins;
  const std::size_t rows = cfg.height;
  const std::size_t cols = cfg.width;
  if (cfg.n_boxes > bins) {
    throw ConfigError("n_boxes cannot exceed the number of depth bins");
  }
  Rng rng(seed);
  SyntheticScene scene;
  scene.config = cfg;
  scene.calibs = ring_cameras(cfg.views, rows, cols);
  scene.true_depth = DepthStack({cfg.views, rows, cols}, 0.0);
  std::vector<std::size_t> labels(cfg.views * rows * cols, 0);

  for (std::size_t v = 0; v < cfg.views; ++v) {
    struct Box
    {
      std::size_t r0, r1, c0, c1, bin;
    };
    std::vector<Box> boxes;
    std::vector<bool> used(bins, false);
    const std::size_t far_lo = bins - std::max<std::size_t>(1, bins / 4);
    const std::size_t bg = far_lo + rng.below(bins - far_lo);
    used[bg] = true;
    boxes.push_back({0, rows, 0, cols, bg});
    const std::size_t ar = std::max<std::size_t>(1, rows / cfg.align);
    const std::size_t ac = std::max<std::size_t>(1, cols / cfg.align);
    for (std::size_t i = 1; i < cfg.n_boxes; ++i) {
      std::size_t bin = rng.below(bins);
      while (used[bin]) {
        bin = (bin + 1) % bins;
      }
      used[bin] = true;
      const std::size_t h = 1 + rng.below(std::max<std::size_t>(1, ar / 2));
      const std::size_t w = 1 + rng.below(std::max<std::size_t>(1, ac / 2));
      const std::size_t r0 = rng.below(ar - std::min(ar - 1, h - 1));
      const std::size_t c0 = rng.below(ac - std::min(ac - 1, w - 1));
      boxes.push_back(
        {r0 * cfg.align, std::min(rows, (r0 + h) * cfg.align), c0 * cfg.align,
         std::min(cols, (c0 + w) * cfg.align), bin});
    }
    std::stable_sort(
      boxes.begin(), boxes.end(), [](const Box & a, const Box & b) { return a.bin > b.bin; });
    for (const auto & b : boxes) {
      for (std::size_t r = b.r0; r < b.r1; ++r) {
        for (std::size_t c = b.c0; c < b.c1; ++c) {
          scene.true_depth(v, r, c) = binning.center(b.bin);
          labels[scene.true_depth.offset(v, r, c)] = b.bin;
        }
      }
    }
  }

  for (std::size_t v = 0; v < cfg.views; ++v) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (rng.uniform() < cfg.sparsity) {
          scene.cloud.points.push_back(geometry::unproject_pixel(
            scene.calibs[v], static_cast<double>(r), static_cast<double>(c),
            scene.true_depth(v, r, c)));
        }
      }
    }
  }

  const auto radius = static_cast<std::ptrdiff_t>(cfg.blur);
  scene.features = Tensor<double>({cfg.views, 2 * bins, rows, cols}, 0.0);
  std::vector<double> blurred(bins);
  for (std::size_t v = 0; v < cfg.views; ++v) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        std::fill(blurred.begin(), blurred.end(), 0.0);
        double n = 0.0;
        for (std::ptrdiff_t dr = -radius; dr <= radius; ++dr) {
          for (std::ptrdiff_t dc = -radius; dc <= radius; ++dc) {
            const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
            const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(rows) ||
                cc >= static_cast<std::ptrdiff_t>(cols)) {
              continue;
            }
            blurred[labels[scene.true_depth.offset(
              v, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc))]] += 1.0;
            n += 1.0;
          }
        }
        for (std::size_t b = 0; b < bins; ++b) {
          scene.features(v, b, r, c) = blurred[b] / n + cfg.noise * rng.normal();
          scene.features(v, bins + b, r, c) = blurred[b] / n + cfg.noise * rng.normal();
        }
      }
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Head

struct ToyHeadParams
{
  Tensor<double> weight;  // (features, bins)
  std::vector<double> bias;
  std::size_t downscale{1};

  std::size_t feature_dim() const { return weight.dim(0); }
  std::size_t bins() const { return weight.dim(1); }
};

inline ToyHeadParams zero_params(std::size_t features, std::size_t bins, std::size_t downscale)
{
  return ToyHeadParams{Tensor<double>({features, bins}, 0.0), std::vector<double>(bins, 0.0), downscale};
}

struct HeadOutput
{
  Tensor<double> coarse_features;  // (views, F, rows/s, cols/s)
  Tensor<double> coarse_logits;    // (views, bins, rows/s, cols/s)
  Tensor<double> coarse_prob;
  Tensor<double> distribution;     // (views, bins, rows, cols)
};

struct HeadGrads
{
  Tensor<double> weight;
  std::vector<double> bias;
};

namespace detail
{

inline void check_head(const ToyHeadParams & p, const Tensor<double> & features)
{
  require_rank(features, 4, "features");
  if (p.weight.rank() != 2 || p.bias.size() != p.weight.dim(1)) {
    throw DimensionError("head weight must be (features, bins) with one bias per bin");
  }
  if (features.dim(1) != p.feature_dim()) {
    throw DimensionError(
      "features have " + std::to_string(features.dim(1)) + " channels, head expects " +
      std::to_string(p.feature_dim()));
  }
  const std::size_t s = p.downscale;
  if (s < 1 || features.dim(2) % s != 0 || features.dim(3) % s != 0) {
    throw DimensionError("downscale must divide the feature height and width");
  }
}

/// s x s block sum of a (views, channels, rows, cols) tensor; pass 1/s^2 to get the mean.
inline Tensor<double> block_reduce(const Tensor<double> & fine, std::size_t s, double scale)
{
  const std::size_t rows = fine.dim(2) / s;
  const std::size_t cols = fine.dim(3) / s;
  Tensor<double> coarse({fine.dim(0), fine.dim(1), rows, cols}, 0.0);
  parallel_for(fine.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t ch = 0; ch < fine.dim(1); ++ch) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
              for (std::size_t j = 0; j < s; ++j) {
                acc += fine(v, ch, r * s + i, c * s + j);
              }
            }
            coarse(v, ch, r, c) = acc * scale;
          }
        }
      }
    }
  });
  return coarse;
}

}  // namespace detail

/// Nearest-neighbour upsample of (views, channels, rows, cols) by s.
inline Tensor<double> upsample_nearest(const Tensor<double> & coarse, std::size_t s)
{
  require_rank(coarse, 4, "coarse tensor");
  const std::size_t rows = coarse.dim(2) * s;
  const std::size_t cols = coarse.dim(3) * s;
  Tensor<double> fine({coarse.dim(0), coarse.dim(1), rows, cols}, 0.0);
  for (std::size_t v = 0; v < coarse.dim(0); ++v) {
    for (std::size_t ch = 0; ch < coarse.dim(1); ++ch) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          fine(v, ch, r, c) = coarse(v, ch, r / s, c / s);
        }
      }
    }
  }
  return fine;
}

inline HeadOutput head_forward(const ToyHeadParams & params, const Tensor<double> & features)
{
  detail::check_head(params, features);
  const std::size_t s = params.downscale;
  HeadOutput out;
  out.coarse_features =
    s == 1 ? features : detail::block_reduce(features, s, 1.0 / static_cast<double>(s * s));
  const auto & cf = out.coarse_features;
  const std::size_t nf = params.feature_dim();
  const std::size_t bins = params.bins();
  const std::size_t rows = cf.dim(2);
  const std::size_t cols = cf.dim(3);
  out.coarse_logits = Tensor<double>({cf.dim(0), bins, rows, cols}, 0.0);
  parallel_for(cf.dim(0), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> feat(nf);
    std::vector<double> z(bins);
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          for (std::size_t f = 0; f < nf; ++f) {
            feat[f] = cf(v, f, r, c);
          }
          std::copy(params.bias.begin(), params.bias.end(), z.begin());
          for (std::size_t f = 0; f < nf; ++f) {
            const double x = feat[f];
            const double * w = params.weight.data() + f * bins;
            for (std::size_t b = 0; b < bins; ++b) {
              z[b] += x * w[b];
            }
          }
          for (std::size_t b = 0; b < bins; ++b) {
            out.coarse_logits(v, b, r, c) = z[b];
          }
        }
      }
    }
  });
  out.coarse_prob = supervision::softmax(out.coarse_logits);
  out.distribution = s == 1 ? out.coarse_prob : upsample_nearest(out.coarse_prob, s);
  return out;
}

/// Parameter gradients from dL/d(distribution) at full resolution: block-sum (upsample
/// transpose), softmax Jacobian, then the affine transpose.
inline HeadGrads head_backward(
  const ToyHeadParams & params, const HeadOutput & fwd, const Tensor<double> & upstream)
{
  if (upstream.shape() != fwd.distribution.shape()) {
    throw DimensionError(
      "upstream gradient " + shape_str(upstream.shape()) + " does not match distribution " +
      shape_str(fwd.distribution.shape()));
  }
  const std::size_t s = params.downscale;
  const Tensor<double> g = s == 1 ? upstream : detail::block_reduce(upstream, s, 1.0);
  const auto & p = fwd.coarse_prob;
  const auto & cf = fwd.coarse_features;
  const std::size_t views = p.dim(0);
  const std::size_t bins = p.dim(1);
  const std::size_t rows = p.dim(2);
  const std::size_t cols = p.dim(3);
  const std::size_t nf = params.feature_dim();

  Tensor<double> dz(p.shape(), 0.0);
  parallel_for(views, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          double dot = 0.0;
          for (std::size_t b = 0; b < bins; ++b) {
            dot += g(v, b, r, c) * p(v, b, r, c);
          }
          for (std::size_t b = 0; b < bins; ++b) {
            dz(v, b, r, c) = p(v, b, r, c) * (g(v, b, r, c) - dot);
          }
        }
      }
    }
  });

  // per-view partials, then summed in view order: independent of the worker count
  std::vector<Tensor<double>> w_part(views, Tensor<double>({nf, bins}, 0.0));
  std::vector<std::vector<double>> b_part(views, std::vector<double>(bins, 0.0));
  parallel_for(views, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> d(bins);
    for (std::size_t v = lo; v < hi; ++v) {
      double * wp = w_part[v].data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          bool any = false;
          for (std::size_t b = 0; b < bins; ++b) {
            d[b] = dz(v, b, r, c);
            any = any || d[b] != 0.0;
            b_part[v][b] += d[b];
          }
          if (!any) {
            continue;
          }
          for (std::size_t f = 0; f < nf; ++f) {
            const double x = cf(v, f, r, c);
            double * row = wp + f * bins;
            for (std::size_t b = 0; b < bins; ++b) {
              row[b] += x * d[b];
            }
          }
        }
      }
    }
  });
  HeadGrads grads{Tensor<double>({nf, bins}, 0.0), std::vector<double>(bins, 0.0)};
  for (std::size_t v = 0; v < views; ++v) {
    for (std::size_t i = 0; i < grads.weight.size(); ++i) {
      grads.weight[i] += w_part[v][i];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      grads.bias[b] += b_part[v][b];
    }
  }
  return grads;
}

inline HeadGrads head_backward(
  const ToyHeadParams & params, const Tensor<double> & features, const Tensor<double> & upstream)
{
  return head_backward(params, head_forward(params, features), upstream);
}

// ---------------------------------------------------------------------------
// Training

/// Fraction of pixels with non-zero ground truth (and mask > threshold, if given) whose
/// argmax bin equals the ground-truth bin.
inline double bin_accuracy(
  const Tensor<double> & dist, const DepthStack & gt, const DepthBinning & binning,
  const DepthStack * mask = nullptr, double threshold = 0.5)
{
  std::size_t hit = 0;
  std::size_t total = 0;
  const std::size_t bins = dist.dim(1);
  for (std::size_t v = 0; v < gt.dim(0); ++v) {
    for (std::size_t r = 0; r < gt.dim(1); ++r) {
      for (std::size_t c = 0; c < gt.dim(2); ++c) {
        const double d = gt(v, r, c);
        if (d == 0.0 || (mask && !((*mask)(v, r, c) > threshold))) {
          continue;
        }
        std::size_t best = 0;
        for (std::size_t b = 1; b < bins; ++b) {
          if (dist(v, b, r, c) > dist(v, best, r, c)) {
            best = b;
          }
        }
        hit += best == supervision::bin_index(d, binning);
        ++total;
      }
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

struct TrainOptions
{
  double lr{0.002};
  std::size_t iters{200};
  std::size_t downscale{2};
  bool use_eadf{true};
};

struct TraceRecord
{
  std::size_t iter{0};
  double fgd{0.0};
  double eadf{0.0};
  double total{0.0};
};

struct TrainResult
{
  std::vector<TraceRecord> trace;  // trace[i] = losses after i updates
  ToyHeadParams params;
  double accuracy{0.0};       // on non-zero sparse ground-truth pixels
  double edge_accuracy{0.0};  // restricted to edge map > 0.5
};

/// Plain gradient descent on L_FGD + L_EADF (L_FGD alone when use_eadf is false).
/// Parameters start at zero; the run is fully determined by the scene and options.
inline TrainResult train_toy(
  const SyntheticScene & scene, const eadf::EadfConfig & cfg, const DepthBinning & binning,
  const FocalParams & fp, const TrainOptions & opt)
{
  if (!(opt.lr >= 0.0) || !std::isfinite(opt.lr)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  const geometry::ImageShape shape{scene.config.height, scene.config.width};
  const DepthStack sparse = geometry::project_multiview(
    scene.cloud, scene.calibs, shape, geometry::DepthRange{binning.d_min, binning.d_max});
  const auto fused = eadf::eadf_pipeline(sparse, cfg);

  TrainResult result;
  result.params = zero_params(scene.features.dim(1), binning.n_bins, opt.downscale);
  auto & params = result.params;
  using supervision::GradTarget;

  for (std::size_t it = 0;; ++it) {
    const auto fwd = head_forward(params, scene.features);
    for (double p : fwd.distribution.values()) {
      if (!std::isfinite(p)) {
        throw DivergenceError(
          "non-finite prediction at iteration " + std::to_string(it) + " (learning rate too large?)");
      }
    }
    const bool last = it == opt.iters;
    const GradTarget target = last ? GradTarget::kNone : GradTarget::kProbabilities;
    auto lf = supervision::fgd_loss(fwd.distribution, sparse, binning, fp, target);
    auto le = supervision::eadf_loss(
      fwd.distribution, fused.dense, fused.edges, binning, fp,
      opt.use_eadf ? target : GradTarget::kNone);
    const double total = lf.value + (opt.use_eadf ? le.value : 0.0);
    if (!std::isfinite(total)) {
      throw DivergenceError(
        "non-finite loss at iteration " + std::to_string(it) + " (fgd " +
        std::to_string(lf.value) + ", eadf " + std::to_string(le.value) + ")");
    }
    result.trace.push_back({it, lf.value, le.value, total});
    if (last) {
      result.accuracy = bin_accuracy(fwd.distribution, sparse, binning);
      result.edge_accuracy = bin_accuracy(fwd.distribution, sparse, binning, &fused.edges);
      break;
    }
    Tensor<double> upstream = std::move(*lf.grad);
    if (opt.use_eadf) {
      const auto & ge = *le.grad;
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        upstream[i] += ge[i];
      }
    }
    const auto grads = head_backward(params, fwd, upstream);
    for (std::size_t i = 0; i < params.weight.size(); ++i) {
      params.weight[i] -= opt.lr * grads.weight[i];
    }
    for (std::size_t b = 0; b < params.bias.size(); ++b) {
      params.bias[b] -= opt.lr * grads.bias[b];
    }
    const auto finite = [](double x) { return std::isfinite(x); };
    if (!std::all_of(params.weight.values().begin(), params.weight.values().end(), finite) ||
        !std::all_of(params.bias.begin(), params.bias.end(), finite)) {
      throw DivergenceError("non-finite parameters after iteration " + std::to_string(it));
    }
  }
  return result;
}

}  // namespace ealss::toy

#endif  // EALSS__TOY_HEAD_HPP_

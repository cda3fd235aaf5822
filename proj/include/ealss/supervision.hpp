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

#ifndef EALSS__SUPERVISION_HPP_
#define EALSS__SUPERVISION_HPP_

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ealss/errors.hpp"
#include "ealss/parallel.hpp"
#include "ealss/tensor.hpp"

// Depth-bin classification losses.
//
// Both losses use the standard focal form -alpha * (1 - p_t)^gamma * log(p_t), where p_t
// is the PREDICTED probability of the ground-truth bin. The fine-grained loss supervises
// every non-zero pixel of the sparse projected depth; the edge-aware loss supervises the
// block-max dense depth, weighted per pixel by the edge map. Losses are sums over pixels;
// n_active reports the number of contributing pixels for callers that want a mean.
//
// Predicted distributions have shape (views, bins, rows, cols).

namespace ealss::supervision
{

/// Floor applied inside every log.
inline constexpr double kLogFloor = 1e-12;

/// Tolerance on |sum(p) - 1| accepted for a predicted distribution.
inline constexpr double kSimplexTol = 1e-6;

struct DepthBinning
{
  double d_min{1.0};
  double d_max{60.0};
  std::size_t n_bins{40};

  double width() const noexcept { return (d_max - d_min) / static_cast<double>(n_bins); }
  double center(std::size_t bin) const noexcept
  {
    return d_min + (static_cast<double>(bin) + 0.5) * width();
  }
};

inline void validate(const DepthBinning & b)
{
  if (!std::isfinite(b.d_min) || !std::isfinite(b.d_max) || !(b.d_min < b.d_max)) {
    throw ConfigError("binning requires finite d_min < d_max");
  }
  if (b.n_bins < 2) {
    throw ConfigError("binning requires n_bins >= 2");
  }
  if (!(b.width() > 0.0)) {
    throw ConfigError("binning width must be positive");
  }
}

struct FocalParams
{
  double alpha{0.25};
  double gamma{2.0};
};

inline void validate(const FocalParams & fp)
{
  if (!(fp.alpha > 0.0 && fp.alpha <= 1.0)) {
    throw ConfigError("focal alpha must lie in (0, 1]");
  }
  if (!(fp.gamma >= 0.0) || !std::isfinite(fp.gamma)) {
    throw ConfigError("focal gamma must be finite and >= 0");
  }
}

/// clamp(floor((depth - d_min) / width), 0, n_bins - 1). Zero pixels must be masked first.
inline std::size_t bin_index(double depth, const DepthBinning & b)
{
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw DomainError("bin_index requires a finite depth > 0");
  }
  const double f = std::floor((depth - b.d_min) / b.width());
  if (f <= 0.0) {
    return 0;
  }
  const auto last = static_cast<double>(b.n_bins - 1);
  return static_cast<std::size_t>(f >= last ? last : f);
}

inline std::vector<double> one_hot(std::size_t idx, std::size_t n_bins)
{
  if (idx >= n_bins) {
    throw DomainError(
      "one_hot index " + std::to_string(idx) + " out of range for " + std::to_string(n_bins) +
      " classes");
  }
  std::vector<double> v(n_bins, 0.0);
  v[idx] = 1.0;
  return v;
}

/// Per-pixel softmax over the bin axis of (views, bins, rows, cols) logits.
inline Tensor<double> softmax(const Tensor<double> & logits)
{
  require_rank(logits, 4, "logits");
  const std::size_t bins = logits.dim(1);
  const std::size_t rows = logits.dim(2);
  const std::size_t cols = logits.dim(3);
  Tensor<double> prob(logits.shape(), 0.0);
  parallel_for(logits.dim(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          double m = logits(v, 0, r, c);
          for (std::size_t b = 1; b < bins; ++b) {
            m = std::max(m, logits(v, b, r, c));
          }
          double s = 0.0;
          for (std::size_t b = 0; b < bins; ++b) {
            const double e = std::exp(logits(v, b, r, c) - m);
            prob(v, b, r, c) = e;
            s += e;
          }
          for (std::size_t b = 0; b < bins; ++b) {
            prob(v, b, r, c) /= s;
          }
        }
      }
    }
  });
  return prob;
}

/// Throws unless every pixel holds a finite probability vector summing to 1 within 1e-6.
inline void validate_distribution(const Tensor<double> & pred)
{
  require_rank(pred, 4, "predicted distribution");
  const std::size_t bins = pred.dim(1);
  for (std::size_t v = 0; v < pred.dim(0); ++v) {
    for (std::size_t r = 0; r < pred.dim(2); ++r) {
      for (std::size_t c = 0; c < pred.dim(3); ++c) {
        double s = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
          const double p = pred(v, b, r, c);
          if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw InputError("predicted probability outside [0, 1]");
          }
          s += p;
        }
        if (std::abs(s - 1.0) > kSimplexTol) {
          throw InputError(
            "predicted distribution at view " + std::to_string(v) + " pixel (" +
            std::to_string(r) + ", " + std::to_string(c) + ") sums to " + std::to_string(s));
        }
      }
    }
  }
}

/// Focal term -alpha (1 - p)^gamma log(max(p, eps)).
inline double focal_term(double p, const FocalParams & fp)
{
  return -fp.alpha * std::pow(1.0 - p, fp.gamma) * std::log(std::max(p, kLogFloor));
}

/// d focal_term / dp.
inline double focal_term_dp(double p, const FocalParams & fp)
{
  const double q = 1.0 - p;
  const double log_p = std::log(std::max(p, kLogFloor));
  double d = 0.0;
  if (fp.gamma != 0.0 && q > 0.0) {
    d += -fp.gamma * std::pow(q, fp.gamma - 1.0) * log_p;
  }
  if (p >= kLogFloor) {
    d += std::pow(q, fp.gamma) / p;
  }
  return -fp.alpha * d;
}

/// What, if anything, a loss differentiates with respect to.
enum class GradTarget { kNone, kLogits, kProbabilities };

struct LossReport
{
  double value{0.0};
  std::size_t n_active{0};
  std::optional<Tensor<double>> grad;
};

namespace detail
{

inline void check_labels(const Tensor<double> & pred, const DepthStack & gt, const char * what)
{
  require_rank(gt, 3, what);
  if (gt.dim(0) != pred.dim(0) || gt.dim(1) != pred.dim(2) || gt.dim(2) != pred.dim(3)) {
    throw DimensionError(
      std::string(what) + " " + shape_str(gt.shape()) + " does not match prediction " +
      shape_str(pred.shape()));
  }
  for (double d : gt.values()) {
    if (!std::isfinite(d) || d < 0.0) {
      throw InputError(std::string(what) + " must be finite and >= 0");
    }
  }
}

/// Shared body of both losses; weights == nullptr means unit weight everywhere.
inline LossReport weighted_focal(
  const Tensor<double> & pred, const DepthStack & gt, const DepthStack * weights,
  const DepthBinning & binning, const FocalParams & fp, GradTarget target)
{
  const std::size_t views = pred.dim(0);
  const std::size_t bins = pred.dim(1);
  const std::size_t rows = pred.dim(2);
  const std::size_t cols = pred.dim(3);
  if (bins != binning.n_bins) {
    throw DimensionError(
      "prediction has " + std::to_string(bins) + " bins, binning has " +
      std::to_string(binning.n_bins));
  }
  std::vector<double> contrib(gt.size(), 0.0);
  std::vector<unsigned char> active(gt.size(), 0);
  LossReport report;
  if (target != GradTarget::kNone) {
    report.grad.emplace(pred.shape(), 0.0);
  }
  parallel_for(views, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t v = lo; v < hi; ++v) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t px = gt.offset(v, r, c);
          const double depth = gt[px];
          const double w = weights ? (*weights)[px] : 1.0;
          if (depth == 0.0 || w == 0.0) {
            continue;
          }
          const std::size_t t = bin_index(depth, binning);
          const double pt = pred(v, t, r, c);
          contrib[px] = w * focal_term(pt, fp);
          active[px] = 1;
          if (target == GradTarget::kNone) {
            continue;
          }
          const double gt_dp = w * focal_term_dp(pt, fp);
          auto & g = *report.grad;
          if (target == GradTarget::kProbabilities) {
            g(v, t, r, c) = gt_dp;
            continue;
          }
          // softmax Jacobian: dL/dz_b = dL/dp_t * p_t * (delta_bt - p_b)
          const double s = gt_dp * pt;
          for (std::size_t b = 0; b < bins; ++b) {
            g(v, b, r, c) = s * ((b == t ? 1.0 : 0.0) - pred(v, b, r, c));
          }
        }
      }
    }
  });
  report.value = pairwise_sum(contrib);
  for (unsigned char a : active) {
    report.n_active += a;
  }
  return report;
}

}  // namespace detail

/// Fine-grained depth loss over the non-zero pixels of the sparse ground truth.
inline LossReport fgd_loss(
  const Tensor<double> & pred, const DepthStack & gt_sparse, const DepthBinning & binning,
  const FocalParams & fp, GradTarget target)
{
  validate(binning);
  validate(fp);
  validate_distribution(pred);
  detail::check_labels(pred, gt_sparse, "sparse ground truth");
  return detail::weighted_focal(pred, gt_sparse, nullptr, binning, fp, target);
}

inline LossReport fgd_loss(
  const Tensor<double> & pred, const DepthStack & gt_sparse, const DepthBinning & binning,
  const FocalParams & fp, bool want_grad)
{
  return fgd_loss(
    pred, gt_sparse, binning, fp, want_grad ? GradTarget::kLogits : GradTarget::kNone);
}

/// Edge-aware loss against the dense ground truth, weighted per pixel by the edge map.
/// Pixels whose dense depth is still 0 carry no label and are skipped.
inline LossReport eadf_loss(
  const Tensor<double> & pred, const DepthStack & gt_dense, const DepthStack & weights,
  const DepthBinning & binning, const FocalParams & fp, GradTarget target)
{
  validate(binning);
  validate(fp);
  validate_distribution(pred);
  detail::check_labels(pred, gt_dense, "dense ground truth");
  if (weights.shape() != gt_dense.shape()) {
    throw DimensionError(
      "weights " + shape_str(weights.shape()) + " do not match dense ground truth " +
      shape_str(gt_dense.shape()));
  }
  for (double w : weights.values()) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw InputError("edge weights must lie in [0, 1]");
    }
  }
  return detail::weighted_focal(pred, gt_dense, &weights, binning, fp, target);
}

inline LossReport eadf_loss(
  const Tensor<double> & pred, const DepthStack & gt_dense, const DepthStack & weights,
  const DepthBinning & binning, const FocalParams & fp, bool want_grad)
{
  return eadf_loss(
    pred, gt_dense, weights, binning, fp, want_grad ? GradTarget::kLogits : GradTarget::kNone);
}

/// Unweighted sum of the two depth losses and the externally supplied detection losses.
inline double total_loss(double fgd, double eadf, double cls, double box)
{
  for (double x : {fgd, eadf, cls, box}) {
    if (!std::isfinite(x)) {
      throw InputError("total_loss inputs must be finite");
    }
    if (x < 0.0) {
      throw DomainError("total_loss inputs must be >= 0");
    }
  }
  return fgd + eadf + cls + box;
}

}  // namespace ealss::supervision

#endif  // EALSS__SUPERVISION_HPP_

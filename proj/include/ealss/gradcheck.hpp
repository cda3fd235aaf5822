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

#ifndef EALSS__GRADCHECK_HPP_
#define EALSS__GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include "ealss/eadf.hpp"
#include "ealss/random.hpp"
#include "ealss/supervision.hpp"
#include "ealss/tensor.hpp"
#include "ealss/toy_head.hpp"

// Central finite-difference checks of the analytical gradients.

namespace ealss::gradcheck
{

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-5;

/// Denominators below this are floored, so entries that are zero up to round-off are
/// compared absolutely rather than relatively.
inline constexpr double kRelFloor = 1e-4;

inline double relative_error(double analytic, double numeric)
{
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
}

/// Max relative error between `analytic` and central differences of f over x.
inline double compare(
  std::span<const double> analytic, std::vector<double> x,
  const std::function<double(const std::vector<double> &)> & f, double h = kStep)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

struct LossInstance
{
  supervision::DepthBinning binning;
  Tensor<double> logits;  // (1, bins, n, n)
  DepthStack sparse;      // ~30% zeros
  DepthStack dense;       // densify(sparse, 2)
  DepthStack weights;     // edge map of the dense depth
};

inline LossInstance make_loss_instance(
  std::uint64_t seed, std::size_t size, std::size_t bins, double d_min, double d_max)
{
  Rng rng(seed);
  LossInstance in;
  in.binning = {d_min, d_max, bins};
  in.logits = Tensor<double>({1, bins, size, size});
  for (double & z : in.logits.values()) {
    z = 1.5 * rng.normal();
  }
  in.sparse = DepthStack({1, size, size}, 0.0);
  for (double & d : in.sparse.values()) {
    d = rng.uniform() < 0.3 ? 0.0 : rng.uniform(d_min, d_max);
  }
  const std::size_t k = std::min<std::size_t>(2, size);
  const auto out = eadf::eadf_pipeline(in.sparse, eadf::EadfConfig{k});
  in.dense = out.dense;
  in.weights = out.edges;
  return in;
}

enum class Loss { kFgd, kEadf };

/// Analytical logit gradient of one loss vs central differences. `corrupt` perturbs the
/// analytical gradient first (negative control).
inline double check_loss(
  const LossInstance & in, Loss which, const supervision::FocalParams & fp, bool corrupt = false)
{
  using supervision::GradTarget;
  const auto eval = [&](const Tensor<double> & logits, GradTarget target) {
    const auto pred = supervision::softmax(logits);
    return which == Loss::kFgd
             ? supervision::fgd_loss(pred, in.sparse, in.binning, fp, target)
             : supervision::eadf_loss(pred, in.dense, in.weights, in.binning, fp, target);
  };
  auto report = eval(in.logits, GradTarget::kLogits);
  auto & grad = *report.grad;
  if (corrupt) {
    const auto it = std::max_element(
      grad.storage().begin(), grad.storage().end(),
      [](double a, double b) { return std::abs(a) < std::abs(b); });
    *it *= 1.01;
  }
  return compare(grad.values(), in.logits.storage(), [&](const std::vector<double> & x) {
    return eval(Tensor<double>(in.logits.shape(), x), GradTarget::kNone).value;
  });
}

/// End-to-end gradient of L_FGD + L_EADF with respect to the toy head's weight and bias.
inline double check_head(
  std::uint64_t seed, std::size_t size, const supervision::FocalParams & fp, bool corrupt = false)
{
  constexpr std::size_t kFeatures = 4;
  constexpr std::size_t kBins = 8;
  Rng rng(seed ^ 0x9E3779B97F4A7C15ull);
  const auto in = make_loss_instance(seed, size, kBins, 1.0, 9.0);
  Tensor<double> features({1, kFeatures, size, size});
  for (double & f : features.values()) {
    f = rng.normal();
  }
  auto params = toy::zero_params(kFeatures, kBins, size % 2 == 0 ? 2 : 1);
  for (double & w : params.weight.values()) {
    w = 0.5 * rng.normal();
  }
  for (double & b : params.bias) {
    b = 0.5 * rng.normal();
  }
  using supervision::GradTarget;
  const auto loss = [&](const toy::ToyHeadParams & p, GradTarget target) {
    const auto fwd = toy::head_forward(p, features);
    auto a = supervision::fgd_loss(fwd.distribution, in.sparse, in.binning, fp, target);
    auto b = supervision::eadf_loss(fwd.distribution, in.dense, in.weights, in.binning, fp, target);
    if (target != GradTarget::kNone) {
      for (std::size_t i = 0; i < a.grad->size(); ++i) {
        (*a.grad)[i] += (*b.grad)[i];
      }
    }
    return std::pair{a.value + b.value, std::move(a.grad)};
  };
  const auto [value, upstream] = loss(params, GradTarget::kProbabilities);
  const auto grads = toy::head_backward(params, features, *upstream);

  std::vector<double> analytic(grads.weight.storage());
  analytic.insert(analytic.end(), grads.bias.begin(), grads.bias.end());
  if (corrupt) {
    analytic.back() += 1e-2 * (std::abs(analytic.back()) + 1.0);
  }
  std::vector<double> x(params.weight.storage());
  x.insert(x.end(), params.bias.begin(), params.bias.end());
  const std::size_t nw = params.weight.size();
  return compare(analytic, x, [&](const std::vector<double> & v) {
    auto p = params;
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nw), p.weight.storage().begin());
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(nw), v.end(), p.bias.begin());
    return loss(p, GradTarget::kNone).first;
  });
}

struct Summary
{
  double fgd{0.0};
  double eadf{0.0};
  double head{0.0};

  double max_rel_err() const { return std::max({fgd, eadf, head}); }
  bool pass() const { return max_rel_err() <= kTolerance; }
};

/// The full check run by the CLI: both losses on a size x size x 8-bin instance plus the
/// toy head end to end.
inline Summary run(
  std::uint64_t seed, std::size_t size, double d_min, double d_max,
  const supervision::FocalParams & fp, bool corrupt = false)
{
  const auto in = make_loss_instance(seed, size, 8, d_min, d_max);
  Summary s;
  s.fgd = check_loss(in, Loss::kFgd, fp, corrupt);
  s.eadf = check_loss(in, Loss::kEadf, fp);
  s.head = check_head(seed, size, fp);
  return s;
}

}  // namespace ealss::gradcheck

#endif  // EALSS__GRADCHECK_HPP_

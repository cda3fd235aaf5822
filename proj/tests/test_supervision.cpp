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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ealss/eadf.hpp"
#include "ealss/supervision.hpp"
#include "oracles.hpp"

namespace
{

using namespace ealss;
using namespace ealss::supervision;

const DepthBinning kUnitBins{1.0, 41.0, 40};

/// (1, bins, rows, cols) distribution with probability `pt` on bin `t` at every pixel
/// and the rest spread evenly.
Tensor<double> flat_with(std::size_t bins, std::size_t rows, std::size_t cols, std::size_t t, double pt)
{
  Tensor<double> p({1, bins, rows, cols}, (1.0 - pt) / static_cast<double>(bins - 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      p(0, t, r, c) = pt;
    }
  }
  return p;
}

struct Instance
{
  DepthBinning binning;
  Tensor<double> logits;
  DepthStack sparse;
  DepthStack dense;
  DepthStack weights;
};

Instance random_instance(std::uint64_t seed, std::size_t n = 8, std::size_t bins = 8)
{
  Rng rng(seed);
  Instance in;
  in.binning = {1.0, 9.0, bins};
  in.logits = Tensor<double>({1, bins, n, n});
  for (double & z : in.logits.values()) {
    z = 1.5 * rng.normal();
  }
  in.sparse = DepthStack({1, n, n}, 0.0);
  for (double & d : in.sparse.values()) {
    d = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.5, 10.0);
  }
  const auto out = eadf::eadf_pipeline(in.sparse, eadf::EadfConfig{2});
  in.dense = out.dense;
  in.weights = out.edges;
  return in;
}

TEST(BinIndex, Examples)
{
  EXPECT_EQ(bin_index(2.5, kUnitBins), 1u);
  EXPECT_EQ(bin_index(1.0, kUnitBins), 0u);
  EXPECT_EQ(bin_index(41.0, kUnitBins), 39u);
  EXPECT_EQ(bin_index(500.0, kUnitBins), 39u);
  EXPECT_EQ(bin_index(0.3, kUnitBins), 0u);
  EXPECT_THROW(bin_index(0.0, kUnitBins), DomainError);
  EXPECT_THROW(bin_index(-2.0, kUnitBins), DomainError);
}

TEST(BinIndex, MatchesLinearScan)
{
  Rng rng(17);
  const DepthBinning b{1.0, 60.0, 40};
  for (int i = 0; i < 5000; ++i) {
    const double d = rng.uniform(1.0, 59.999);
    const auto idx = bin_index(d, b);
    EXPECT_EQ(idx, oracle::bin_scan(d, b.d_min, b.d_max, b.n_bins));
    const auto v = one_hot(idx, b.n_bins);
    EXPECT_EQ(std::accumulate(v.begin(), v.end(), 0.0), 1.0);
    EXPECT_EQ(v[oracle::bin_scan(d, b.d_min, b.d_max, b.n_bins)], 1.0);
  }
}

TEST(OneHot, Basics)
{
  EXPECT_EQ(one_hot(0, 3), (std::vector<double>{1, 0, 0}));
  EXPECT_THROW(one_hot(3, 3), DomainError);
}

TEST(Binning, Validation)
{
  EXPECT_THROW(validate(DepthBinning{5.0, 5.0, 10}), ConfigError);
  EXPECT_THROW(validate(DepthBinning{1.0, 5.0, 1}), ConfigError);
  EXPECT_THROW(validate(FocalParams{0.0, 2.0}), ConfigError);
  EXPECT_THROW(validate(FocalParams{0.25, -1.0}), ConfigError);
  EXPECT_NO_THROW(validate(FocalParams{1.0, 0.0}));
}

TEST(FgdLoss, WorkedValue)
{
  // one non-zero pixel whose true bin has probability 0.25
  const auto pred = flat_with(4, 1, 2, 1, 0.25);
  DepthStack gt({1, 1, 2}, {0.0, 2.5});
  const auto r = fgd_loss(pred, gt, DepthBinning{1.0, 5.0, 4}, FocalParams{0.25, 2.0}, false);
  EXPECT_NEAR(r.value, 0.25 * 0.75 * 0.75 * -std::log(0.25), 1e-15);
  EXPECT_NEAR(r.value, 0.194947, 1e-6);
  EXPECT_EQ(r.n_active, 1u);
  EXPECT_FALSE(r.grad.has_value());
}

TEST(FgdLoss, PerfectPredictionIsZero)
{
  Tensor<double> pred({1, 3, 2, 2}, 0.0);
  DepthStack gt({1, 2, 2}, {1.5, 2.5, 3.5, 0.0});
  const DepthBinning b{1.0, 4.0, 3};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      pred(0, gt(0, r, c) > 0 ? bin_index(gt(0, r, c), b) : 0, r, c) = 1.0;
    }
  }
  const auto res = fgd_loss(pred, gt, b, FocalParams{}, true);
  EXPECT_EQ(res.value, 0.0);
  EXPECT_EQ(res.n_active, 3u);
}

TEST(FgdLoss, ZeroGroundTruthContributesNothing)
{
  const auto in = random_instance(1);
  const DepthStack zero(in.sparse.shape(), 0.0);
  const auto r = fgd_loss(softmax(in.logits), zero, in.binning, FocalParams{}, true);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.n_active, 0u);
  for (double g : r.grad->values()) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(FgdLoss, MatchesDirectFormula)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = random_instance(seed);
    const auto p = softmax(in.logits);
    const auto got = fgd_loss(p, in.sparse, in.binning, FocalParams{}, false).value;
    const double want = oracle::focal_loss_direct(p, in.sparse, nullptr, 1.0, 9.0, 0.25, 2.0);
    EXPECT_NEAR(got, want, 1e-12 * want);
  }
}

TEST(EadfLoss, WorkedValue)
{
  const auto pred = flat_with(2, 1, 2, 1, 0.5);
  DepthStack gt({1, 1, 2}, {1.7, 1.7});
  DepthStack w({1, 1, 2}, {0.0, 1.0});
  const auto r = eadf_loss(pred, gt, w, DepthBinning{1.0, 2.0, 2}, FocalParams{0.25, 2.0}, false);
  EXPECT_NEAR(r.value, 0.25 * 0.25 * std::log(2.0), 1e-15);
  EXPECT_NEAR(r.value, 0.043322, 1e-6);
  EXPECT_EQ(r.n_active, 1u);
}

TEST(EadfLoss, ZeroWeightsGiveZero)
{
  const auto in = random_instance(2);
  const DepthStack w(in.dense.shape(), 0.0);
  const auto r = eadf_loss(softmax(in.logits), in.dense, w, in.binning, FocalParams{}, true);
  EXPECT_EQ(r.value, 0.0);
  for (double g : r.grad->values()) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(EadfLoss, EqualsFgdOnDenseUnitWeights)
{
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    auto in = random_instance(100 + trial);
    for (double & d : in.sparse.values()) {
      d = rng.uniform(1.0, 9.0);
    }
    const auto dense = eadf::densify(in.sparse, 1);
    const DepthStack ones(dense.shape(), 1.0);
    const auto p = softmax(in.logits);
    const auto a = fgd_loss(p, in.sparse, in.binning, FocalParams{}, true);
    const auto b = eadf_loss(p, dense, ones, in.binning, FocalParams{}, true);
    EXPECT_NEAR(a.value, b.value, 1e-12 * a.value);
    EXPECT_EQ(*a.grad, *b.grad);
  }
}

TEST(EadfLoss, RejectsBadWeights)
{
  const auto in = random_instance(3);
  auto w = in.weights;
  w[5] = 1.5;
  EXPECT_THROW(eadf_loss(softmax(in.logits), in.dense, w, in.binning, FocalParams{}, false), InputError);
  EXPECT_THROW(
    eadf_loss(softmax(in.logits), in.dense, DepthStack({1, 8, 7}, 0.0), in.binning, FocalParams{}, false),
    DimensionError);
}

TEST(Losses, RejectShapeMismatchAndUnnormalisedPrediction)
{
  const auto in = random_instance(4);
  auto p = softmax(in.logits);
  EXPECT_THROW(fgd_loss(p, DepthStack({1, 8, 9}, 0.0), in.binning, FocalParams{}, false), DimensionError);
  EXPECT_THROW(fgd_loss(p, in.sparse, DepthBinning{1.0, 9.0, 9}, FocalParams{}, false), DimensionError);
  p(0, 0, 0, 0) += 1e-3;
  EXPECT_THROW(fgd_loss(p, in.sparse, in.binning, FocalParams{}, false), InputError);
}

TEST(Losses, GradientsMatchFiniteDifferences)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = random_instance(seed);
    const FocalParams fp{};
    const auto f_fgd = [&](const std::vector<double> & z) {
      return fgd_loss(softmax(Tensor<double>(in.logits.shape(), z)), in.sparse, in.binning, fp, false).value;
    };
    const auto f_eadf = [&](const std::vector<double> & z) {
      return eadf_loss(softmax(Tensor<double>(in.logits.shape(), z)), in.dense, in.weights, in.binning, fp, false)
        .value;
    };
    const auto p = softmax(in.logits);
    const auto ga = fgd_loss(p, in.sparse, in.binning, fp, true).grad->storage();
    const auto ge = eadf_loss(p, in.dense, in.weights, in.binning, fp, true).grad->storage();
    EXPECT_LE(oracle::max_rel_err(ga, oracle::central_differences(in.logits.storage(), f_fgd)), 1e-5);
    EXPECT_LE(oracle::max_rel_err(ge, oracle::central_differences(in.logits.storage(), f_eadf)), 1e-5);
  }
}

TEST(Losses, ProbabilityGradientOnlyTouchesTrueBin)
{
  const auto in = random_instance(5);
  const auto p = softmax(in.logits);
  const auto r = fgd_loss(p, in.sparse, in.binning, FocalParams{}, GradTarget::kProbabilities);
  for (std::size_t v = 0; v < 1; ++v) {
    for (std::size_t row = 0; row < 8; ++row) {
      for (std::size_t c = 0; c < 8; ++c) {
        for (std::size_t b = 0; b < 8; ++b) {
          const double d = in.sparse(v, row, c);
          const double g = (*r.grad)(v, b, row, c);
          if (d == 0.0 || b != bin_index(d, in.binning)) {
            EXPECT_EQ(g, 0.0);
          } else {
            EXPECT_NEAR(g, focal_term_dp(p(v, b, row, c), FocalParams{}), 0.0);
          }
        }
      }
    }
  }
}

TEST(Losses, MaskedPixelsIgnorePerturbation)
{
  const auto in = random_instance(6);
  auto z = in.logits;
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      if (in.sparse(0, r, c) == 0.0) {
        for (std::size_t b = 0; b < 8; ++b) {
          z(0, b, r, c) += 3.0 * std::sin(static_cast<double>(b + r + c));
        }
      }
    }
  }
  EXPECT_EQ(
    fgd_loss(softmax(z), in.sparse, in.binning, FocalParams{}, false).value,
    fgd_loss(softmax(in.logits), in.sparse, in.binning, FocalParams{}, false).value);

  auto w = in.weights;
  z = in.logits;
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      if (w(0, r, c) == 0.0) {
        for (std::size_t b = 0; b < 8; ++b) {
          z(0, b, r, c) -= 2.0 * std::cos(static_cast<double>(b * r + c));
        }
      }
    }
  }
  EXPECT_EQ(
    eadf_loss(softmax(z), in.dense, w, in.binning, FocalParams{}, false).value,
    eadf_loss(softmax(in.logits), in.dense, w, in.binning, FocalParams{}, false).value);
}

TEST(Losses, StrictlyDecreaseWithConfidence)
{
  const DepthBinning b{1.0, 5.0, 4};
  DepthStack gt({1, 1, 1}, {2.5});
  DepthStack w({1, 1, 1}, {0.7});
  double prev_f = INFINITY;
  double prev_e = INFINITY;
  for (double pt = 0.05; pt < 0.999; pt += 0.05) {
    // raise p_t, scale the remaining bins proportionally
    Tensor<double> p({1, 4, 1, 1}, {0.1, 0.0, 0.3, 0.6});
    for (std::size_t k = 0; k < 4; ++k) {
      p(0, k, 0, 0) *= (1.0 - pt);
    }
    p(0, 1, 0, 0) = pt;
    const double f = fgd_loss(p, gt, b, FocalParams{}, false).value;
    const double e = eadf_loss(p, gt, w, b, FocalParams{}, false).value;
    EXPECT_LT(f, prev_f);
    EXPECT_LT(e, prev_e);
    prev_f = f;
    prev_e = e;
  }
}

TEST(Losses, ReduceToCrossEntropyWithoutFocusing)
{
  const FocalParams ce{1.0, 0.0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = random_instance(seed);
    const auto p = softmax(in.logits);
    const double a = fgd_loss(p, in.sparse, in.binning, ce, false).value;
    const double b = eadf_loss(p, in.dense, in.weights, in.binning, ce, false).value;
    const double wa = oracle::cross_entropy_direct(p, in.sparse, nullptr, 1.0, 9.0);
    const double wb = oracle::cross_entropy_direct(p, in.dense, &in.weights, 1.0, 9.0);
    EXPECT_NEAR(a, wa, 1e-12 * wa);
    EXPECT_NEAR(b, wb, 1e-12 * wb);
  }
}

TEST(Softmax, AgreesWithDirectFormulaAndSumsToOne)
{
  const auto in = random_instance(12);
  const auto a = softmax(in.logits);
  const auto b = oracle::softmax_direct(in.logits);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-15);
    EXPECT_GT(a[i], 0.0);
    EXPECT_LT(a[i], 1.0);
  }
  EXPECT_NO_THROW(validate_distribution(a));
}

TEST(TotalLoss, Sum)
{
  EXPECT_DOUBLE_EQ(total_loss(0.5, 0.3, 0.0, 0.0), 0.8);
  EXPECT_EQ(total_loss(0, 0, 0, 0), 0.0);
  EXPECT_EQ(total_loss(0.25, 0.5, 1.0, 2.0), total_loss(2.0, 1.0, 0.5, 0.25));
  EXPECT_THROW(total_loss(NAN, 0, 0, 0), InputError);
  EXPECT_THROW(total_loss(0, 0, INFINITY, 0), InputError);
}

}  // namespace

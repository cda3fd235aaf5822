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

#ifndef EALSS__PARALLEL_HPP_
#define EALSS__PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace ealss
{

/// Worker count from EALSS_THREADS (positive integer), else hardware concurrency.
inline std::size_t thread_count()
{
  if (const char * env = std::getenv("EALSS_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) {
        return static_cast<std::size_t>(n);
      }
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Callers write disjoint
/// outputs per index, so the result never depends on the worker count.
template <typename Body>
void parallel_for(std::size_t n, Body && body, std::size_t workers = thread_count())
{
  workers = std::min(workers, n);
  if (workers <= 1) {
    if (n > 0) {
      body(std::size_t{0}, n);
    }
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo < hi) {
      pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
  }
  body(std::size_t{0}, std::min(n, chunk));
}

/// Pairwise summation with a fixed split rule: deterministic and O(log n) error growth.
inline double pairwise_sum(std::span<const double> v)
{
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) {
      s += x;
    }
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace ealss

#endif  // EALSS__PARALLEL_HPP_

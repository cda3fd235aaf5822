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

#ifndef EALSS__TENSOR_HPP_
#define EALSS__TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ealss/errors.hpp"

namespace ealss
{

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape & shape)
{
  return std::accumulate(
    shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>{});
}

inline std::string shape_str(const Shape & shape)
{
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  os << ')';
  return os.str();
}

/// Dense row-major n-d array owning its storage.
template <typename T>
class Tensor
{
public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{})
  : shape_(std::move(shape)), data_(shape_numel(shape_), fill)
  {
    compute_strides();
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
  {
    if (data_.size() != shape_numel(shape_)) {
      throw DimensionError(
        "tensor data has " + std::to_string(data_.size()) + " values, shape " +
        shape_str(shape_) + " needs " + std::to_string(shape_numel(shape_)));
    }
    compute_strides();
  }

  const Shape & shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T> & storage() noexcept { return data_; }
  const std::vector<T> & storage() const noexcept { return data_; }

  T * data() noexcept { return data_.data(); }
  const T * data() const noexcept { return data_.data(); }

  template <typename... I>
  std::size_t offset(I... idx) const noexcept
  {
    const std::size_t ids[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t a = 0; a < sizeof...(I); ++a) {
      off += ids[a] * strides_[a];
    }
    return off;
  }

  template <typename... I>
  T & operator()(I... idx) noexcept
  {
    return data_[offset(idx...)];
  }

  template <typename... I>
  const T & operator()(I... idx) const noexcept
  {
    return data_[offset(idx...)];
  }

  T & operator[](std::size_t flat) noexcept { return data_[flat]; }
  const T & operator[](std::size_t flat) const noexcept { return data_[flat]; }

  /// Contiguous sub-block selected by fixing the leading index.
  std::span<T> slice(std::size_t lead)
  {
    const std::size_t n = strides_.empty() ? 0 : strides_[0];
    return std::span<T>(data_).subspan(lead * n, n);
  }
  std::span<const T> slice(std::size_t lead) const
  {
    const std::size_t n = strides_.empty() ? 0 : strides_[0];
    return std::span<const T>(data_).subspan(lead * n, n);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor & other) const
  {
    return shape_ == other.shape_ && data_ == other.data_;
  }

private:
  void compute_strides()
  {
    strides_.assign(shape_.size(), 1);
    for (std::size_t a = shape_.size(); a-- > 1;) {
      strides_[a - 1] = strides_[a] * shape_[a];
    }
  }

  Shape shape_;
  std::vector<std::size_t> strides_;
  std::vector<T> data_;
};

/// Stacked per-view scalar grids, shape (views, rows, cols). Holds D, D' or G'.
using DepthStack = Tensor<double>;

inline void require_rank(const Tensor<double> & t, std::size_t rank, const char * what)
{
  if (t.rank() != rank) {
    throw DimensionError(
      std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
      shape_str(t.shape()));
  }
}

}  // namespace ealss

#endif  // EALSS__TENSOR_HPP_

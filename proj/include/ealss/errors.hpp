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

#ifndef EALSS__ERRORS_HPP_
#define EALSS__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ealss
{

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input data (point clouds, tensors, files).
class InputError : public Error
{
public:
  using Error::Error;
};

/// Invalid camera intrinsics or extrinsics.
class CalibrationError : public Error
{
public:
  using Error::Error;
};

/// Invalid configuration value, missing/duplicate view ids, unknown config keys.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Tensor shapes that do not agree.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error
{
public:
  using Error::Error;
};

}  // namespace ealss

#endif  // EALSS__ERRORS_HPP_

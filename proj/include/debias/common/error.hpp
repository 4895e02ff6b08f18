/*
 * Copyright 2026 The Debias Pipeline Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEBIAS_COMMON_ERROR_HPP_
#define DEBIAS_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace debias {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input (manifest, config, file) violates its documented invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A raster file could not be read or decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// A value is outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage was invoked before the stage it depends on completed.
class MissingUpstreamError : public Error {
 public:
  MissingUpstreamError(std::string stage, std::string upstream)
      : Error("stage '" + stage + "' requires upstream stage '" + upstream +
              "' to be completed first"),
        stage_(std::move(stage)),
        upstream_(std::move(upstream)) {}

  const std::string& stage() const { return stage_; }
  const std::string& upstream() const { return upstream_; }

 private:
  std::string stage_;
  std::string upstream_;
};

}  // namespace debias

#endif  // DEBIAS_COMMON_ERROR_HPP_

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

#ifndef DEBIAS_GENERATE_GENERATOR_HPP_
#define DEBIAS_GENERATE_GENERATOR_HPP_

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

#include "debias/caption/captioner.hpp"
#include "debias/common/error.hpp"
#include "debias/common/http_adapter.hpp"
#include "debias/common/image.hpp"
#include "debias/dataset/shapes.hpp"

namespace debias {

// The backend cannot produce an image for this prompt at all. Retrying with a
// different seed will not help.
class PromptRejected : public Error {
 public:
  using Error::Error;
};

// Pluggable text-to-image backend. Deterministic backends reproduce images
// bit-exactly for identical (prompt, size, seed). Must be safe to call
// concurrently. Throws PromptRejected for unusable prompts and AdapterError
// for backend failures.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual Image generate(const std::string& prompt, int size, std::uint64_t seed) const = 0;
};

// Extracts the single shape and single color named in a prompt. Throws
// PromptRejected("unparsable prompt: ...") when either is missing or ambiguous.
SceneAttributes parse_prompt(std::string_view prompt);

// Renders the parsed scene with render_scene; jitter comes from `seed`.
class OracleGenerator final : public Generator {
 public:
  BackendDescriptor descriptor() const override { return {"oracle", true}; }
  Image generate(const std::string& prompt, int size, std::uint64_t seed) const override;
};

// Calls an external text-to-image service.
//
// Request (POST, JSON):
//   {"prompt": str, "size": int, "seed": int, "idempotency_key": str}
// Response: {"image_png_base64": str}. A 4xx status other than 429 means the
// prompt was refused and maps to PromptRejected.
class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}

  BackendDescriptor descriptor() const override { return {"external-http", false}; }
  Image generate(const std::string& prompt, int size, std::uint64_t seed) const override;

  long retries() const { return retries_.load(); }

 private:
  EndpointConfig endpoint_;
  mutable std::atomic<long> retries_{0};
};

std::string generation_idempotency_key(std::string_view prompt, std::uint64_t seed);

}  // namespace debias

#endif  // DEBIAS_GENERATE_GENERATOR_HPP_

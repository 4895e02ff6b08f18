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

#ifndef DEBIAS_CAPTION_CAPTIONER_HPP_
#define DEBIAS_CAPTION_CAPTIONER_HPP_

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "debias/common/http_adapter.hpp"
#include "debias/common/image.hpp"
#include "debias/dataset/shapes.hpp"

namespace debias {

struct BackendDescriptor {
  std::string id;
  bool deterministic = false;
};

struct CaptionInput {
  std::string sample_id;
  Image image;
  // Known only for synthetic data; external captioners ignore it.
  std::optional<SceneAttributes> ground_truth;
};

// Pluggable image captioner.
//
// caption() returns exactly `count` non-empty strings or throws. A thrown
// AdapterError of kind kUnavailable means the backend itself is down and the
// caller should abort; any other exception is a per-sample failure.
// Deterministic backends return identical output for identical (image, seed).
// Implementations must be safe to call concurrently.
class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual std::vector<std::string> caption(const CaptionInput& input, int count,
                                           std::uint64_t seed) const = 0;
};

// Deterministic stand-in for synthetic data. The first sentence always states
// the ground truth ("a {color} {shape} on a plain background"); the rest are
// drawn, seeded, from a fixed distractor pool in which some sentences name
// the shape without a color and others name no shape at all.
class OracleCaptioner final : public Captioner {
 public:
  BackendDescriptor descriptor() const override { return {"oracle", true}; }
  std::vector<std::string> caption(const CaptionInput& input, int count,
                                   std::uint64_t seed) const override;

  // The distractor templates; "{shape}" is substituted with the true shape.
  static const std::vector<std::string>& distractor_pool();
};

// Calls an external captioning service.
//
// Request (POST, JSON):
//   {"image_png_base64": str, "count": int, "seed": int,
//    "idempotency_key": str, "instruction": str}
// Response: {"captions": [str, ...]} with exactly `count` entries.
// The idempotency key is sha256(png bytes || seed).
class HttpCaptioner final : public Captioner {
 public:
  static constexpr const char* kDefaultInstruction = "Describe this image in one sentence.";

  explicit HttpCaptioner(EndpointConfig endpoint, std::string instruction = kDefaultInstruction)
      : endpoint_(std::move(endpoint)), instruction_(std::move(instruction)) {}

  BackendDescriptor descriptor() const override { return {"external-http", false}; }
  std::vector<std::string> caption(const CaptionInput& input, int count,
                                   std::uint64_t seed) const override;

  // Retries spent across all calls so far.
  long retries() const { return retries_.load(); }

 private:
  EndpointConfig endpoint_;
  std::string instruction_;
  mutable std::atomic<long> retries_{0};
};

std::string caption_idempotency_key(const std::string& png_bytes, std::uint64_t seed);

}  // namespace debias

#endif  // DEBIAS_CAPTION_CAPTIONER_HPP_

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

#include "debias/caption/captioner.hpp"

#include <algorithm>
#include <numeric>

#include "debias/common/hash.hpp"
#include "debias/common/rng.hpp"

namespace debias {
namespace {

std::string Substitute(std::string text, const std::string& shape) {
  static const std::string kSlot = "{shape}";
  for (auto pos = text.find(kSlot); pos != std::string::npos; pos = text.find(kSlot)) {
    text.replace(pos, kSlot.size(), shape);
  }
  return text;
}

}  // namespace

const std::vector<std::string>& OracleCaptioner::distractor_pool() {
  static const std::vector<std::string> kPool = {
      "a brightly lit studio photograph",
      "a simple flat illustration with soft lighting",
      "an abstract graphic in the middle of the frame",
      "a minimalist poster design",
      "a clean digital rendering with sharp edges",
      "a blurry low resolution picture",
      "a {shape} shaped object",
      "a single {shape} in the center",
      "a {shape} drawn with bold outlines",
      "the {shape} appears slightly off center",
  };
  return kPool;
}

std::vector<std::string> OracleCaptioner::caption(const CaptionInput& input, int count,
                                                  std::uint64_t seed) const {
  if (!input.ground_truth) {
    throw ValidationError("oracle captioner: sample '" + input.sample_id +
                          "' has no ground-truth attributes");
  }
  if (count < 1) throw ValidationError("oracle captioner: count must be >= 1");
  const auto& gt = *input.ground_truth;
  std::vector<std::string> out;
  out.push_back("a " + gt.color + " " + gt.shape + " on a plain background");

  const auto& pool = distractor_pool();
  std::vector<size_t> order(pool.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<size_t>(order));
  for (int i = 1; i < count; ++i) {
    out.push_back(Substitute(pool[order[static_cast<size_t>(i - 1) % order.size()]], gt.shape));
  }
  return out;
}

std::string caption_idempotency_key(const std::string& png_bytes, std::uint64_t seed) {
  Sha256 h;
  h.update(png_bytes);
  h.update(std::to_string(seed));
  return h.hex_digest();
}

std::vector<std::string> HttpCaptioner::caption(const CaptionInput& input, int count,
                                                std::uint64_t seed) const {
  const std::string png = encode_png(input.image);
  const std::string key = caption_idempotency_key(png, seed);
  nlohmann::json body{{"image_png_base64", base64_encode(png)},
                      {"count", count},
                      {"seed", seed},
                      {"idempotency_key", key},
                      {"instruction", instruction_}};
  PostResult res;
  try {
    res = post_json_with_retries(endpoint_, body, key);
  } catch (const AdapterError& e) {
    retries_ += std::max(0, e.attempts() - 1);
    throw;
  }
  retries_ += res.attempts - 1;

  const auto& captions = res.body.find("captions");
  if (captions == res.body.end() || !captions->is_array()) {
    throw AdapterError(FailureKind::kMalformedResponse, "response has no 'captions' array",
                       res.attempts);
  }
  if (captions->size() != static_cast<size_t>(count)) {
    throw AdapterError(FailureKind::kMalformedResponse,
                       "expected " + std::to_string(count) + " captions, got " +
                           std::to_string(captions->size()),
                       res.attempts);
  }
  std::vector<std::string> out;
  for (const auto& c : *captions) {
    if (!c.is_string() || c.get<std::string>().empty()) {
      throw AdapterError(FailureKind::kMalformedResponse, "caption is not a non-empty string",
                         res.attempts);
    }
    out.push_back(c.get<std::string>());
  }
  return out;
}

}  // namespace debias

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

#include "debias/generate/generator.hpp"

#include <algorithm>
#include <set>

#include "debias/common/hash.hpp"
#include "debias/filter/text_filter.hpp"

namespace debias {

SceneAttributes parse_prompt(std::string_view prompt) {
  std::set<std::string> shapes;
  std::set<std::string> colors;
  for (const auto& tok : tokenize(prompt)) {
    if (is_known_shape(tok)) shapes.insert(tok);
    if (is_known_color(tok)) colors.insert(tok);
  }
  if (shapes.size() != 1 || colors.size() != 1) {
    throw PromptRejected("unparsable prompt: '" + std::string(prompt) + "' names " +
                         std::to_string(shapes.size()) + " shape(s) and " +
                         std::to_string(colors.size()) + " color(s)");
  }
  return {*shapes.begin(), *colors.begin()};
}

Image OracleGenerator::generate(const std::string& prompt, int size, std::uint64_t seed) const {
  return render_scene(parse_prompt(prompt), size, seed);
}

std::string generation_idempotency_key(std::string_view prompt, std::uint64_t seed) {
  Sha256 h;
  h.update(prompt);
  h.update("\n");
  h.update(std::to_string(seed));
  return h.hex_digest();
}

Image HttpGenerator::generate(const std::string& prompt, int size, std::uint64_t seed) const {
  const std::string key = generation_idempotency_key(prompt, seed);
  nlohmann::json body{{"prompt", prompt}, {"size", size}, {"seed", seed}, {"idempotency_key", key}};
  PostResult res;
  try {
    res = post_json_with_retries(endpoint_, body, key);
  } catch (const AdapterError& e) {
    retries_ += std::max(0, e.attempts() - 1);
    if (e.kind() == FailureKind::kRejected) throw PromptRejected(e.what());
    throw;
  }
  retries_ += res.attempts - 1;

  const auto it = res.body.find("image_png_base64");
  if (it == res.body.end() || !it->is_string()) {
    throw AdapterError(FailureKind::kMalformedResponse, "response has no 'image_png_base64'",
                       res.attempts);
  }
  try {
    return decode_png(base64_decode(it->get<std::string>()));
  } catch (const Error& e) {
    throw AdapterError(FailureKind::kMalformedResponse, e.what(), res.attempts);
  }
}

}  // namespace debias

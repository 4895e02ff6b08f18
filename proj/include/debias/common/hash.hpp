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

#ifndef DEBIAS_COMMON_HASH_HPP_
#define DEBIAS_COMMON_HASH_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace debias {

// Incremental SHA-256. Used for content hashes of artifacts so that caching
// and provenance are independent of timestamps and file locations.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view data);
  // Finalizes; the object must not be updated afterwards.
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Stateless 64-bit finalizer (splitmix64).
std::uint64_t mix64(std::uint64_t x);

// Derives an independent seed for a keyed sub-task, e.g. hash(seed, sample_id).
// Stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace debias

#endif  // DEBIAS_COMMON_HASH_HPP_

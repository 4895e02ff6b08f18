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

#ifndef DEBIAS_COMMON_IO_HPP_
#define DEBIAS_COMMON_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace debias {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never observe a
// half-written artifact.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

// Line-delimited JSON. The first record of every artifact file is its header.
struct JsonLines {
  Json header;
  std::vector<Json> records;
};

JsonLines read_json_lines(const std::filesystem::path& path);
std::string to_json_lines(const Json& header, const std::vector<Json>& records);

// Expects `kind` in the header to match; throws ValidationError otherwise.
void expect_kind(const Json& header, const std::string& kind,
                 const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_COMMON_IO_HPP_

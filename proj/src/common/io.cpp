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

#include "debias/common/io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "debias/common/error.hpp"

namespace debias {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing file '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

JsonLines read_json_lines(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  JsonLines out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
    }
    if (out.header.is_null()) {
      out.header = std::move(value);
    } else {
      out.records.push_back(std::move(value));
    }
  }
  if (out.header.is_null()) throw ValidationError(path.string() + ": missing header record");
  return out;
}

std::string to_json_lines(const Json& header, const std::vector<Json>& records) {
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

void expect_kind(const Json& header, const std::string& kind, const fs::path& path) {
  if (!header.is_object() || header.value("kind", "") != kind) {
    throw ValidationError(path.string() + ": expected a '" + kind + "' file");
  }
}

}  // namespace debias

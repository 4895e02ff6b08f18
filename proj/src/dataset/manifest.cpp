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

#include "debias/dataset/manifest.hpp"

#include <fstream>
#include <set>
#include <unordered_set>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

constexpr char kManifestKind[] = "dataset-manifest";
constexpr int kManifestVersion = 1;

std::string Where(const AttributedSample& s) { return "sample '" + s.id + "'"; }

Json SampleToJson(const AttributedSample& s) {
  Json j;
  j["id"] = s.id;
  j["image"] = s.image_ref;
  j["label"] = s.label;
  j["bias_attr"] = s.bias_attr ? Json(*s.bias_attr) : Json(nullptr);
  j["group"] = to_string(s.group);
  j["split"] = to_string(s.split);
  return j;
}

AttributedSample SampleFromJson(const Json& j, size_t line) {
  AttributedSample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.image_ref = j.at("image").get<std::string>();
    s.label = j.at("label").get<int>();
    const Json& attr = j.at("bias_attr");
    if (!attr.is_null()) s.bias_attr = attr.get<std::string>();
    s.group = parse_group(j.at("group").get<std::string>());
    s.split = parse_split(j.at("split").get<std::string>());
  } catch (const Json::exception& e) {
    throw ValidationError("manifest record " + std::to_string(line) + ": " + e.what());
  }
  return s;
}

}  // namespace

std::string_view to_string(Group group) {
  switch (group) {
    case Group::kAligned: return "aligned";
    case Group::kConflict: return "conflict";
    case Group::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Group parse_group(std::string_view text) {
  if (text == "aligned") return Group::kAligned;
  if (text == "conflict") return Group::kConflict;
  if (text == "unknown") return Group::kUnknown;
  throw ValidationError("unknown group '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

fs::path DatasetManifest::image_path(const AttributedSample& sample) const {
  const fs::path ref(sample.image_ref);
  return ref.is_absolute() ? ref : base_dir / ref;
}

const AttributedSample* DatasetManifest::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &samples[it->second];
}

void DatasetManifest::reindex() {
  index_.clear();
  index_.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) index_.emplace(samples[i].id, i);
}

void validate_manifest(const DatasetManifest& m, bool check_images) {
  std::set<std::string> names;
  for (const auto& n : m.class_names) {
    if (!names.insert(n).second) throw ValidationError("duplicate class name '" + n + "'");
  }
  if (m.class_names.empty()) throw ValidationError("manifest declares no classes");
  if (m.declared_conflict_ratio < 0.0 || m.declared_conflict_ratio > 1.0) {
    throw ValidationError("declared_conflict_ratio outside [0, 1]");
  }
  const int n_classes = static_cast<int>(m.class_names.size());
  for (const auto& [label, attr] : m.dominant_attr_map) {
    if (label < 0 || label >= n_classes) {
      throw ValidationError("dominant_attr_map names class " + std::to_string(label) +
                            " outside [0, " + std::to_string(n_classes) + ")");
    }
  }

  std::unordered_set<std::string> ids;
  ids.reserve(m.samples.size());
  std::unordered_set<std::string> checked_paths;
  for (const auto& s : m.samples) {
    if (s.id.empty()) throw ValidationError("sample with empty id");
    if (!ids.insert(s.id).second) throw ValidationError("duplicate id '" + s.id + "'");
    if (s.label < 0 || s.label >= n_classes) {
      throw ValidationError(Where(s) + ": label " + std::to_string(s.label) +
                            " out of range [0, " + std::to_string(n_classes) + ")");
    }
    if (s.bias_attr) {
      auto dom = m.dominant_attr_map.find(s.label);
      if (dom == m.dominant_attr_map.end()) {
        throw ValidationError(Where(s) + ": class " + std::to_string(s.label) +
                              " has no dominant attribute but the sample carries one");
      }
      const Group expected = *s.bias_attr == dom->second ? Group::kAligned : Group::kConflict;
      if (s.group != expected) {
        throw ValidationError(Where(s) + ": group '" + std::string(to_string(s.group)) +
                              "' inconsistent with bias attribute '" + *s.bias_attr + "'");
      }
    } else if (s.group != Group::kUnknown) {
      throw ValidationError(Where(s) + ": group '" + std::string(to_string(s.group)) +
                            "' requires a bias attribute");
    }
    if (check_images) {
      const fs::path p = m.image_path(s);
      if (!checked_paths.insert(p.string()).second) continue;
      std::ifstream probe(p, std::ios::binary);
      if (!probe || !fs::is_regular_file(p)) {
        throw ValidationError(Where(s) + ": unreadable image ref '" + s.image_ref + "'");
      }
    }
  }
}

DatasetManifest load_manifest(const fs::path& path, const LoadOptions& options) {
  if (!fs::exists(path)) throw ValidationError("missing manifest file '" + path.string() + "'");
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, kManifestKind, path);

  DatasetManifest m;
  try {
    const Json& h = lines.header;
    if (h.at("version").get<int>() != kManifestVersion) {
      throw ValidationError(path.string() + ": unsupported manifest version");
    }
    m.name = h.at("name").get<std::string>();
    m.class_names = h.at("class_names").get<std::vector<std::string>>();
    m.bias_attr_names = h.at("bias_attr_names").get<std::vector<std::string>>();
    for (const auto& [k, v] : h.at("dominant_attr_map").items()) {
      m.dominant_attr_map[std::stoi(k)] = v.get<std::string>();
    }
    m.declared_conflict_ratio = h.at("declared_conflict_ratio").get<double>();
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": malformed header: " + e.what());
  }
  m.samples.reserve(lines.records.size());
  for (size_t i = 0; i < lines.records.size(); ++i) {
    m.samples.push_back(SampleFromJson(lines.records[i], i + 2));
  }
  m.base_dir = path.has_parent_path() ? fs::absolute(path.parent_path()) : fs::current_path();
  validate_manifest(m, options.check_images);
  m.reindex();
  return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
  Json header;
  header["kind"] = kManifestKind;
  header["version"] = kManifestVersion;
  header["name"] = m.name;
  header["class_names"] = m.class_names;
  header["bias_attr_names"] = m.bias_attr_names;
  Json dom = Json::object();
  for (const auto& [k, v] : m.dominant_attr_map) dom[std::to_string(k)] = v;
  header["dominant_attr_map"] = dom;
  header["declared_conflict_ratio"] = m.declared_conflict_ratio;
  std::vector<Json> records;
  records.reserve(m.samples.size());
  for (const auto& s : m.samples) records.push_back(SampleToJson(s));
  return to_json_lines(header, records);
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_text_file(path, serialize_manifest(manifest));
}

std::string manifest_hash(const DatasetManifest& manifest) {
  return sha256_hex(serialize_manifest(manifest));
}

}  // namespace debias

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

#ifndef DEBIAS_DATASET_MANIFEST_HPP_
#define DEBIAS_DATASET_MANIFEST_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace debias {

enum class Group { kAligned, kConflict, kUnknown };
enum class Split { kTrain, kTest };

std::string_view to_string(Group group);
std::string_view to_string(Split split);
Group parse_group(std::string_view text);
Split parse_split(std::string_view text);

// One image with its class label and (optional) bias attribute. The group tag
// is stored, never inferred from pixels.
struct AttributedSample {
  std::string id;
  std::string image_ref;  // relative to the owning manifest's directory
  int label = 0;
  std::optional<std::string> bias_attr;
  Group group = Group::kUnknown;
  Split split = Split::kTrain;

  friend bool operator==(const AttributedSample&, const AttributedSample&) = default;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<std::string> bias_attr_names;
  std::map<int, std::string> dominant_attr_map;
  std::vector<AttributedSample> samples;
  double declared_conflict_ratio = 0.0;

  // Directory that image_refs are resolved against. Not serialized.
  std::filesystem::path base_dir;

  std::size_t num_classes() const { return class_names.size(); }
  std::filesystem::path image_path(const AttributedSample& sample) const;

  // Lookup by id; nullptr when absent. Requires reindex() after mutation.
  const AttributedSample* find(std::string_view id) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  // Check that every image_ref names a readable file.
  bool check_images = true;
};

// Throws ValidationError naming the offending record for: missing file,
// malformed record, duplicate id, label out of range, inconsistent group tag,
// unreadable image ref.
DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});

// Checks the invariants that load_manifest enforces on an in-memory manifest.
void validate_manifest(const DatasetManifest& manifest, bool check_images);

std::string serialize_manifest(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Content hash of the serialized form; independent of base_dir.
std::string manifest_hash(const DatasetManifest& manifest);

}  // namespace debias

#endif  // DEBIAS_DATASET_MANIFEST_HPP_

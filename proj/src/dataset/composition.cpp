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

#include "debias/dataset/composition.hpp"

#include <cmath>
#include <sstream>

namespace debias {

void GroupCounts::add(Group g) {
  switch (g) {
    case Group::kAligned: ++aligned; break;
    case Group::kConflict: ++conflict; break;
    case Group::kUnknown: ++unknown; break;
  }
}

CompositionReport validate_composition(const DatasetManifest& manifest) {
  CompositionReport r;
  r.train_per_class.resize(manifest.num_classes());
  r.test_per_class.resize(manifest.num_classes());
  r.declared_conflict_ratio = manifest.declared_conflict_ratio;
  for (const auto& s : manifest.samples) {
    const bool train = s.split == Split::kTrain;
    (train ? r.train : r.test).add(s.group);
    auto& per_class = train ? r.train_per_class : r.test_per_class;
    if (s.label >= 0 && static_cast<size_t>(s.label) < per_class.size()) {
      per_class[static_cast<size_t>(s.label)].add(s.group);
    }
  }
  const size_t known = r.train.aligned + r.train.conflict;
  if (known > 0) {
    r.realized_conflict_ratio = static_cast<double>(r.train.conflict) / static_cast<double>(known);
    const double expected = manifest.declared_conflict_ratio * static_cast<double>(known);
    r.ratio_matches_declared = std::abs(static_cast<double>(r.train.conflict) - expected) <= 1.0;
  }
  return r;
}

std::string format_composition(const CompositionReport& r,
                               const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "class\ttrain_aligned\ttrain_conflict\ttrain_unknown\ttest_aligned\ttest_conflict\ttest_unknown\n";
  for (size_t c = 0; c < r.train_per_class.size(); ++c) {
    const auto& tr = r.train_per_class[c];
    const auto& te = r.test_per_class[c];
    out << (c < class_names.size() ? class_names[c] : std::to_string(c)) << '\t' << tr.aligned
        << '\t' << tr.conflict << '\t' << tr.unknown << '\t' << te.aligned << '\t' << te.conflict
        << '\t' << te.unknown << '\n';
  }
  out << "total\t" << r.train.aligned << '\t' << r.train.conflict << '\t' << r.train.unknown
      << '\t' << r.test.aligned << '\t' << r.test.conflict << '\t' << r.test.unknown << '\n';
  out << "realized_conflict_ratio\t";
  if (r.realized_conflict_ratio) {
    out << *r.realized_conflict_ratio;
  } else {
    out << "n/a";
  }
  out << "\ndeclared_conflict_ratio\t" << r.declared_conflict_ratio << '\n';
  return out.str();
}

}  // namespace debias

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

#ifndef DEBIAS_EVAL_COMPARE_HPP_
#define DEBIAS_EVAL_COMPARE_HPP_

#include <string>
#include <utility>
#include <vector>

namespace debias {

// One row of a comparison: a run (or model) name and its metric strings.
struct RunRow {
  std::string name;
  std::vector<std::pair<std::string, std::string>> values;
};

struct ComparisonTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline constexpr const char* kAbsent = "NA";

// Columns: "run", every metric key in first-seen order, then (with two or more
// rows) "delta_<m>" for each of `delta_metrics`, relative to the first row.
// Metric cells are copied verbatim; missing ones read "NA". Throws
// ValidationError for an empty run list.
ComparisonTable compare_runs(const std::vector<RunRow>& runs,
                             const std::vector<std::string>& delta_metrics = {"overall_acc",
                                                                              "conflict_acc"});

std::string to_csv(const ComparisonTable& table);

// Static horizontal bar chart. Values are drawn against [0, max(values)].
std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, double>>& bars,
                          const std::string& unit);

}  // namespace debias

#endif  // DEBIAS_EVAL_COMPARE_HPP_

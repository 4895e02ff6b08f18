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

#include "debias/eval/compare.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <optional>

#include "debias/common/error.hpp"

namespace debias {
namespace {

std::optional<double> ParseNumber(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

const std::string* Find(const RunRow& row, const std::string& key) {
  for (const auto& [k, v] : row.values) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

}  // namespace

ComparisonTable compare_runs(const std::vector<RunRow>& runs,
                             const std::vector<std::string>& delta_metrics) {
  if (runs.empty()) throw ValidationError("compare_runs: no runs given");
  std::vector<std::string> keys;
  for (const auto& r : runs) {
    for (const auto& [k, v] : r.values) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  const bool deltas = runs.size() > 1;

  ComparisonTable t;
  t.columns.push_back("run");
  t.columns.insert(t.columns.end(), keys.begin(), keys.end());
  if (deltas) {
    for (const auto& m : delta_metrics) t.columns.push_back("delta_" + m);
  }
  for (const auto& r : runs) {
    std::vector<std::string> row{r.name};
    for (const auto& k : keys) {
      const std::string* v = Find(r, k);
      row.push_back(v != nullptr ? *v : kAbsent);
    }
    if (deltas) {
      for (const auto& m : delta_metrics) {
        const std::string* base = Find(runs.front(), m);
        const std::string* cur = Find(r, m);
        std::optional<double> a = base ? ParseNumber(*base) : std::nullopt;
        std::optional<double> b = cur ? ParseNumber(*cur) : std::nullopt;
        row.push_back(a && b ? Fmt("%+.6f", *b - *a) : kAbsent);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string to_csv(const ComparisonTable& table) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ",";
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out += cells[i];
        continue;
      }
      out += "\"";
      for (char c : cells[i]) out += c == '"' ? std::string("\"\"") : std::string(1, c);
      out += "\"";
    }
    return out + "\n";
  };
  std::string out = line(table.columns);
  for (const auto& r : table.rows) out += line(r);
  return out;
}

std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, double>>& bars,
                          const std::string& unit) {
  constexpr int kLabelW = 180, kBarW = 360, kRowH = 28, kTop = 40, kPad = 12;
  const int height = kTop + static_cast<int>(bars.size()) * kRowH + kPad;
  const int width = kLabelW + kBarW + 120;
  double max_v = 0.0;
  for (const auto& [_, v] : bars) max_v = std::max(max_v, v);

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kPad) + "\" y=\"24\" font-size=\"14\" font-weight=\"bold\">" +
         Escape(title) + "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& [label, v] = bars[i];
    const int y = kTop + static_cast<int>(i) * kRowH;
    const double w = max_v > 0 ? v / max_v * kBarW : 0.0;
    svg += "<text x=\"" + std::to_string(kLabelW - 8) + "\" y=\"" + std::to_string(y + 16) +
           "\" text-anchor=\"end\">" + Escape(label) + "</text>\n";
    svg += "<rect x=\"" + std::to_string(kLabelW) + "\" y=\"" + std::to_string(y + 4) + "\" width=\"" +
           Fmt("%.2f", w) + "\" height=\"" + std::to_string(kRowH - 8) + "\" fill=\"#4878a8\"/>\n";
    svg += "<text x=\"" + Fmt("%.2f", kLabelW + w + 6) + "\" y=\"" + std::to_string(y + 16) + "\">" +
           Fmt("%.4g", v) + " " + Escape(unit) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace debias

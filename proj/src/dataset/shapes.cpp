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

#include "debias/dataset/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>

#include "debias/common/error.hpp"
#include "debias/common/rng.hpp"

namespace debias {
namespace {

constexpr Rgb kBackground = {28, 28, 28};
constexpr int kColorJitter = 10;
constexpr int kForegroundThreshold = 48;
constexpr int kTemplateGrid = 24;

struct ShapeDef {
  const char* name;
  // Membership test in unit coordinates centered on the shape; v grows down.
  bool (*inside)(double u, double v);
  // Half extents of the shape's bounding box in unit coordinates.
  double half_w;
  double half_h;
};

const std::array<ShapeDef, 6>& Shapes() {
  static const std::array<ShapeDef, 6> kShapes = {{
      {"circle", [](double u, double v) { return u * u + v * v <= 1.0; }, 1.0, 1.0},
      {"square", [](double u, double v) { return std::abs(u) <= 0.85 && std::abs(v) <= 0.85; },
       0.85, 0.85},
      {"triangle",
       [](double u, double v) { return v >= -1.0 && v <= 1.0 && std::abs(u) <= (v + 1.0) / 2.0; },
       1.0, 1.0},
      {"cross",
       [](double u, double v) {
         const double au = std::abs(u), av = std::abs(v);
         return (au <= 0.32 && av <= 1.0) || (av <= 0.32 && au <= 1.0);
       },
       1.0, 1.0},
      {"diamond", [](double u, double v) { return std::abs(u) + std::abs(v) <= 1.0; }, 1.0, 1.0},
      {"ring",
       [](double u, double v) {
         const double r2 = u * u + v * v;
         return r2 <= 1.0 && r2 >= 0.36;
       },
       1.0, 1.0},
  }};
  return kShapes;
}

struct PaletteEntry {
  const char* name;
  Rgb rgb;
};

const std::array<PaletteEntry, 8>& Palette() {
  static const std::array<PaletteEntry, 8> kPalette = {{
      {"red", {220, 40, 40}},
      {"green", {40, 190, 60}},
      {"blue", {50, 90, 230}},
      {"yellow", {235, 215, 40}},
      {"purple", {160, 60, 200}},
      {"orange", {245, 140, 30}},
      {"cyan", {40, 210, 215}},
      {"white", {235, 235, 235}},
  }};
  return kPalette;
}

const ShapeDef& FindShape(std::string_view name) {
  for (const auto& s : Shapes()) {
    if (name == s.name) return s;
  }
  throw ValidationError("unknown shape '" + std::string(name) + "'");
}

using Mask = std::array<bool, kTemplateGrid * kTemplateGrid>;

Mask ShapeTemplate(const ShapeDef& shape) {
  Mask mask{};
  for (int j = 0; j < kTemplateGrid; ++j) {
    for (int i = 0; i < kTemplateGrid; ++i) {
      const double u = ((i + 0.5) / kTemplateGrid * 2.0 - 1.0) * shape.half_w;
      const double v = ((j + 0.5) / kTemplateGrid * 2.0 - 1.0) * shape.half_h;
      mask[j * kTemplateGrid + i] = shape.inside(u, v);
    }
  }
  return mask;
}

}  // namespace

const std::vector<std::string>& known_shapes() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : Shapes()) out.emplace_back(s.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& known_colors() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& p : Palette()) out.emplace_back(p.name);
    return out;
  }();
  return names;
}

bool is_known_shape(std::string_view name) {
  return std::ranges::find(known_shapes(), name) != known_shapes().end();
}

bool is_known_color(std::string_view name) {
  return std::ranges::find(known_colors(), name) != known_colors().end();
}

Rgb color_rgb(std::string_view name) {
  for (const auto& p : Palette()) {
    if (name == p.name) return p.rgb;
  }
  throw ValidationError("unknown color '" + std::string(name) + "'");
}

Image render_scene(const SceneAttributes& scene, int size, std::uint64_t seed) {
  if (size < 8) throw ValidationError("render_scene: image size must be at least 8");
  const ShapeDef& shape = FindShape(scene.shape);
  const Rgb base = color_rgb(scene.color);

  Rng rng(seed);
  const double radius = rng.uniform(0.28, 0.42) * size;
  const double margin = radius + 1.0;
  const double cx = rng.uniform(margin, size - margin);
  const double cy = rng.uniform(margin, size - margin);
  Rgb fill{};
  for (int c = 0; c < 3; ++c) {
    const int jitter = static_cast<int>(rng.below(2 * kColorJitter + 1)) - kColorJitter;
    fill[c] = static_cast<std::uint8_t>(std::clamp(base[c] + jitter, 0, 255));
  }

  Image image(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5 - cx) / radius;
      const double v = (y + 0.5 - cy) / radius;
      const Rgb& px = shape.inside(u, v) ? fill : kBackground;
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = px[c];
    }
  }
  return image;
}

std::optional<SceneAttributes> parse_scene(const Image& image) {
  if (image.empty() || image.channels < 3) return std::nullopt;
  const int w = image.width, h = image.height;

  // Background = mean border color.
  std::array<double, 3> bg{};
  int border = 0;
  for (int x = 0; x < w; ++x) {
    for (int y : {0, h - 1}) {
      for (int c = 0; c < 3; ++c) bg[c] += image.at(x, y, c);
      ++border;
    }
  }
  for (int y = 1; y < h - 1; ++y) {
    for (int x : {0, w - 1}) {
      for (int c = 0; c < 3; ++c) bg[c] += image.at(x, y, c);
      ++border;
    }
  }
  for (auto& v : bg) v /= border;

  std::vector<bool> fg(static_cast<size_t>(w) * h, false);
  std::array<double, 3> mean{};
  int count = 0;
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int diff = 0;
      for (int c = 0; c < 3; ++c) {
        diff = std::max(diff, static_cast<int>(std::abs(image.at(x, y, c) - bg[c])));
      }
      if (diff <= kForegroundThreshold) continue;
      fg[static_cast<size_t>(y) * w + x] = true;
      for (int c = 0; c < 3; ++c) mean[c] += image.at(x, y, c);
      ++count;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (count < 6) return std::nullopt;
  for (auto& v : mean) v /= count;

  SceneAttributes out;
  double best_color = std::numeric_limits<double>::infinity();
  for (const auto& p : Palette()) {
    double d = 0;
    for (int c = 0; c < 3; ++c) d += (mean[c] - p.rgb[c]) * (mean[c] - p.rgb[c]);
    if (d < best_color) {
      best_color = d;
      out.color = p.name;
    }
  }

  Mask observed{};
  const double bw = x1 - x0 + 1, bh = y1 - y0 + 1;
  for (int j = 0; j < kTemplateGrid; ++j) {
    for (int i = 0; i < kTemplateGrid; ++i) {
      const int x = x0 + std::min(static_cast<int>((i + 0.5) / kTemplateGrid * bw), x1 - x0);
      const int y = y0 + std::min(static_cast<int>((j + 0.5) / kTemplateGrid * bh), y1 - y0);
      observed[j * kTemplateGrid + i] = fg[static_cast<size_t>(y) * w + x];
    }
  }
  double best_iou = -1;
  for (const auto& s : Shapes()) {
    const Mask tmpl = ShapeTemplate(s);
    int inter = 0, uni = 0;
    for (size_t k = 0; k < tmpl.size(); ++k) {
      inter += tmpl[k] && observed[k];
      uni += tmpl[k] || observed[k];
    }
    const double iou = uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
    if (iou > best_iou) {
      best_iou = iou;
      out.shape = s.name;
    }
  }
  return out;
}

}  // namespace debias

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

#ifndef DEBIAS_DATASET_SHAPES_HPP_
#define DEBIAS_DATASET_SHAPES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debias/common/image.hpp"

namespace debias {

// Ground-truth attributes of a synthetic scene: the intrinsic attribute
// (shape, which defines the class) and the bias attribute (fill color).
struct SceneAttributes {
  std::string shape;
  std::string color;

  friend bool operator==(const SceneAttributes&, const SceneAttributes&) = default;
};

using Rgb = std::array<std::uint8_t, 3>;

const std::vector<std::string>& known_shapes();
const std::vector<std::string>& known_colors();
bool is_known_shape(std::string_view name);
bool is_known_color(std::string_view name);
Rgb color_rgb(std::string_view name);

// Flat background, one filled shape. Position, scale and a small color
// perturbation are jittered from `seed`.
Image render_scene(const SceneAttributes& scene, int size, std::uint64_t seed);

// Recovers (shape, color) from a rendered scene: foreground pixels are those
// far from the border color; color is the nearest palette entry to the mean
// foreground pixel; shape is the template with the best mask overlap inside
// the foreground bounding box. Empty when no foreground is found.
std::optional<SceneAttributes> parse_scene(const Image& image);

}  // namespace debias

#endif  // DEBIAS_DATASET_SHAPES_HPP_

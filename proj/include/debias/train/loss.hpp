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

#ifndef DEBIAS_TRAIN_LOSS_HPP_
#define DEBIAS_TRAIN_LOSS_HPP_

#include <span>
#include <string_view>
#include <vector>

namespace debias {

enum class LossMode { kCE, kGCE };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);

// Probabilities are clamped to this floor before any loss evaluation inside
// training and scoring.
inline constexpr double kProbFloor = 1e-12;

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Generalized cross-entropy (1 - p_y^q) / q.
//
// At q = 1 this is exactly 1 - p_y. As q -> 0 it tends to -ln p_y, the
// cross-entropy. Its parameter gradient is p_y^q times the cross-entropy
// gradient, so confidently-classified (easy) samples dominate the update.
//
// Throws DomainError when probs[target] is 0 (the gradient is unbounded there)
// and std::invalid_argument when q is outside (0, 1] or target is out of range.
double gce_loss(std::span<const double> probs, int target, double q);

// -ln p_y. Same error contract as gce_loss.
double ce_loss(std::span<const double> probs, int target);

// Loss and its gradient with respect to the logits, for one sample. The
// gradient is p_y^q * (p - onehot(y)) under GCE and (p - onehot(y)) under CE.
// p_y is clamped at kProbFloor.
struct LogitLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
  std::vector<double> probs;
};
LogitLoss loss_from_logits(std::span<const double> logits, int target, LossMode mode, double q);

}  // namespace debias

#endif  // DEBIAS_TRAIN_LOSS_HPP_

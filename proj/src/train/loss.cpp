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

#include "debias/train/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "debias/common/error.hpp"

namespace debias {
namespace {

void CheckTarget(std::span<const double> probs, int target) {
  if (target < 0 || static_cast<size_t>(target) >= probs.size()) {
    throw std::invalid_argument("target class " + std::to_string(target) + " out of range");
  }
  const double p = probs[static_cast<size_t>(target)];
  if (!(p > 0.0)) throw DomainError("p_y = 0: loss gradient is unbounded");
  if (p > 1.0 + 1e-12) throw DomainError("p_y > 1 is not a probability");
}

void CheckQ(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q must lie in (0, 1], got " + std::to_string(q));
  }
}

// (1 - p^q) / q written as -expm1(q ln p) / q, which is exact to rounding for
// every q in (0, 1] including the q -> 0 regime.
double GceValue(double p, double q) { return -std::expm1(q * std::log(p)) / q; }

}  // namespace

std::string_view to_string(LossMode mode) { return mode == LossMode::kCE ? "ce" : "gce"; }

LossMode parse_loss_mode(std::string_view text) {
  if (text == "ce" || text == "CE") return LossMode::kCE;
  if (text == "gce" || text == "GCE") return LossMode::kGCE;
  throw ValidationError("unknown loss mode '" + std::string(text) + "'");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

double gce_loss(std::span<const double> probs, int target, double q) {
  CheckQ(q);
  CheckTarget(probs, target);
  const double p = std::min(1.0, probs[static_cast<size_t>(target)]);
  if (q == 1.0) return 1.0 - p;
  return GceValue(p, q);
}

double ce_loss(std::span<const double> probs, int target) {
  CheckTarget(probs, target);
  return -std::log(std::min(1.0, probs[static_cast<size_t>(target)]));
}

LogitLoss loss_from_logits(std::span<const double> logits, int target, LossMode mode, double q) {
  LogitLoss out;
  out.probs = softmax(logits);
  const size_t y = static_cast<size_t>(target);
  const double p = std::max(out.probs[y], kProbFloor);
  double scale = 1.0;
  if (mode == LossMode::kCE) {
    out.loss = -std::log(p);
  } else {
    CheckQ(q);
    out.loss = q == 1.0 ? 1.0 - p : GceValue(p, q);
    scale = std::pow(p, q);
  }
  out.grad.resize(out.probs.size());
  for (size_t k = 0; k < out.probs.size(); ++k) {
    out.grad[k] = scale * (out.probs[k] - (k == y ? 1.0 : 0.0));
  }
  return out;
}

}  // namespace debias

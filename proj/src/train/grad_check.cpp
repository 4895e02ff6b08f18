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

#include "debias/train/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "debias/common/error.hpp"
#include "debias/train/loss.hpp"

namespace debias {

std::vector<double> parameter_gradient(const DifferentiableClassifier& model,
                                       const LabeledVector& sample, bool gce, double q) {
  std::vector<double> grad(model.parameters().size(), 0.0);
  const LossMode mode = gce ? LossMode::kGCE : LossMode::kCE;
  model.backprop(
      sample.input,
      [&](std::span<const double> z) { return loss_from_logits(z, sample.label, mode, q).grad; },
      grad);
  return grad;
}

GradCheckResult gce_grad_check(DifferentiableClassifier& model, std::span<const LabeledVector> batch,
                               double q, const GradCheckOptions& options) {
  if (!model.smooth()) {
    throw ValidationError("gce_grad_check: non-differentiable model configuration ('" +
                          model.architecture_id() + "')");
  }
  GradCheckResult result;
  std::span<double> theta = model.parameters();
  for (const auto& sample : batch) {
    const auto probs = softmax(model.logits(sample.input));
    const double p_y = probs.at(static_cast<size_t>(sample.label));
    const double scale = std::pow(p_y, q);
    const auto ce_grad = parameter_gradient(model, sample, /*gce=*/false, q);

    for (size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      theta[k] = saved + options.step;
      const double up = gce_loss(softmax(model.logits(sample.input)), sample.label, q);
      theta[k] = saved - options.step;
      const double down = gce_loss(softmax(model.logits(sample.input)), sample.label, q);
      theta[k] = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double predicted = scale * ce_grad[k];
      const double denom =
          std::max({std::abs(numeric), std::abs(predicted), options.magnitude_floor});
      result.max_relative_deviation =
          std::max(result.max_relative_deviation, std::abs(numeric - predicted) / denom);
      ++result.components_checked;
    }
  }
  return result;
}

}  // namespace debias

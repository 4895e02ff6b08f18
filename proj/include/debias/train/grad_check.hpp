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

#ifndef DEBIAS_TRAIN_GRAD_CHECK_HPP_
#define DEBIAS_TRAIN_GRAD_CHECK_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "debias/train/model.hpp"

namespace debias {

struct LabeledVector {
  std::vector<double> input;
  int label = 0;
};

struct GradCheckOptions {
  double step = 1e-6;  // central-difference step
  // Components smaller than this are compared on an absolute scale:
  // deviation = |a - b| / max(|a|, |b|, magnitude_floor).
  double magnitude_floor = 1e-4;
};

struct GradCheckResult {
  double max_relative_deviation = 0.0;
  std::size_t components_checked = 0;
};

// Per sample, compares the GCE parameter gradient obtained by central finite
// differences of the GCE loss against p_y^q times the back-propagated CE
// gradient, and returns the worst relative deviation over the batch and all
// parameters. Throws ValidationError for models that are not smooth.
GradCheckResult gce_grad_check(DifferentiableClassifier& model, std::span<const LabeledVector> batch,
                               double q, const GradCheckOptions& options = {});

// Per-sample parameter gradients of the loss selected by (mode, q), via
// back-propagation.
std::vector<double> parameter_gradient(const DifferentiableClassifier& model,
                                       const LabeledVector& sample, bool gce, double q);

}  // namespace debias

#endif  // DEBIAS_TRAIN_GRAD_CHECK_HPP_

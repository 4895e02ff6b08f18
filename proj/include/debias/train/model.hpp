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

#ifndef DEBIAS_TRAIN_MODEL_HPP_
#define DEBIAS_TRAIN_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace debias {

// Named slice of a model's flat parameter vector.
struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Maps d loss / d logits for a forward pass to the upstream gradient.
using LogitGradFn = std::function<std::vector<double>(std::span<const double> logits)>;

// A classifier over flat double inputs whose parameters live in one
// contiguous vector, with per-sample reverse-mode gradients.
class DifferentiableClassifier {
 public:
  virtual ~DifferentiableClassifier() = default;

  virtual std::string architecture_id() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t feature_dim() const = 0;
  // False when the network contains kinks (ReLU, max-pool) that make finite
  // difference gradient checks ill-posed.
  virtual bool smooth() const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;
  virtual std::vector<ParamBlock> param_blocks() const = 0;

  virtual std::vector<double> logits(std::span<const double> input) const = 0;
  // Penultimate activations.
  virtual std::vector<double> features(std::span<const double> input) const = 0;

  // Forward pass, then accumulates d loss / d params into `grad` given
  // dloss(logits). Returns the logits.
  virtual std::vector<double> backprop(std::span<const double> input, const LogitGradFn& dloss,
                                       std::span<double> grad) const = 0;

  virtual std::unique_ptr<DifferentiableClassifier> clone() const = 0;
};

// Multinomial logistic regression.
class LogisticModel final : public DifferentiableClassifier {
 public:
  LogisticModel(std::size_t input_dim, std::size_t num_classes, std::uint64_t seed);

  std::string architecture_id() const override { return "logistic"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t num_classes() const override { return num_classes_; }
  std::size_t feature_dim() const override { return input_dim_; }
  bool smooth() const override { return true; }
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::vector<ParamBlock> param_blocks() const override;
  std::vector<double> logits(std::span<const double> input) const override;
  std::vector<double> features(std::span<const double> input) const override;
  std::vector<double> backprop(std::span<const double> input, const LogitGradFn& dloss,
                               std::span<double> grad) const override;
  std::unique_ptr<DifferentiableClassifier> clone() const override;

 private:
  std::size_t input_dim_;
  std::size_t num_classes_;
  std::vector<double> params_;  // W [K x D] then b [K]
};

// One tanh hidden layer.
class TanhMlp final : public DifferentiableClassifier {
 public:
  TanhMlp(std::size_t input_dim, std::size_t hidden, std::size_t num_classes, std::uint64_t seed);

  std::string architecture_id() const override { return "tanh-mlp"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t num_classes() const override { return num_classes_; }
  std::size_t feature_dim() const override { return hidden_; }
  bool smooth() const override { return true; }
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::vector<ParamBlock> param_blocks() const override;
  std::vector<double> logits(std::span<const double> input) const override;
  std::vector<double> features(std::span<const double> input) const override;
  std::vector<double> backprop(std::span<const double> input, const LogitGradFn& dloss,
                               std::span<double> grad) const override;
  std::unique_ptr<DifferentiableClassifier> clone() const override;

 private:
  std::size_t input_dim_;
  std::size_t hidden_;
  std::size_t num_classes_;
  std::vector<double> params_;  // W1 [H x D], b1 [H], W2 [K x H], b2 [K]
};

struct ConvNetShape {
  int input_size = 16;  // must be divisible by 8
  int channels = 3;
  int conv1 = 8;
  int conv2 = 16;
  int conv3 = 16;
  int hidden = 32;
  int num_classes = 4;

  friend bool operator==(const ConvNetShape&, const ConvNetShape&) = default;
};

// Three conv3x3(pad 1) + ReLU + maxpool2 blocks, then a ReLU hidden layer
// (the penultimate features) and a linear classifier head. Inputs are CHW.
class ConvNet final : public DifferentiableClassifier {
 public:
  static constexpr const char* kArchitectureId = "tiny-conv3";

  ConvNet(const ConvNetShape& shape, std::uint64_t seed);
  // Restores a network from a flat parameter vector (checkpoint reload).
  ConvNet(const ConvNetShape& shape, std::vector<double> params);

  const ConvNetShape& shape() const { return shape_; }

  std::string architecture_id() const override { return kArchitectureId; }
  std::size_t input_dim() const override;
  std::size_t num_classes() const override { return static_cast<std::size_t>(shape_.num_classes); }
  std::size_t feature_dim() const override { return static_cast<std::size_t>(shape_.hidden); }
  bool smooth() const override { return false; }
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::vector<ParamBlock> param_blocks() const override { return blocks_; }
  std::vector<double> logits(std::span<const double> input) const override;
  std::vector<double> features(std::span<const double> input) const override;
  std::vector<double> backprop(std::span<const double> input, const LogitGradFn& dloss,
                               std::span<double> grad) const override;
  std::unique_ptr<DifferentiableClassifier> clone() const override;

 private:
  struct Trace;
  void forward(std::span<const double> input, Trace& trace) const;

  ConvNetShape shape_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
};

std::vector<ParamBlock> conv_net_blocks(const ConvNetShape& shape);

}  // namespace debias

#endif  // DEBIAS_TRAIN_MODEL_HPP_

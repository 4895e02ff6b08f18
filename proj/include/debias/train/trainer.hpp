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

#ifndef DEBIAS_TRAIN_TRAINER_HPP_
#define DEBIAS_TRAIN_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "debias/common/image.hpp"
#include "debias/dataset/manifest.hpp"
#include "debias/train/loss.hpp"
#include "debias/train/model.hpp"

namespace debias {

enum class Augmentation { kRandomCrop, kHorizontalFlip };

struct LrDecay {
  double factor = 0.1;
  int every_n_epochs = 20;
};

struct ClassifierConfig {
  std::string architecture_id = ConvNet::kArchitectureId;
  int input_size = 16;
  int epochs = 50;
  std::size_t batch_size = 64;
  double base_lr = 0.05;
  LrDecay lr_decay;
  LossMode loss_mode = LossMode::kCE;
  double q = 0.7;
  // Start from `init_checkpoint` instead of a seeded random initialization.
  bool pretrained = false;
  std::string init_checkpoint;
  std::uint64_t seed = 0;
  std::vector<Augmentation> augmentations;
  double momentum = 0.9;
  double weight_decay = 0.0;

  // Throws ValidationError on q outside (0, 1], epochs < 1, decay factor
  // outside (0, 1], and other malformed fields.
  void validate() const;
  double learning_rate(int epoch) const;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

enum class ModelRole { kVanilla, kBiased, kDebiased };
std::string_view to_string(ModelRole role);
ModelRole parse_model_role(std::string_view text);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double train_accuracy = 0.0;
  double wall_time_s = 0.0;
};

// Anything that maps a CHW input tensor to class probabilities. Evaluation
// and loss scoring only need this surface.
class ImageClassifier {
 public:
  virtual ~ImageClassifier() = default;
  virtual int input_size() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> probabilities(std::span<const double> input) const = 0;
  // Activations of a named layer ("penultimate" or "logits"). Throws
  // ValidationError for unknown layers.
  virtual std::vector<double> embedding(std::span<const double> input, std::string_view layer) const;
  // Content hash identifying the weights, recorded in exported files.
  virtual std::string model_hash() const { return {}; }
};

class TrainedModel final : public ImageClassifier {
 public:
  TrainedModel(ConvNet net, ClassifierConfig config, ModelRole role)
      : net_(std::move(net)), config_(std::move(config)), role_(role) {}

  const ConvNet& net() const { return net_; }
  const ClassifierConfig& config() const { return config_; }
  ModelRole role() const { return role_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  std::vector<EpochRecord>& mutable_history() { return history_; }
  const std::filesystem::path& weights_ref() const { return weights_ref_; }
  void set_weights_ref(std::filesystem::path p) { weights_ref_ = std::move(p); }

  int input_size() const override { return net_.shape().input_size; }
  std::size_t num_classes() const override { return net_.num_classes(); }
  std::vector<double> probabilities(std::span<const double> input) const override;
  std::vector<double> embedding(std::span<const double> input, std::string_view layer) const override;
  std::string model_hash() const override;

 private:
  ConvNet net_;
  ClassifierConfig config_;
  ModelRole role_;
  std::vector<EpochRecord> history_;
  std::filesystem::path weights_ref_;
};

// Resizes to input_size x input_size and maps 8-bit RGB to CHW in [-0.5, 0.5].
std::vector<double> image_to_tensor(const Image& image, int input_size);

struct SampleFailure {
  std::string id;
  std::string reason;
};

struct TrainingOptions {
  // Fixed reduction order, independent of the worker count. Data order and
  // initialization are always a pure function of (seed, epoch).
  bool deterministic = false;
  std::size_t workers = 1;
  // When set, one JSON record per epoch (epoch, mean_loss, lr, wall_time_s).
  std::filesystem::path log_path;
};

// Throws ValidationError for an empty train split, invalid config, or image
// decode failures (all failing ids are listed).
TrainedModel train(const DatasetManifest& manifest, const ClassifierConfig& config, ModelRole role,
                   const TrainingOptions& options = {});

struct ScoredLosses {
  std::vector<std::pair<std::string, double>> entries;  // manifest order
  std::vector<SampleFailure> failures;
};

// Loss of every train sample in evaluation mode (no augmentation, no updates).
// Samples that fail to load are reported and skipped.
ScoredLosses per_sample_losses(const ImageClassifier& model, const DatasetManifest& manifest,
                               LossMode mode, double q = 0.7, std::size_t workers = 1);

// Binary checkpoint: magic, version, architecture id, JSON metadata (config,
// shape, role, history), then the named parameter table as little-endian
// doubles.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_TRAIN_TRAINER_HPP_

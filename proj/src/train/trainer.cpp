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

#include "debias/train/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"
#include "debias/common/parallel.hpp"
#include "debias/common/rng.hpp"

namespace debias {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kCheckpointMagic[8] = {'D', 'B', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::string_view AugName(Augmentation a) {
  return a == Augmentation::kRandomCrop ? "random_crop" : "horizontal_flip";
}

Augmentation ParseAug(std::string_view s) {
  if (s == "random_crop") return Augmentation::kRandomCrop;
  if (s == "horizontal_flip") return Augmentation::kHorizontalFlip;
  throw ValidationError("unknown augmentation '" + std::string(s) + "'");
}

struct LoadedSplit {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  std::vector<SampleFailure> failures;
};

LoadedSplit LoadSplit(const DatasetManifest& manifest, Split split, int input_size,
                      std::size_t workers) {
  std::vector<const AttributedSample*> picked;
  for (const auto& s : manifest.samples) {
    if (s.split == split) picked.push_back(&s);
  }
  std::vector<std::optional<std::vector<double>>> tensors(picked.size());
  std::vector<std::string> errors(picked.size());
  parallel_for(picked.size(), workers, [&](std::size_t i) {
    try {
      tensors[i] = image_to_tensor(read_png(manifest.image_path(*picked[i])), input_size);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  LoadedSplit out;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    if (!tensors[i]) {
      out.failures.push_back({picked[i]->id, errors[i]});
      continue;
    }
    out.ids.push_back(picked[i]->id);
    out.inputs.push_back(std::move(*tensors[i]));
    out.labels.push_back(picked[i]->label);
  }
  return out;
}

// Shift by up to 2 pixels (edge-replicated) and/or mirror horizontally.
std::vector<double> Augment(const std::vector<double>& input, int channels, int size,
                            const std::vector<Augmentation>& augs, Rng& rng) {
  int dx = 0, dy = 0;
  bool flip = false;
  for (auto a : augs) {
    if (a == Augmentation::kRandomCrop) {
      dx = static_cast<int>(rng.below(5)) - 2;
      dy = static_cast<int>(rng.below(5)) - 2;
    } else {
      flip = rng.uniform() < 0.5;
    }
  }
  if (dx == 0 && dy == 0 && !flip) return input;
  std::vector<double> out(input.size());
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < size; ++y) {
      const int sy = std::clamp(y + dy, 0, size - 1);
      for (int x = 0; x < size; ++x) {
        int sx = std::clamp(x + dx, 0, size - 1);
        if (flip) sx = size - 1 - sx;
        out[(static_cast<std::size_t>(c) * size + y) * size + x] =
            input[(static_cast<std::size_t>(c) * size + sy) * size + sx];
      }
    }
  }
  return out;
}

struct ChunkResult {
  std::vector<double> grad;
  double loss = 0.0;
  std::size_t correct = 0;
};

Json HistoryToJson(const std::vector<EpochRecord>& history) {
  Json arr = Json::array();
  for (const auto& h : history) {
    arr.push_back({{"epoch", h.epoch},
                   {"mean_loss", h.mean_loss},
                   {"lr", h.lr},
                   {"train_accuracy", h.train_accuracy},
                   {"wall_time_s", h.wall_time_s}});
  }
  return arr;
}

template <typename T>
void WriteRaw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& in, const fs::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError(path.string() + ": truncated checkpoint");
  return v;
}

void WriteString(std::ostream& out, const std::string& s) {
  WriteRaw(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream& in, const fs::path& path) {
  const auto n = ReadRaw<std::uint32_t>(in, path);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw ValidationError(path.string() + ": truncated checkpoint");
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// ClassifierConfig

void ClassifierConfig::validate() const {
  if (architecture_id != ConvNet::kArchitectureId) {
    throw ValidationError("unknown architecture '" + architecture_id + "'");
  }
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("classifier config: q must lie in (0, 1]");
  if (epochs < 1) throw ValidationError("classifier config: epochs must be >= 1");
  if (!(lr_decay.factor > 0.0 && lr_decay.factor <= 1.0)) {
    throw ValidationError("classifier config: decay factor must lie in (0, 1]");
  }
  if (lr_decay.every_n_epochs < 1) {
    throw ValidationError("classifier config: decay interval must be >= 1 epoch");
  }
  if (batch_size == 0) throw ValidationError("classifier config: batch_size must be positive");
  if (!(base_lr > 0.0)) throw ValidationError("classifier config: base_lr must be positive");
  if (input_size <= 0 || input_size % 8 != 0) {
    throw ValidationError("classifier config: input_size must be a positive multiple of 8");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ValidationError("classifier config: momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw ValidationError("classifier config: negative weight_decay");
  if (pretrained && init_checkpoint.empty()) {
    throw ValidationError("classifier config: pretrained requires init_checkpoint");
  }
}

double ClassifierConfig::learning_rate(int epoch) const {
  return base_lr * std::pow(lr_decay.factor, epoch / lr_decay.every_n_epochs);
}

void to_json(nlohmann::json& j, const ClassifierConfig& c) {
  Json augs = Json::array();
  for (auto a : c.augmentations) augs.push_back(AugName(a));
  j = Json{{"architecture_id", c.architecture_id},
           {"input_size", c.input_size},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"base_lr", c.base_lr},
           {"lr_decay", {{"factor", c.lr_decay.factor}, {"every_n_epochs", c.lr_decay.every_n_epochs}}},
           {"loss_mode", to_string(c.loss_mode)},
           {"q", c.q},
           {"pretrained", c.pretrained},
           {"init_checkpoint", c.init_checkpoint},
           {"seed", c.seed},
           {"augmentations", augs},
           {"momentum", c.momentum},
           {"weight_decay", c.weight_decay}};
}

void from_json(const nlohmann::json& j, ClassifierConfig& c) {
  const ClassifierConfig d;
  c.architecture_id = j.value("architecture_id", d.architecture_id);
  c.input_size = j.value("input_size", d.input_size);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.base_lr = j.value("base_lr", d.base_lr);
  if (j.contains("lr_decay")) {
    c.lr_decay.factor = j["lr_decay"].value("factor", d.lr_decay.factor);
    c.lr_decay.every_n_epochs = j["lr_decay"].value("every_n_epochs", d.lr_decay.every_n_epochs);
  }
  c.loss_mode = parse_loss_mode(j.value("loss_mode", std::string(to_string(d.loss_mode))));
  c.q = j.value("q", d.q);
  c.pretrained = j.value("pretrained", d.pretrained);
  c.init_checkpoint = j.value("init_checkpoint", d.init_checkpoint);
  c.seed = j.value("seed", d.seed);
  c.augmentations.clear();
  for (const auto& a : j.value("augmentations", Json::array())) {
    c.augmentations.push_back(ParseAug(a.get<std::string>()));
  }
  c.momentum = j.value("momentum", d.momentum);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
}

std::string_view to_string(ModelRole role) {
  switch (role) {
    case ModelRole::kVanilla: return "vanilla";
    case ModelRole::kBiased: return "biased";
    case ModelRole::kDebiased: return "debiased";
  }
  return "vanilla";
}

ModelRole parse_model_role(std::string_view text) {
  if (text == "vanilla") return ModelRole::kVanilla;
  if (text == "biased") return ModelRole::kBiased;
  if (text == "debiased") return ModelRole::kDebiased;
  throw ValidationError("unknown model role '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Classifier surfaces

std::vector<double> ImageClassifier::embedding(std::span<const double> input,
                                               std::string_view layer) const {
  if (layer == "logits" || layer == "probabilities") return probabilities(input);
  throw ValidationError("layer '" + std::string(layer) + "' not found");
}

std::vector<double> TrainedModel::probabilities(std::span<const double> input) const {
  return softmax(net_.logits(input));
}

std::vector<double> TrainedModel::embedding(std::span<const double> input,
                                            std::string_view layer) const {
  if (layer == "penultimate") return net_.features(input);
  if (layer == "logits") return net_.logits(input);
  throw ValidationError("layer '" + std::string(layer) + "' not found");
}

std::string TrainedModel::model_hash() const {
  const auto p = net_.parameters();
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double)));
}

std::vector<double> image_to_tensor(const Image& image, int input_size) {
  const Image resized = resize_area(image, input_size, input_size);
  const auto plane = static_cast<std::size_t>(input_size) * input_size;
  std::vector<double> out(3 * plane);
  for (int y = 0; y < input_size; ++y) {
    for (int x = 0; x < input_size; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src_c = std::min(c, resized.channels - 1);
        out[c * plane + static_cast<std::size_t>(y) * input_size + x] =
            resized.at(x, y, src_c) / 255.0 - 0.5;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const DatasetManifest& manifest, const ClassifierConfig& config, ModelRole role,
                   const TrainingOptions& options) {
  config.validate();
  const LoadedSplit data = LoadSplit(manifest, Split::kTrain, config.input_size, options.workers);
  if (!data.failures.empty()) {
    std::string msg = "image decode failures:";
    for (const auto& f : data.failures) msg += " '" + f.id + "' (" + f.reason + ")";
    throw ValidationError(msg);
  }
  if (data.inputs.empty()) throw ValidationError("train: manifest has an empty train split");

  ConvNetShape shape;
  shape.input_size = config.input_size;
  shape.num_classes = static_cast<int>(manifest.num_classes());
  ConvNet net(shape, derive_seed(config.seed, "init"));
  if (config.pretrained) {
    const TrainedModel init = load_checkpoint(config.init_checkpoint);
    if (!(init.net().shape() == shape)) {
      throw ValidationError("init_checkpoint shape does not match the classifier config");
    }
    net = init.net();
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    if (options.log_path.has_parent_path()) fs::create_directories(options.log_path.parent_path());
    log.open(options.log_path, std::ios::trunc);
  }

  const std::size_t n = data.inputs.size();
  const std::size_t n_params = net.parameters().size();
  std::vector<double> velocity(n_params, 0.0);
  std::vector<EpochRecord> history;
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  constexpr std::size_t kDeterministicChunks = 8;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = config.learning_rate(epoch);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(derive_seed(config.seed, "epoch:" + std::to_string(epoch)));
    shuffler.shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::size_t batch = end - start;
      // Fixed partition in deterministic mode.
      const std::size_t chunks = std::min(options.deterministic ? kDeterministicChunks : workers, batch);

      std::vector<ChunkResult> partial(chunks);
      ChunkResult total{std::vector<double>(n_params, 0.0)};
      std::mutex total_mu;
      parallel_for(chunks, workers, [&](std::size_t c) {
        ChunkResult r{std::vector<double>(n_params, 0.0)};
        for (std::size_t b = start + c; b < end; b += chunks) {
          const std::size_t idx = order[b];
          Rng aug_rng(derive_seed(config.seed, "aug:" + std::to_string(epoch) + ":" + std::to_string(idx)));
          const auto input = config.augmentations.empty()
                                 ? data.inputs[idx]
                                 : Augment(data.inputs[idx], shape.channels, shape.input_size,
                                           config.augmentations, aug_rng);
          const int y = data.labels[idx];
          net.backprop(
              input,
              [&](std::span<const double> z) {
                LogitLoss l = loss_from_logits(z, y, config.loss_mode, config.q);
                r.loss += l.loss;
                const auto pred = std::max_element(l.probs.begin(), l.probs.end()) - l.probs.begin();
                if (pred == y) ++r.correct;
                return std::move(l.grad);
              },
              r.grad);
        }
        if (options.deterministic) {
          partial[c] = std::move(r);
        } else {
          // Arrival-order reduction.
          std::lock_guard lock(total_mu);
          for (std::size_t k = 0; k < n_params; ++k) total.grad[k] += r.grad[k];
          total.loss += r.loss;
          total.correct += r.correct;
        }
      });
      if (options.deterministic) {
        for (const auto& r : partial) {
          for (std::size_t k = 0; k < n_params; ++k) total.grad[k] += r.grad[k];
          total.loss += r.loss;
          total.correct += r.correct;
        }
      }

      std::span<double> theta = net.parameters();
      const double inv = 1.0 / static_cast<double>(batch);
      for (std::size_t k = 0; k < n_params; ++k) {
        const double g = total.grad[k] * inv + config.weight_decay * theta[k];
        velocity[k] = config.momentum * velocity[k] + g;
        theta[k] -= lr * velocity[k];
      }
      epoch_loss += total.loss;
      epoch_correct += total.correct;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = epoch_loss / static_cast<double>(n);
    rec.lr = lr;
    rec.train_accuracy = static_cast<double>(epoch_correct) / static_cast<double>(n);
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.push_back(rec);
    if (log.is_open()) {
      log << Json{{"epoch", rec.epoch}, {"mean_loss", rec.mean_loss}, {"lr", rec.lr},
                  {"wall_time_s", rec.wall_time_s}}
                 .dump()
          << '\n';
    }
  }

  TrainedModel model(std::move(net), config, role);
  model.mutable_history() = std::move(history);
  return model;
}

ScoredLosses per_sample_losses(const ImageClassifier& model, const DatasetManifest& manifest,
                               LossMode mode, double q, std::size_t workers) {
  std::vector<const AttributedSample*> picked;
  std::unordered_map<std::string, int> seen;
  for (const auto& s : manifest.samples) {
    if (s.split != Split::kTrain) continue;
    if (seen[s.id]++ > 0) throw ValidationError("per_sample_losses: id collision on '" + s.id + "'");
    picked.push_back(&s);
  }
  std::vector<std::optional<double>> losses(picked.size());
  std::vector<std::string> errors(picked.size());
  parallel_for(picked.size(), workers, [&](std::size_t i) {
    try {
      const auto input = image_to_tensor(read_png(manifest.image_path(*picked[i])), model.input_size());
      auto probs = model.probabilities(input);
      const auto y = static_cast<std::size_t>(picked[i]->label);
      if (y >= probs.size()) throw ValidationError("label outside the model's classes");
      probs[y] = std::max(probs[y], kProbFloor);
      losses[i] = mode == LossMode::kCE ? ce_loss(probs, picked[i]->label)
                                        : gce_loss(probs, picked[i]->label, q);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  ScoredLosses out;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    if (losses[i]) {
      out.entries.emplace_back(picked[i]->id, *losses[i]);
    } else {
      out.failures.push_back({picked[i]->id, errors[i]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const TrainedModel& model, const fs::path& path) {
  Json meta;
  meta["config"] = model.config();
  const auto& s = model.net().shape();
  meta["shape"] = {{"input_size", s.input_size}, {"channels", s.channels}, {"conv1", s.conv1},
                   {"conv2", s.conv2},           {"conv3", s.conv3},     {"hidden", s.hidden},
                   {"num_classes", s.num_classes}};
  meta["role"] = to_string(model.role());
  meta["history"] = HistoryToJson(model.history());

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    WriteRaw(out, kCheckpointVersion);
    WriteString(out, model.net().architecture_id());
    WriteString(out, meta.dump());
    const auto blocks = model.net().param_blocks();
    const auto params = model.net().parameters();
    WriteRaw(out, static_cast<std::uint32_t>(blocks.size()));
    for (const auto& b : blocks) {
      WriteString(out, b.name);
      WriteRaw(out, static_cast<std::uint32_t>(b.shape.size()));
      for (auto d : b.shape) WriteRaw(out, static_cast<std::uint64_t>(d));
      WriteRaw(out, static_cast<std::uint64_t>(b.size));
      out.write(reinterpret_cast<const char*>(params.data() + b.offset),
                static_cast<std::streamsize>(b.size * sizeof(double)));
    }
  }
  fs::rename(tmp, path);
}

TrainedModel load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing checkpoint '" + path.string() + "'");
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ValidationError(path.string() + ": not a checkpoint file");
  }
  if (ReadRaw<std::uint32_t>(in, path) != kCheckpointVersion) {
    throw ValidationError(path.string() + ": unsupported checkpoint version");
  }
  const std::string arch = ReadString(in, path);
  if (arch != ConvNet::kArchitectureId) {
    throw ValidationError(path.string() + ": unknown architecture '" + arch + "'");
  }
  const Json meta = Json::parse(ReadString(in, path));
  ConvNetShape shape;
  const Json& sj = meta.at("shape");
  shape.input_size = sj.at("input_size");
  shape.channels = sj.at("channels");
  shape.conv1 = sj.at("conv1");
  shape.conv2 = sj.at("conv2");
  shape.conv3 = sj.at("conv3");
  shape.hidden = sj.at("hidden");
  shape.num_classes = sj.at("num_classes");

  const auto expected = conv_net_blocks(shape);
  const auto n_blocks = ReadRaw<std::uint32_t>(in, path);
  if (n_blocks != expected.size()) throw ValidationError(path.string() + ": parameter table mismatch");
  std::vector<double> params(expected.back().offset + expected.back().size);
  for (const auto& b : expected) {
    if (ReadString(in, path) != b.name) {
      throw ValidationError(path.string() + ": expected parameter '" + b.name + "'");
    }
    const auto rank = ReadRaw<std::uint32_t>(in, path);
    if (rank != b.shape.size()) throw ValidationError(path.string() + ": bad rank for " + b.name);
    for (auto d : b.shape) {
      if (ReadRaw<std::uint64_t>(in, path) != d) {
        throw ValidationError(path.string() + ": bad shape for " + b.name);
      }
    }
    if (ReadRaw<std::uint64_t>(in, path) != b.size) {
      throw ValidationError(path.string() + ": bad size for " + b.name);
    }
    in.read(reinterpret_cast<char*>(params.data() + b.offset),
            static_cast<std::streamsize>(b.size * sizeof(double)));
    if (!in) throw ValidationError(path.string() + ": truncated checkpoint");
  }

  TrainedModel model(ConvNet(shape, std::move(params)), meta.at("config").get<ClassifierConfig>(),
                     parse_model_role(meta.at("role").get<std::string>()));
  for (const auto& h : meta.at("history")) {
    model.mutable_history().push_back({h.at("epoch"), h.at("mean_loss"), h.at("lr"),
                                       h.at("train_accuracy"), h.at("wall_time_s")});
  }
  model.set_weights_ref(path);
  return model;
}

}  // namespace debias

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

#include "debias/generate/amplify.hpp"

#include <cstdio>
#include <unordered_set>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"
#include "debias/common/parallel.hpp"

namespace debias {

namespace fs = std::filesystem;

namespace {

std::string GenId(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "gen-%05zu", i);
  return buf;
}

std::string Rebase(const fs::path& image, const fs::path& out_dir) {
  const fs::path from = fs::absolute(out_dir).lexically_normal();
  return fs::absolute(image).lexically_normal().lexically_relative(from).generic_string();
}

struct Labelable {
  const CaptionRecord* record;
  int label;
};

}  // namespace

ClassVocab class_vocab_from_names(const std::vector<std::string>& class_names) {
  ClassVocab vocab;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    for (auto& tok : tokenize(class_names[i])) vocab[static_cast<int>(i)].insert(std::move(tok));
  }
  return vocab;
}

std::optional<int> assign_label(std::string_view prompt, const ClassVocab& vocab) {
  const auto toks = tokenize(prompt);
  std::optional<int> found;
  for (const auto& [label, words] : vocab) {
    const bool hit = std::any_of(toks.begin(), toks.end(), [&](const auto& t) { return words.contains(t); });
    if (!hit) continue;
    if (found) return std::nullopt;
    found = label;
  }
  return found;
}

std::size_t GenerationTarget::resolve(const DatasetManifest& source) const {
  if (count) return *count;
  std::size_t aligned = 0;
  for (const auto& s : source.samples) {
    if (s.split == Split::kTrain && s.group == Group::kAligned) ++aligned;
  }
  return aligned;
}

GeneratedSet amplify(const FilteredCorpus& corpus, const Generator& generator,
                     const ClassVocab& vocab, const AmplifyOptions& options,
                     const fs::path& out_dir) {
  GeneratedSet set;
  set.generator_id = generator.descriptor().id;
  set.seed = options.seed;
  set.size = options.size;
  set.target = options.target;
  set.source_filtered_hash = filtered_hash(corpus);
  set.base_dir = out_dir;

  std::vector<Labelable> captions;
  for (const auto& r : corpus.kept) {
    if (auto label = assign_label(r.text, vocab)) {
      captions.push_back({&r, *label});
    } else {
      ++set.skipped_unlabeled;
    }
  }
  if (options.target == 0) return set;
  if (captions.empty()) throw ValidationError("amplify: no labelable captions in the filtered corpus");

  struct Item {
    std::size_t caption;
    std::size_t cycle;
  };
  struct Produced {
    Item item;
    std::uint64_t seed;
    Image image;
  };
  std::vector<std::size_t> usage(captions.size(), 0);
  std::vector<bool> active(captions.size(), true);
  std::size_t active_count = captions.size();
  std::vector<Produced> produced;
  produced.reserve(options.target);

  while (produced.size() < options.target) {
    if (active_count == 0) {
      throw ValidationError("amplify: the generator rejected every labelable caption");
    }
    // One wave touches each active caption at most once, so a rejected prompt
    // costs a single call.
    const std::size_t wave = std::min(options.target - produced.size(), active_count);
    std::vector<Item> items;
    for (std::size_t t = 0; t < wave; ++t) {
      std::size_t best = captions.size();
      for (std::size_t c = 0; c < captions.size(); ++c) {
        if (active[c] && (best == captions.size() || usage[c] < usage[best])) best = c;
      }
      items.push_back({best, usage[best]++});
    }

    std::vector<std::uint64_t> seeds(wave);
    std::vector<std::optional<Image>> images(wave);
    std::vector<std::string> rejections(wave);
    for (std::size_t t = 0; t < wave; ++t) {
      const auto& rec = *captions[items[t].caption].record;
      seeds[t] = derive_seed(options.seed, rec.key() + ":" + std::to_string(items[t].cycle));
    }
    parallel_for(wave, options.parallelism, [&](std::size_t t) {
      const auto& rec = *captions[items[t].caption].record;
      try {
        images[t] = generator.generate(rec.text, options.size, seeds[t]);
      } catch (const PromptRejected& e) {
        rejections[t] = e.what();
      }
    });

    for (std::size_t t = 0; t < wave; ++t) {
      const std::size_t c = items[t].caption;
      if (!images[t]) {
        if (active[c]) {
          active[c] = false;
          --active_count;
          set.rejected.push_back({captions[c].record->key(), rejections[t]});
        }
        continue;
      }
      if (!active[c]) continue;
      produced.push_back({items[t], seeds[t], std::move(*images[t])});
    }
  }

  fs::create_directories(out_dir / "images");
  set.samples.resize(produced.size());
  for (std::size_t i = 0; i < produced.size(); ++i) {
    const Labelable& cap = captions[produced[i].item.caption];
    GeneratedSample& g = set.samples[i];
    g.id = GenId(i);
    g.image_ref = "images/" + g.id + ".png";
    g.label = cap.label;
    g.source_sample_id = cap.record->sample_id;
    g.source_caption_index = cap.record->caption_index;
    g.prompt = cap.record->text;
    g.seed = produced[i].seed;
    ++set.per_label[g.label];
    ++set.per_caption_usage[cap.record->key()];
  }
  parallel_for(produced.size(), options.parallelism, [&](std::size_t i) {
    write_png(produced[i].image, out_dir / set.samples[i].image_ref);
  });
  return set;
}

namespace {

Json GeneratedHeader(const GeneratedSet& s) {
  Json rejected = Json::array();
  for (const auto& r : s.rejected) rejected.push_back({{"caption", r.caption_key}, {"reason", r.reason}});
  Json per_label = Json::object();
  for (const auto& [label, n] : s.per_label) per_label[std::to_string(label)] = n;
  return Json{{"kind", "generated-set"},
              {"generator", s.generator_id},
              {"seed", s.seed},
              {"size", s.size},
              {"target", s.target},
              {"source_filtered", s.source_filtered_hash},
              {"skipped_unlabeled", s.skipped_unlabeled},
              {"rejected", rejected},
              {"per_label", per_label},
              {"per_caption_usage", s.per_caption_usage}};
}

std::string SerializeGenerated(const GeneratedSet& set) {
  std::vector<Json> records;
  records.reserve(set.samples.size());
  for (const auto& g : set.samples) {
    records.push_back({{"id", g.id},
                       {"image", g.image_ref},
                       {"label", g.label},
                       {"source", g.source_key()},
                       {"prompt", g.prompt},
                       {"seed", g.seed}});
  }
  return to_json_lines(GeneratedHeader(set), records);
}

}  // namespace

void write_generated(const GeneratedSet& set, const fs::path& path) {
  write_text_file(path, SerializeGenerated(set));
}

std::string generated_hash(const GeneratedSet& set) { return sha256_hex(SerializeGenerated(set)); }

GeneratedSet read_generated(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "generated-set", path);
  const Json& h = lines.header;
  GeneratedSet s;
  s.generator_id = h.at("generator").get<std::string>();
  s.seed = h.at("seed").get<std::uint64_t>();
  s.size = h.at("size").get<int>();
  s.target = h.at("target").get<std::size_t>();
  s.source_filtered_hash = h.at("source_filtered").get<std::string>();
  s.skipped_unlabeled = h.at("skipped_unlabeled").get<std::size_t>();
  for (const auto& r : h.at("rejected")) {
    s.rejected.push_back({r.at("caption").get<std::string>(), r.at("reason").get<std::string>()});
  }
  for (const auto& [k, v] : h.at("per_label").items()) s.per_label[std::stoi(k)] = v.get<std::size_t>();
  s.per_caption_usage = h.at("per_caption_usage").get<std::map<std::string, std::size_t>>();
  s.base_dir = path.parent_path();
  for (const auto& j : lines.records) {
    GeneratedSample g;
    g.id = j.at("id").get<std::string>();
    g.image_ref = j.at("image").get<std::string>();
    g.label = j.at("label").get<int>();
    const auto source = j.at("source").get<std::string>();
    const auto hash = source.rfind('#');
    if (hash == std::string::npos) {
      throw ValidationError(path.string() + ": record '" + g.id + "' has malformed source '" + source + "'");
    }
    g.source_sample_id = source.substr(0, hash);
    g.source_caption_index = std::stoi(source.substr(hash + 1));
    g.prompt = j.at("prompt").get<std::string>();
    g.seed = j.at("seed").get<std::uint64_t>();
    s.samples.push_back(std::move(g));
  }
  return s;
}

DebiasedDataset assemble_debiased(const DatasetManifest& original, const GeneratedSet& generated,
                                  const std::string& corpus_hash, const fs::path& out_dir,
                                  const AssembleOptions& options) {
  DebiasedDataset d;
  d.provenance = {manifest_hash(original), corpus_hash, generated.generator_id};

  DatasetManifest& m = d.manifest;
  m = original;
  m.name = original.name + "-debiased";
  m.base_dir = out_dir;
  std::unordered_set<std::string> ids;
  for (auto& s : m.samples) {
    s.image_ref = Rebase(original.image_path(s), out_dir);
    ids.insert(s.id);
  }

  const int n = static_cast<int>(original.num_classes());
  for (const auto& g : generated.samples) {
    if (!ids.insert(g.id).second) throw ValidationError("assemble: id collision on '" + g.id + "'");
    if (g.label < 0 || g.label >= n) {
      throw ValidationError("assemble: generated sample '" + g.id + "' has label " +
                            std::to_string(g.label) + " outside [0, " + std::to_string(n) + ")");
    }
    AttributedSample s;
    s.id = g.id;
    s.image_ref = Rebase(generated.base_dir / g.image_ref, out_dir);
    s.label = g.label;
    s.group = Group::kUnknown;
    s.split = Split::kTrain;
    m.samples.push_back(std::move(s));
  }

  if (options.oversample_topk != nullptr) {
    for (const auto& id : options.oversample_topk->sample_ids) {
      const AttributedSample* src = original.find(id);
      if (src == nullptr) throw ValidationError("assemble: candidate '" + id + "' is not in the manifest");
      AttributedSample dup = *src;
      dup.id = "topk-" + id;
      dup.image_ref = Rebase(original.image_path(*src), out_dir);
      if (!ids.insert(dup.id).second) throw ValidationError("assemble: id collision on '" + dup.id + "'");
      m.samples.push_back(std::move(dup));
    }
  }
  m.reindex();
  return d;
}

}  // namespace debias

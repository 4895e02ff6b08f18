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

#include "debias/caption/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "debias/common/error.hpp"
#include "debias/common/hash.hpp"
#include "debias/common/io.hpp"
#include "debias/common/parallel.hpp"

namespace debias {

namespace fs = std::filesystem;

std::string normalize_caption(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

TextCorpus build_corpus(const ConflictCandidateSet& candidates, const DatasetManifest& manifest,
                        const Captioner& captioner, const BuildCorpusOptions& options) {
  if (options.captions_per_sample < 1) {
    throw ValidationError("build_corpus: captions per sample must be >= 1");
  }
  std::vector<const AttributedSample*> samples;
  for (const auto& id : candidates.sample_ids) {
    const AttributedSample* s = manifest.find(id);
    if (s == nullptr) throw ValidationError("candidate '" + id + "' is not in the manifest");
    samples.push_back(s);
  }

  TextCorpus corpus;
  corpus.captioner_id = captioner.descriptor().id;
  corpus.seed = options.seed;
  corpus.captions_per_sample = options.captions_per_sample;
  corpus.candidate_set_hash = candidates_hash(candidates);

  const int m = options.captions_per_sample;
  std::vector<std::optional<std::vector<std::string>>> results(samples.size());
  std::vector<std::string> errors(samples.size());
  parallel_for(samples.size(), options.parallelism, [&](size_t i) {
    const AttributedSample& s = *samples[i];
    try {
      CaptionInput input;
      input.sample_id = s.id;
      input.image = read_png(manifest.image_path(s));
      if (s.bias_attr && static_cast<size_t>(s.label) < manifest.class_names.size()) {
        input.ground_truth = SceneAttributes{manifest.class_names[static_cast<size_t>(s.label)],
                                             *s.bias_attr};
      }
      auto texts = captioner.caption(input, m, derive_seed(options.seed, s.id));
      if (texts.size() != static_cast<size_t>(m)) {
        throw AdapterError(FailureKind::kMalformedResponse,
                           "captioner returned " + std::to_string(texts.size()) + " of " +
                               std::to_string(m) + " captions",
                           1);
      }
      for (auto& t : texts) {
        t = normalize_caption(t);
        if (t.empty()) throw AdapterError(FailureKind::kMalformedResponse, "empty caption", 1);
      }
      results[i] = std::move(texts);
    } catch (const AdapterError& e) {
      if (e.kind() == FailureKind::kUnavailable) throw;
      errors[i] = e.what();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (size_t i = 0; i < samples.size(); ++i) {
    if (!results[i]) {
      corpus.failures.push_back({samples[i]->id, errors[i]});
      continue;
    }
    for (int k = 0; k < m; ++k) {
      corpus.records.push_back({samples[i]->id, k + 1, (*results[i])[static_cast<size_t>(k)]});
    }
  }
  std::sort(corpus.records.begin(), corpus.records.end());
  std::sort(corpus.failures.begin(), corpus.failures.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return corpus;
}

std::string serialize_corpus(const TextCorpus& c) {
  Json failures = Json::array();
  for (const auto& f : c.failures) failures.push_back({{"sample_id", f.sample_id}, {"reason", f.reason}});
  Json header{{"kind", "text-corpus"},
              {"captioner", c.captioner_id},
              {"seed", c.seed},
              {"m", c.captions_per_sample},
              {"candidate_set", c.candidate_set_hash},
              {"failures", failures}};
  std::vector<Json> records;
  records.reserve(c.records.size());
  for (const auto& r : c.records) {
    records.push_back({{"sample_id", r.sample_id}, {"caption_index", r.caption_index}, {"text", r.text}});
  }
  return to_json_lines(header, records);
}

void write_corpus(const TextCorpus& corpus, const fs::path& path) {
  write_text_file(path, serialize_corpus(corpus));
}

TextCorpus read_corpus(const fs::path& path) {
  const JsonLines lines = read_json_lines(path);
  expect_kind(lines.header, "text-corpus", path);
  TextCorpus c;
  const Json& h = lines.header;
  c.captioner_id = h.at("captioner").get<std::string>();
  c.seed = h.at("seed").get<std::uint64_t>();
  c.captions_per_sample = h.at("m").get<int>();
  c.candidate_set_hash = h.at("candidate_set").get<std::string>();
  for (const auto& f : h.at("failures")) {
    c.failures.push_back({f.at("sample_id").get<std::string>(), f.at("reason").get<std::string>()});
  }
  for (const auto& r : lines.records) {
    c.records.push_back({r.at("sample_id").get<std::string>(), r.at("caption_index").get<int>(),
                         r.at("text").get<std::string>()});
  }
  return c;
}

std::string corpus_hash(const TextCorpus& corpus) { return sha256_hex(serialize_corpus(corpus)); }

}  // namespace debias

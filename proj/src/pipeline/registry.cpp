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

#include "debias/pipeline/registry.hpp"

#include "debias/common/error.hpp"

namespace debias {
namespace {

template <typename Map>
std::vector<std::string> Keys(const Map& m) {
  std::vector<std::string> out;
  for (const auto& [k, _] : m) out.push_back(k);
  return out;
}

template <typename Map>
std::string Known(const Map& m) {
  std::string out;
  for (const auto& k : Keys(m)) out += (out.empty() ? "" : ", ") + k;
  return out;
}

}  // namespace

BackendRegistry BackendRegistry::with_defaults() {
  BackendRegistry r;
  r.add_captioner("oracle", [](const CaptionSection&) { return std::make_unique<OracleCaptioner>(); });
  r.add_captioner("external-http", [](const CaptionSection& s) {
    return std::make_unique<HttpCaptioner>(EndpointConfig::from_env("DEBIAS_CAPTION", s.endpoint),
                                           s.instruction);
  });
  r.add_generator("oracle", [](const GenerationSection&) { return std::make_unique<OracleGenerator>(); });
  r.add_generator("external-http", [](const GenerationSection& s) {
    return std::make_unique<HttpGenerator>(EndpointConfig::from_env("DEBIAS_GENERATE", s.endpoint));
  });
  return r;
}

void BackendRegistry::add_captioner(const std::string& id, CaptionerFactory factory) {
  captioners_[id] = std::move(factory);
}

void BackendRegistry::add_generator(const std::string& id, GeneratorFactory factory) {
  generators_[id] = std::move(factory);
}

std::vector<std::string> BackendRegistry::captioner_ids() const { return Keys(captioners_); }
std::vector<std::string> BackendRegistry::generator_ids() const { return Keys(generators_); }

std::unique_ptr<Captioner> BackendRegistry::make_captioner(const CaptionSection& section) const {
  const auto it = captioners_.find(section.backend);
  if (it == captioners_.end()) {
    throw ValidationError("unregistered captioner '" + section.backend + "' (known: " + Known(captioners_) + ")");
  }
  return it->second(section);
}

std::unique_ptr<Generator> BackendRegistry::make_generator(const GenerationSection& section) const {
  const auto it = generators_.find(section.backend);
  if (it == generators_.end()) {
    throw ValidationError("unregistered generator '" + section.backend + "' (known: " + Known(generators_) + ")");
  }
  return it->second(section);
}

}  // namespace debias

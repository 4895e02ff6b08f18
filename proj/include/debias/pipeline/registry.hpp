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

#ifndef DEBIAS_PIPELINE_REGISTRY_HPP_
#define DEBIAS_PIPELINE_REGISTRY_HPP_

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "debias/caption/captioner.hpp"
#include "debias/generate/generator.hpp"
#include "debias/pipeline/config.hpp"

namespace debias {

using CaptionerFactory = std::function<std::unique_ptr<Captioner>(const CaptionSection&)>;
using GeneratorFactory = std::function<std::unique_ptr<Generator>(const GenerationSection&)>;

// Maps backend ids in a config to implementations.
class BackendRegistry {
 public:
  // "oracle" and "external-http" for both roles. The HTTP backends read
  // DEBIAS_CAPTION_* / DEBIAS_GENERATE_* environment overrides.
  static BackendRegistry with_defaults();

  void add_captioner(const std::string& id, CaptionerFactory factory);
  void add_generator(const std::string& id, GeneratorFactory factory);

  bool has_captioner(const std::string& id) const { return captioners_.contains(id); }
  bool has_generator(const std::string& id) const { return generators_.contains(id); }
  std::vector<std::string> captioner_ids() const;
  std::vector<std::string> generator_ids() const;

  // Throw ValidationError for unregistered ids.
  std::unique_ptr<Captioner> make_captioner(const CaptionSection& section) const;
  std::unique_ptr<Generator> make_generator(const GenerationSection& section) const;

 private:
  std::map<std::string, CaptionerFactory> captioners_;
  std::map<std::string, GeneratorFactory> generators_;
};

}  // namespace debias

#endif  // DEBIAS_PIPELINE_REGISTRY_HPP_

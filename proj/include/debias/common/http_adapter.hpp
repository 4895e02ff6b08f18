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

#ifndef DEBIAS_COMMON_HTTP_ADAPTER_HPP_
#define DEBIAS_COMMON_HTTP_ADAPTER_HPP_

#include <atomic>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "debias/common/error.hpp"

namespace debias {

enum class FailureKind {
  kTimeout,            // no response in time; retryable
  kRateLimited,        // HTTP 429; retryable, honors Retry-After
  kTransient,          // HTTP 5xx; retryable
  kUnavailable,        // endpoint unreachable after all retries
  kMalformedResponse,  // response violates the contract; not retried
  kRejected,           // other 4xx; not retried
};

std::string_view to_string(FailureKind kind);

// Typed failure from an external backend, with retry metadata.
class AdapterError : public Error {
 public:
  AdapterError(FailureKind kind, std::string message, int attempts,
               std::optional<double> retry_after_s = std::nullopt)
      : Error(std::string(to_string(kind)) + ": " + message + " (after " +
              std::to_string(attempts) + " attempt" + (attempts == 1 ? "" : "s") + ")"),
        kind_(kind),
        attempts_(attempts),
        retry_after_s_(retry_after_s) {}

  FailureKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  std::optional<double> retry_after_s() const { return retry_after_s_; }
  bool retryable() const {
    return kind_ == FailureKind::kTimeout || kind_ == FailureKind::kRateLimited ||
           kind_ == FailureKind::kTransient;
  }

 private:
  FailureKind kind_;
  int attempts_;
  std::optional<double> retry_after_s_;
};

// Endpoint settings. Environment variables override the file config so that
// credentials never need to live in an experiment config.
struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string path;      // e.g. /v1/caption
  std::string api_key;   // sent as a bearer token when non-empty
  double timeout_s = 30.0;
  int max_retries = 3;
  double backoff_base_s = 0.5;
  double backoff_cap_s = 8.0;

  // Reads <PREFIX>_ENDPOINT, <PREFIX>_PATH, <PREFIX>_API_KEY,
  // <PREFIX>_TIMEOUT_S and <PREFIX>_MAX_RETRIES over `defaults`.
  static EndpointConfig from_env(std::string_view prefix, EndpointConfig defaults);
};

void to_json(nlohmann::json& j, const EndpointConfig& c);  // omits api_key
void from_json(const nlohmann::json& j, EndpointConfig& c);

struct PostResult {
  nlohmann::json body;
  int attempts = 1;
};

// POSTs `body` as JSON with an Idempotency-Key header, retrying retryable
// failures up to config.max_retries times with capped exponential backoff.
// The same key is sent on every attempt so a server that already processed
// the request can replay its response instead of doing the work twice.
// Throws AdapterError.
PostResult post_json_with_retries(const EndpointConfig& config, const nlohmann::json& body,
                                  const std::string& idempotency_key);

}  // namespace debias

#endif  // DEBIAS_COMMON_HTTP_ADAPTER_HPP_

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

#include "debias/common/http_adapter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace debias {
namespace {

std::optional<std::string> Env(std::string_view prefix, std::string_view suffix) {
  const std::string name = std::string(prefix) + "_" + std::string(suffix);
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

void Sleep(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

// One HTTP exchange. Throws AdapterError with attempts = `attempt`.
nlohmann::json PostOnce(const EndpointConfig& config, const std::string& payload,
                        const std::string& key, int attempt) {
  httplib::Client client(config.base_url);
  const auto timeout = std::chrono::duration<double>(config.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers = {{"Idempotency-Key", key}};
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

  auto res = client.Post(config.path, headers, payload, "application/json");
  if (!res) {
    const auto err = res.error();
    const bool unreachable = err == httplib::Error::Connection;
    throw AdapterError(unreachable ? FailureKind::kUnavailable : FailureKind::kTimeout,
                       "request failed: " + httplib::to_string(err), attempt);
  }
  if (res->status == 429) {
    std::optional<double> retry_after;
    if (res->has_header("Retry-After")) {
      retry_after = std::atof(res->get_header_value("Retry-After").c_str());
    }
    throw AdapterError(FailureKind::kRateLimited, "rate limited", attempt, retry_after);
  }
  if (res->status >= 500) {
    throw AdapterError(FailureKind::kTransient, "server error " + std::to_string(res->status),
                       attempt);
  }
  if (res->status != 200) {
    throw AdapterError(FailureKind::kRejected, "status " + std::to_string(res->status) + ": " +
                                                   res->body.substr(0, 200),
                       attempt);
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw AdapterError(FailureKind::kMalformedResponse, "response is not JSON", attempt);
  }
}

}  // namespace

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kTimeout: return "timeout";
    case FailureKind::kRateLimited: return "rate-limited";
    case FailureKind::kTransient: return "transient";
    case FailureKind::kUnavailable: return "unavailable";
    case FailureKind::kMalformedResponse: return "malformed-response";
    case FailureKind::kRejected: return "rejected";
  }
  return "unknown";
}

EndpointConfig EndpointConfig::from_env(std::string_view prefix, EndpointConfig c) {
  if (auto v = Env(prefix, "ENDPOINT")) c.base_url = *v;
  if (auto v = Env(prefix, "PATH")) c.path = *v;
  if (auto v = Env(prefix, "API_KEY")) c.api_key = *v;
  if (auto v = Env(prefix, "TIMEOUT_S")) c.timeout_s = std::atof(v->c_str());
  if (auto v = Env(prefix, "MAX_RETRIES")) c.max_retries = std::atoi(v->c_str());
  return c;
}

void to_json(nlohmann::json& j, const EndpointConfig& c) {
  j = nlohmann::json{{"base_url", c.base_url},         {"path", c.path},
                     {"timeout_s", c.timeout_s},       {"max_retries", c.max_retries},
                     {"backoff_base_s", c.backoff_base_s}, {"backoff_cap_s", c.backoff_cap_s}};
}

void from_json(const nlohmann::json& j, EndpointConfig& c) {
  const EndpointConfig d;
  c.base_url = j.value("base_url", d.base_url);
  c.path = j.value("path", d.path);
  c.timeout_s = j.value("timeout_s", d.timeout_s);
  c.max_retries = j.value("max_retries", d.max_retries);
  c.backoff_base_s = j.value("backoff_base_s", d.backoff_base_s);
  c.backoff_cap_s = j.value("backoff_cap_s", d.backoff_cap_s);
}

PostResult post_json_with_retries(const EndpointConfig& config, const nlohmann::json& body,
                                  const std::string& idempotency_key) {
  if (config.base_url.empty()) {
    throw AdapterError(FailureKind::kUnavailable, "no endpoint configured", 0);
  }
  const std::string payload = body.dump();
  const int max_attempts = 1 + std::max(0, config.max_retries);
  for (int attempt = 1;; ++attempt) {
    try {
      return {PostOnce(config, payload, idempotency_key, attempt), attempt};
    } catch (const AdapterError& e) {
      const bool retry = e.retryable() || e.kind() == FailureKind::kUnavailable;
      if (!retry || attempt >= max_attempts) throw;
      double wait = std::min(config.backoff_cap_s, config.backoff_base_s * std::ldexp(1.0, attempt - 1));
      if (e.retry_after_s()) wait = std::min(config.backoff_cap_s, std::max(wait, *e.retry_after_s()));
      Sleep(wait);
    }
  }
}

}  // namespace debias

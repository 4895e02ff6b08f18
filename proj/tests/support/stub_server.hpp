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

// In-process HTTP stand-ins for the captioning and generation services, with
// seeded fault injection and an idempotency-key response cache.

#ifndef DEBIAS_TESTS_SUPPORT_STUB_SERVER_HPP_
#define DEBIAS_TESTS_SUPPORT_STUB_SERVER_HPP_

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "debias/common/hash.hpp"
#include "debias/common/http_adapter.hpp"
#include "debias/common/rng.hpp"
#include "debias/dataset/shapes.hpp"
#include "debias/generate/generator.hpp"
#include "httplib.h"
#include "json.hpp"

namespace debias::testing {

struct FaultPlan {
  double fail_before = 0.0;  // 503 before doing any work
  double fail_after = 0.0;   // do the work, cache it, then answer 503
  std::uint64_t seed = 1;
};

// Throw this from a handler to answer 422.
struct Refuse {
  std::string reason;
};

class StubServer {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;

  StubServer(std::string path, Handler handler, FaultPlan plan = {})
      : path_(std::move(path)), handler_(std::move(handler)), plan_(plan), rng_(plan.seed) {
    server_.Post(path_, [this](const httplib::Request& req, httplib::Response& res) { Serve(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  EndpointConfig endpoint() const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.path = path_;
    c.timeout_s = 10;
    c.max_retries = 8;
    c.backoff_base_s = 0.001;
    c.backoff_cap_s = 0.01;
    return c;
  }

  long requests() const { std::lock_guard lock(mu_); return requests_; }
  long injected() const { std::lock_guard lock(mu_); return injected_; }
  long replays() const { std::lock_guard lock(mu_); return replays_; }
  // Idempotency key -> number of times the handler actually ran for it.
  std::map<std::string, int> executions() const { std::lock_guard lock(mu_); return executions_; }
  std::size_t successes() const { std::lock_guard lock(mu_); return delivered_.size(); }

 private:
  void Serve(const httplib::Request& req, httplib::Response& res) {
    const std::string key = req.get_header_value("Idempotency-Key");
    double u;
    {
      std::lock_guard lock(mu_);
      ++requests_;
      u = rng_.uniform();
      if (u < plan_.fail_before) {
        ++injected_;
        res.status = 503;
        return;
      }
    }
    std::string body;
    bool cached = false;
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(key); !key.empty() && it != cache_.end()) {
        body = it->second;
        cached = true;
        ++replays_;
      }
    }
    if (!cached) {
      try {
        body = handler_(nlohmann::json::parse(req.body)).dump();
      } catch (const Refuse& r) {
        res.status = 422;
        res.set_content(r.reason, "text/plain");
        return;
      }
      std::lock_guard lock(mu_);
      ++executions_[key];
      cache_[key] = body;
    }
    {
      std::lock_guard lock(mu_);
      if (u < plan_.fail_before + plan_.fail_after) {
        ++injected_;
        res.status = 503;
        return;
      }
      delivered_[key] = true;
    }
    res.set_content(body, "application/json");
  }

  std::string path_;
  Handler handler_;
  FaultPlan plan_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  Rng rng_;
  long requests_ = 0;
  long injected_ = 0;
  long replays_ = 0;
  std::map<std::string, int> executions_;
  std::map<std::string, std::string> cache_;
  std::map<std::string, bool> delivered_;
};

// Captions from the pixels: the parsed scene first, then shape-only filler.
inline StubServer::Handler caption_handler() {
  return [](const nlohmann::json& req) {
    const Image img = decode_png(base64_decode(req.at("image_png_base64").get<std::string>()));
    const auto scene = parse_scene(img);
    if (!scene) throw Refuse{"no foreground"};
    const int count = req.at("count").get<int>();
    nlohmann::json caps = nlohmann::json::array();
    caps.push_back("a " + scene->color + " " + scene->shape + " on a plain background");
    for (int i = 1; i < count; ++i) caps.push_back("a picture of a " + scene->shape + " number " + std::to_string(i));
    return nlohmann::json{{"captions", caps}};
  };
}

inline StubServer::Handler generation_handler() {
  return [](const nlohmann::json& req) {
    SceneAttributes scene;
    try {
      scene = parse_prompt(req.at("prompt").get<std::string>());
    } catch (const PromptRejected& e) {
      throw Refuse{e.what()};
    }
    const Image img = render_scene(scene, req.at("size").get<int>(), req.at("seed").get<std::uint64_t>());
    return nlohmann::json{{"image_png_base64", base64_encode(encode_png(img))}};
  };
}

}  // namespace debias::testing

#endif  // DEBIAS_TESTS_SUPPORT_STUB_SERVER_HPP_

// Copyright 2026 The llmda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "llmda/explain.hpp"

#include "llmda/error.hpp"

// OpenSSL headers define macros that collide with Eigen internals, so the
// client library comes last.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace llmda {

HttpChatTransport::HttpChatTransport(std::string endpoint,
                                     std::string model_name,
                                     std::string api_key,
                                     std::chrono::milliseconds timeout)
    : model_(std::move(model_name)),
      api_key_(std::move(api_key)),
      timeout_(timeout) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint must be an http(s) URL: " + endpoint);
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = endpoint;
    path_ = "/v1/chat/completions";
  } else {
    base_ = endpoint.substr(0, path_start);
    path_ = endpoint.substr(path_start);
  }
}

std::string HttpChatTransport::complete(const std::string& prompt) {
  httplib::Client client(base_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  nlohmann::json payload = {
      {"model", model_},
      {"messages", nlohmann::json::array(
                       {{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
  };
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  auto res = client.Post(path_, headers, payload.dump(), "application/json");
  if (!res) {
    throw std::runtime_error("request failed: " +
                             httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw std::runtime_error("HTTP status " + std::to_string(res->status));
  }
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.contains("choices") ||
      !body["choices"].is_array() || body["choices"].empty()) {
    throw std::runtime_error("malformed chat-completion response");
  }
  const auto& message = body["choices"][0]["message"];
  if (!message.is_object() || !message.contains("content") ||
      !message["content"].is_string()) {
    throw std::runtime_error("chat-completion response has no content");
  }
  return message["content"].get<std::string>();
}

}  // namespace llmda

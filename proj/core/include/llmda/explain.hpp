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

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "llmda/types.hpp"

namespace llmda {

inline constexpr std::string_view kExplanationPrompt =
    "Could you provide a concise summary of the specified patch?";

inline constexpr std::string_view kInstructionText =
    "Choose the correct option to the following question: is the patch "
    "security related or not? Choices: (0) security (1) non-security";

// The summary request followed by the patch diff. The developer description
// is deliberately not part of the prompt.
std::string explanation_prompt(const PatchSample& patch);

// The label-wise instruction attached to every sample.
const std::string& instruction_text();

// Offline summary built only from parsed-diff statistics: files touched,
// hunk count, added/removed line counts and the first identifier of the
// first added line.
std::string stub_explanation(const PatchSample& patch);

enum class ExplainerBackend { kExternalService, kDeterministicStub };

struct ExplainerConfig {
  ExplainerBackend backend = ExplainerBackend::kDeterministicStub;
  // Full chat-completion URL, e.g. http://localhost:8080/v1/chat/completions.
  std::string endpoint;
  std::string model_name = "stub";
  // Empty disables caching.
  std::filesystem::path cache_dir;
  std::chrono::milliseconds timeout{30000};
  // Total number of attempts before giving up.
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  // Environment variable holding the bearer token (optional).
  std::string api_key_env = "LLMDA_API_KEY";

  // Throws InvalidArgument.
  void validate() const;
};

nlohmann::json to_json(const ExplainerConfig& cfg);
ExplainerConfig explainer_config_from_json(const nlohmann::json& j);

// Sends one user prompt and returns the assistant text. Throws on any
// transport or protocol failure.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Minimal OpenAI-style chat-completion client.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string model_name,
                    std::string api_key, std::chrono::milliseconds timeout);
  std::string complete(const std::string& prompt) override;

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string model_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Content-addressed response store: one file per key, named by the hex digest
// of (model_name, prompt). The file holds the response followed by a
// "sha256:<hex>" line over the response bytes.
class ExplanationCache {
 public:
  explicit ExplanationCache(std::filesystem::path dir);

  static std::string key(const std::string& prompt,
                         const std::string& model_name);

  std::filesystem::path entry_path(const std::string& key) const;
  // Throws CacheCorrupt when the stored checksum does not match.
  std::optional<std::string> lookup(const std::string& key) const;
  // Atomic write (temp file + rename).
  void store(const std::string& key, const std::string& response) const;

 private:
  std::filesystem::path dir_;
};

struct ExplainStats {
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t backend_calls = 0;  // individual attempts
  std::size_t failures = 0;
};

class Explainer {
 public:
  // For kExternalService with no transport, an HttpChatTransport is built from
  // the config and the api_key_env variable.
  explicit Explainer(ExplainerConfig cfg,
                     std::shared_ptr<ChatTransport> transport = nullptr);

  // Cached text when available; otherwise queries the backend, persists the
  // response and returns it. Throws ServiceUnavailable after max_retries
  // failed attempts and CacheCorrupt for a damaged entry.
  std::string explain(const PatchSample& patch);

  ExplainStats stats() const;
  const ExplainerConfig& config() const { return cfg_; }

 private:
  std::string query_backend(const std::string& prompt,
                            const PatchSample& patch);
  std::mutex& key_mutex(const std::string& key);

  ExplainerConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  std::optional<ExplanationCache> cache_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
  ExplainStats stats_;
};

}  // namespace llmda

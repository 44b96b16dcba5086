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

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "llmda/diff.hpp"
#include "llmda/digest.hpp"
#include "llmda/error.hpp"

namespace llmda {

std::string explanation_prompt(const PatchSample& patch) {
  std::string out(kExplanationPrompt);
  out += '\n';
  out += patch.diff_text();
  return out;
}

const std::string& instruction_text() {
  static const std::string kText(kInstructionText);
  return kText;
}

namespace {

std::string plural(std::size_t n, const char* word) {
  return std::to_string(n) + " " + word + (n == 1 ? "" : "s");
}

std::string first_identifier(std::string_view s) {
  std::size_t i = 0;
  auto word = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
  while (i < s.size() && !word(static_cast<unsigned char>(s[i]))) ++i;
  std::size_t j = i;
  while (j < s.size() && word(static_cast<unsigned char>(s[j]))) ++j;
  return std::string(s.substr(i, j - i));
}

}  // namespace

std::string stub_explanation(const PatchSample& patch) {
  ParsedDiff diff = parse_unified_diff(patch.diff_text());
  std::string first_token;
  for (const auto& h : diff.hunks) {
    for (const auto& l : h.lines) {
      if (l.tag == LineTag::kAdded) {
        first_token = first_identifier(l.text);
        if (!first_token.empty()) break;
      }
    }
    if (!first_token.empty()) break;
  }
  std::ostringstream out;
  out << "The patch touches " << plural(diff.files_touched.size(), "file");
  if (!diff.files_touched.empty()) {
    out << " (";
    for (std::size_t i = 0; i < diff.files_touched.size(); ++i) {
      out << (i ? ", " : "") << diff.files_touched[i];
    }
    out << ")";
  }
  out << " across " << plural(diff.hunks.size(), "hunk") << ", adding "
      << plural(diff.added_lines(), "line") << " and removing "
      << plural(diff.removed_lines(), "line") << ".";
  out << " First added token: "
      << (first_token.empty() ? std::string("none") : first_token) << ".";
  return out.str();
}

void ExplainerConfig::validate() const {
  if (backend == ExplainerBackend::kExternalService && endpoint.empty()) {
    throw InvalidArgument("external_service explainer requires an endpoint");
  }
  if (max_retries < 1) throw InvalidArgument("max_retries must be >= 1");
  if (timeout.count() <= 0) throw InvalidArgument("timeout must be positive");
  if (retry_backoff.count() < 0) {
    throw InvalidArgument("retry_backoff must be >= 0");
  }
}

nlohmann::json to_json(const ExplainerConfig& cfg) {
  return nlohmann::json{
      {"backend", cfg.backend == ExplainerBackend::kExternalService
                      ? "external_service"
                      : "deterministic_stub"},
      {"endpoint", cfg.endpoint},
      {"model_name", cfg.model_name},
      {"cache_dir", cfg.cache_dir.string()},
      {"timeout_ms", cfg.timeout.count()},
      {"max_retries", cfg.max_retries},
      {"retry_backoff_ms", cfg.retry_backoff.count()},
      {"api_key_env", cfg.api_key_env},
  };
}

ExplainerConfig explainer_config_from_json(const nlohmann::json& j) {
  ExplainerConfig cfg;
  if (!j.is_object()) throw InvalidArgument("explainer config must be an object");
  try {
    if (j.contains("backend")) {
      auto b = j.at("backend").get<std::string>();
      if (b == "external_service") {
        cfg.backend = ExplainerBackend::kExternalService;
      } else if (b == "deterministic_stub") {
        cfg.backend = ExplainerBackend::kDeterministicStub;
      } else {
        throw InvalidArgument("unknown explainer backend '" + b + "'");
      }
    }
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.model_name = j.value("model_name", cfg.model_name);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir.string());
    cfg.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<long long>(cfg.timeout.count())));
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.retry_backoff = std::chrono::milliseconds(j.value(
        "retry_backoff_ms", static_cast<long long>(cfg.retry_backoff.count())));
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("explainer config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExplanationCache::ExplanationCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache dir " + dir_.string());
}

std::string ExplanationCache::key(const std::string& prompt,
                                  const std::string& model_name) {
  std::string material = model_name;
  material += '\0';
  material += prompt;
  return sha256_hex(material);
}

std::filesystem::path ExplanationCache::entry_path(
    const std::string& key) const {
  return dir_ / key;
}

std::optional<std::string> ExplanationCache::lookup(
    const std::string& key) const {
  auto path = entry_path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  // <response>\nsha256:<64 hex>\n
  constexpr std::string_view kTag = "\nsha256:";
  if (body.size() < kTag.size() + 65 || body.back() != '\n') {
    throw CacheCorrupt(path.string());
  }
  std::size_t tag = body.size() - 1 - 64 - (kTag.size());
  if (body.compare(tag, kTag.size(), kTag) != 0) {
    throw CacheCorrupt(path.string());
  }
  std::string response = body.substr(0, tag);
  std::string stored = body.substr(tag + kTag.size(), 64);
  if (sha256_hex(response) != stored) throw CacheCorrupt(path.string());
  return response;
}

void ExplanationCache::store(const std::string& key,
                             const std::string& response) const {
  auto path = entry_path(key);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(
                       std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << response << "\nsha256:" << sha256_hex(response) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot commit cache entry " + path.string());
}

Explainer::Explainer(ExplainerConfig cfg, std::shared_ptr<ChatTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  cfg_.validate();
  if (!cfg_.cache_dir.empty()) cache_.emplace(cfg_.cache_dir);
  if (cfg_.backend == ExplainerBackend::kExternalService && !transport_) {
    const char* key = cfg_.api_key_env.empty()
                          ? nullptr
                          : std::getenv(cfg_.api_key_env.c_str());
    transport_ = std::make_shared<HttpChatTransport>(
        cfg_.endpoint, cfg_.model_name, key ? key : "", cfg_.timeout);
  }
}

std::mutex& Explainer::key_mutex(const std::string& key) {
  std::lock_guard lock(mu_);
  auto& slot = key_mutexes_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

ExplainStats Explainer::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::string Explainer::query_backend(const std::string& prompt,
                                     const PatchSample& patch) {
  if (cfg_.backend == ExplainerBackend::kDeterministicStub) {
    return stub_explanation(patch);
  }
  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.max_retries; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++stats_.backend_calls;
    }
    try {
      return transport_->complete(prompt);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    if (attempt < cfg_.max_retries && cfg_.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(cfg_.retry_backoff * attempt);
    }
  }
  {
    std::lock_guard lock(mu_);
    ++stats_.failures;
  }
  throw ServiceUnavailable(cfg_.max_retries, last_error);
}

std::string Explainer::explain(const PatchSample& patch) {
  std::string prompt = explanation_prompt(patch);
  if (!cache_) {
    {
      std::lock_guard lock(mu_);
      ++stats_.cache_misses;
    }
    return query_backend(prompt, patch);
  }
  std::string key = ExplanationCache::key(prompt, cfg_.model_name);
  std::lock_guard key_lock(key_mutex(key));
  if (auto hit = cache_->lookup(key)) {
    std::lock_guard lock(mu_);
    ++stats_.cache_hits;
    return *hit;
  }
  {
    std::lock_guard lock(mu_);
    ++stats_.cache_misses;
  }
  std::string response = query_backend(prompt, patch);
  cache_->store(key, response);
  return response;
}

}  // namespace llmda

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cofact {

enum class PromptStage { Elicit, Synthesize, Annotate, BoundReduce, MapProps, TranslateFact };

std::string_view stage_id(PromptStage stage);
std::optional<PromptStage> parse_stage_id(std::string_view id);

struct PromptRequest {
  PromptStage stage = PromptStage::Elicit;
  std::string template_id;
  std::string prompt;
  std::string model;
  std::string effort = "low";
};

// Hex SHA-256 over the length-prefixed model id followed by the prompt.
std::string cache_key(std::string_view model, std::string_view prompt);

struct CacheEntry {
  std::string key;
  std::string response;
  std::string stage;
  std::string timestamp;
};

// One `<key>.txt` file per entry holding the response verbatim, plus a
// `<key>.json` sidecar with stage, model, timestamp and prompt. Writes go
// through a temporary file and rename, so concurrent readers never observe
// a partial entry.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const PromptRequest& request, const std::string& response);
  std::optional<CacheEntry> entry(const std::string& key) const;
  std::vector<std::string> keys() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const PromptRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct HttpProviderSettings {
  std::string endpoint = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string credential_env = "OPENAI_API_KEY";
  int max_attempts = 3;
  double timeout_seconds = 600;
};

// Chat-completion over HTTPS. Effort maps to `reasoning_effort`.
class HttpChatProvider : public Provider {
 public:
  explicit HttpChatProvider(HttpProviderSettings settings);
  std::string complete(const PromptRequest& request) override;
  std::string name() const override { return "http"; }

  static std::string build_body(const PromptRequest& request);
  static std::string extract_content(const std::string& body);

 private:
  HttpProviderSettings settings_;
};

// Canned responses from a directory: the n-th request for a stage reads
// `<stage>_<n>.txt` (1-based), falling back to `<stage>.txt`.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::filesystem::path dir);
  std::string complete(const PromptRequest& request) override;
  std::string name() const override { return "scripted"; }
  int calls(PromptStage stage) const;

 private:
  std::filesystem::path dir_;
  std::map<PromptStage, int> calls_;
  mutable std::mutex mu_;
};

enum class GatewayMode { Live, Replay };

struct GatewayStats {
  int cache_hits = 0;
  int provider_calls = 0;
  double llm_seconds = 0;
};

// Cache in front of a provider. Replay mode never reaches the provider and
// raises ReplayMissError on a miss. Safe to call concurrently.
class Gateway {
 public:
  Gateway(GatewayMode mode, std::filesystem::path cache_dir, std::unique_ptr<Provider> provider,
          std::string model);

  std::string complete(PromptStage stage, const std::string& template_id, const std::string& prompt);
  std::string complete(const PromptRequest& request);

  void set_transcript_dir(std::optional<std::filesystem::path> dir);
  void set_effort(std::string effort) { effort_ = std::move(effort); }

  GatewayStats stats() const;
  GatewayMode mode() const { return mode_; }
  const std::string& model() const { return model_; }

 private:
  void write_transcript(const PromptRequest& request, const std::string& key,
                        const std::string& response, bool cached);

  GatewayMode mode_;
  ResponseCache cache_;
  std::unique_ptr<Provider> provider_;
  std::string model_;
  std::string effort_ = "low";
  std::optional<std::filesystem::path> transcript_dir_;
  int transcript_seq_ = 0;
  GatewayStats stats_;
  mutable std::mutex mu_;
};

}  // namespace cofact

#include "cofact/gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cofact/error.hpp"

namespace cofact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<PromptStage, std::string_view> kStageIds[] = {
    {PromptStage::Elicit, "elicit"},           {PromptStage::Synthesize, "synthesize"},
    {PromptStage::Annotate, "annotate"},       {PromptStage::BoundReduce, "bound_reduce"},
    {PromptStage::MapProps, "map_props"},      {PromptStage::TranslateFact, "translate_fact"},
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& data) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = p;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw GatewayError("cannot write " + tmp.string());
    out << data;
    if (!out.flush()) throw GatewayError("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Stage error_stage(PromptStage s) {
  switch (s) {
    case PromptStage::Elicit: return Stage::Elicitation;
    case PromptStage::Synthesize: return Stage::Synthesis;
    case PromptStage::Annotate: return Stage::Annotation;
    case PromptStage::BoundReduce: return Stage::BoundReduction;
    case PromptStage::MapProps:
    case PromptStage::TranslateFact: return Stage::Facts;
  }
  return Stage::Gateway;
}

}  // namespace

std::string_view stage_id(PromptStage stage) {
  for (const auto& [s, id] : kStageIds) {
    if (s == stage) return id;
  }
  return "unknown";
}

std::optional<PromptStage> parse_stage_id(std::string_view id) {
  for (const auto& [s, name] : kStageIds) {
    if (name == id) return s;
  }
  return std::nullopt;
}

std::string cache_key(std::string_view model, std::string_view prompt) {
  std::string material = std::to_string(model.size()) + ":";
  material += model;
  material += prompt;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw GatewayError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw GatewayError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  fs::path p = dir_ / (key + ".txt");
  if (!fs::exists(p)) return std::nullopt;
  return read_file(p);
}

void ResponseCache::store(const std::string& key, const PromptRequest& request,
                          const std::string& response) {
  json meta = {{"stage", stage_id(request.stage)},
               {"template", request.template_id},
               {"model", request.model},
               {"timestamp", utc_timestamp()},
               {"prompt", request.prompt}};
  write_atomic(dir_ / (key + ".json"), meta.dump(2) + "\n");
  write_atomic(dir_ / (key + ".txt"), response);
}

std::optional<CacheEntry> ResponseCache::entry(const std::string& key) const {
  auto response = lookup(key);
  if (!response) return std::nullopt;
  CacheEntry e{key, *response, {}, {}};
  fs::path meta = dir_ / (key + ".json");
  if (fs::exists(meta)) {
    auto j = json::parse(read_file(meta), nullptr, false);
    if (j.is_object()) {
      e.stage = j.value("stage", "");
      e.timestamp = j.value("timestamp", "");
    }
  }
  return e;
}

std::vector<std::string> ResponseCache::keys() const {
  std::vector<std::string> out;
  for (const auto& de : fs::directory_iterator(dir_)) {
    if (de.path().extension() == ".txt") out.push_back(de.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

HttpChatProvider::HttpChatProvider(HttpProviderSettings settings) : settings_(std::move(settings)) {}

std::string HttpChatProvider::build_body(const PromptRequest& request) {
  json body = {{"model", request.model},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  if (!request.effort.empty()) body["reasoning_effort"] = request.effort;
  return body.dump();
}

std::string HttpChatProvider::extract_content(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw GatewayError("provider returned malformed JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    std::string msg = "provider response has no message content";
    if (j.contains("error")) msg += ": " + j["error"].dump();
    throw GatewayError(msg);
  }
}

std::string HttpChatProvider::complete(const PromptRequest& request) {
  const char* key = std::getenv(settings_.credential_env.c_str());
  if (!key || !*key) {
    throw GatewayError(error_stage(request.stage),
                       "credential variable " + settings_.credential_env + " is not set");
  }
  httplib::Client client(settings_.endpoint);
  client.set_connection_timeout(30);
  auto secs = static_cast<time_t>(settings_.timeout_seconds);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const std::string body = build_body(request);

  std::string last;
  for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
    auto res = client.Post(settings_.path, headers, body, "application/json");
    if (!res) {
      last = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      return extract_content(res->body);
    } else {
      last = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
    }
    if (attempt < settings_.max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(500 << attempt));
    }
  }
  throw GatewayError(error_stage(request.stage),
                     std::string(stage_id(request.stage)) + " request failed: " + last);
}

ScriptedProvider::ScriptedProvider(fs::path dir) : dir_(std::move(dir)) {}

std::string ScriptedProvider::complete(const PromptRequest& request) {
  int n;
  {
    std::lock_guard lock(mu_);
    n = ++calls_[request.stage];
  }
  const std::string stage(stage_id(request.stage));
  fs::path numbered = dir_ / (stage + "_" + std::to_string(n) + ".txt");
  if (fs::exists(numbered)) return read_file(numbered);
  fs::path fallback = dir_ / (stage + ".txt");
  if (fs::exists(fallback)) return read_file(fallback);
  throw GatewayError(error_stage(request.stage),
                     "scripted provider has no response " + numbered.string());
}

int ScriptedProvider::calls(PromptStage stage) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(stage);
  return it == calls_.end() ? 0 : it->second;
}

Gateway::Gateway(GatewayMode mode, fs::path cache_dir, std::unique_ptr<Provider> provider,
                 std::string model)
    : mode_(mode), cache_(std::move(cache_dir)), provider_(std::move(provider)),
      model_(std::move(model)) {
  if (mode_ == GatewayMode::Live && !provider_) throw ConfigError("live mode requires a provider");
}

void Gateway::set_transcript_dir(std::optional<fs::path> dir) {
  std::lock_guard lock(mu_);
  transcript_dir_ = std::move(dir);
  transcript_seq_ = 0;
  if (transcript_dir_) fs::create_directories(*transcript_dir_);
}

std::string Gateway::complete(PromptStage stage, const std::string& template_id,
                              const std::string& prompt) {
  return complete(PromptRequest{stage, template_id, prompt, model_, effort_});
}

std::string Gateway::complete(const PromptRequest& request) {
  const std::string key = cache_key(request.model, request.prompt);
  if (auto hit = cache_.lookup(key)) {
    std::lock_guard lock(mu_);
    ++stats_.cache_hits;
    write_transcript(request, key, *hit, true);
    return *hit;
  }
  if (mode_ == GatewayMode::Replay) {
    throw ReplayMissError(key, std::string(stage_id(request.stage)));
  }
  auto start = std::chrono::steady_clock::now();
  std::string response = provider_->complete(request);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  cache_.store(key, request, response);
  std::lock_guard lock(mu_);
  ++stats_.provider_calls;
  stats_.llm_seconds += secs;
  write_transcript(request, key, response, false);
  return response;
}

void Gateway::write_transcript(const PromptRequest& request, const std::string& key,
                               const std::string& response, bool cached) {
  if (!transcript_dir_) return;
  char name[64];
  std::snprintf(name, sizeof name, "%02d_%s.txt", ++transcript_seq_,
                std::string(stage_id(request.stage)).c_str());
  std::ostringstream out;
  out << "stage: " << stage_id(request.stage) << "\n"
      << "template: " << request.template_id << "\n"
      << "model: " << request.model << "\n"
      << "key: " << key << "\n"
      << "source: " << (cached ? "cache" : "provider") << "\n"
      << "===== prompt =====\n"
      << request.prompt << "\n"
      << "===== response =====\n"
      << response << "\n";
  write_atomic(*transcript_dir_ / name, out.str());
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace cofact

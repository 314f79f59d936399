#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "icl_evader/backend.h"
#include "icl_evader/error.h"

namespace icl_evader {
namespace {

using nlohmann::json;

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view TrimSpace(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

}  // namespace

std::string_view BackendKindName(BackendKind kind) {
  return kind == BackendKind::kMock ? "mock" : "http";
}

BackendKind ParseBackendKind(std::string_view name) {
  if (name == "mock") return BackendKind::kMock;
  if (name == "http") return BackendKind::kHttp;
  throw InvalidArgument("backend must be mock or http, got '" +
                        std::string(name) + "'");
}

void BackendConfig::Validate() const {
  if (kind == BackendKind::kHttp) {
    if (!base_url || base_url->empty()) {
      throw InvalidArgument("http backend requires base_url");
    }
    if (!model_name || model_name->empty()) {
      throw InvalidArgument("http backend requires model_name");
    }
  }
  if (top_candidates < 1) {
    throw InvalidArgument("top_candidates must be >= 1");
  }
  if (max_tokens < 1 || max_tokens > 8) {
    throw InvalidArgument("max_tokens must lie in [1, 8]");
  }
  if (max_parallel_requests < 1) {
    throw InvalidArgument("max_parallel_requests must be >= 1");
  }
  if (!(request_timeout_seconds > 0.0)) {
    throw InvalidArgument("request_timeout_seconds must be positive");
  }
}

LabelScores ParseChatCompletionScores(std::string_view body,
                                      const std::vector<Label>& labels) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed response body: ") + e.what());
  }
  const json* alternatives = nullptr;
  try {
    const json& choice = doc.at("choices").at(0);
    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
      throw BackendError("logprobs unsupported: response carries no logprobs");
    }
    const json& content = choice["logprobs"].at("content");
    if (!content.is_array() || content.empty()) {
      throw BackendError("logprobs unsupported: empty logprobs content");
    }
    alternatives = &content.at(0).at("top_logprobs");
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed response: ") + e.what());
  }
  if (!alternatives->is_array()) {
    throw BackendError("logprobs unsupported: top_logprobs is not a list");
  }

  LabelScores out;
  out.log_probs.assign(labels.size(), -std::numeric_limits<double>::infinity());
  for (const json& alt : *alternatives) {
    std::string token;
    double lp = 0.0;
    try {
      token = Lower(TrimSpace(alt.at("token").get<std::string>()));
      lp = alt.at("logprob").get<double>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed top_logprobs entry: ") +
                         e.what());
    }
    if (token.empty()) continue;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const std::string name = Lower(labels[k].name());
      if (name.compare(0, token.size(), token) == 0 &&
          token.size() <= name.size()) {
        out.log_probs[k] = std::max(out.log_probs[k], lp);
        out.found_any = true;
      }
    }
  }
  for (double& lp : out.log_probs) {
    if (std::isinf(lp)) lp = kUnmatchedLogProb;
  }
  return out;
}

HttpBackend::HttpBackend(BackendConfig config)
    : config_(std::move(config)),
      in_flight_(std::max(config_.max_parallel_requests, 1)) {
  config_.kind = BackendKind::kHttp;
  config_.Validate();
  std::string url = *config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw InvalidArgument("base_url must include a scheme: " + url);
  }
  const std::size_t path_start = url.find('/', scheme + 3);
  origin_ = url.substr(0, path_start);
  path_ = (path_start == std::string::npos ? "" : url.substr(path_start)) +
          "/chat/completions";
  if (const char* key = std::getenv(config_.api_key_env.c_str());
      key != nullptr && *key != '\0') {
    api_key_ = key;
  }
}

LabelScores HttpBackend::Score(const std::string& prompt_text,
                               const std::vector<Label>& labels) {
  const json request = {
      {"model", *config_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt_text}}})},
      {"temperature", 0.0},
      {"logprobs", true},
      {"top_logprobs", config_.top_candidates},
      {"max_tokens", config_.max_tokens},
  };

  SlotGuard slot(in_flight_);
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(
      config_.request_timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);

  const httplib::Result res =
      client.Post(path_, headers, request.dump(), "application/json");
  if (!res) {
    throw BackendError("request to " + origin_ + path_ +
                       " failed: " + httplib::to_string(res.error()));
  }
  if (res->status >= 400) {
    throw BackendError("HTTP " + std::to_string(res->status) + " from " +
                       origin_ + path_ + ": " + res->body.substr(0, 200));
  }
  return ParseChatCompletionScores(res->body, labels);
}

std::unique_ptr<Backend> MakeBackend(const BackendConfig& config) {
  config.Validate();
  if (config.kind == BackendKind::kMock) return std::make_unique<MockModel>();
  return std::make_unique<HttpBackend>(config);
}

}  // namespace icl_evader

#include "llmdcd/llm_client.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "llmdcd/errors.hpp"
#include "text_util.hpp"

namespace llmdcd {

using nlohmann::json;

void LlmEndpoint::validate() const {
  if (temperature < 0) throw DomainError("temperature must be nonnegative");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

HttpChatClient::HttpChatClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
  if (endpoint_.base_url.empty()) throw DomainError("HTTP client needs a base URL");
}

std::string HttpChatClient::request_body(const LlmEndpoint& endpoint, const Conversation& conversation) {
  json messages = json::array();
  for (const auto& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", endpoint.model_name}, {"messages", messages}, {"temperature", endpoint.temperature}};
  return body.dump();
}

std::string HttpChatClient::parse_response(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat-completions reply: ") + e.what());
  }
}

std::string HttpChatClient::complete(const Conversation& conversation) {
  // Split base_url into scheme://host[:port] and a path prefix.
  const std::string& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint_.api_key_env_var.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);
  const std::string body = request_body(endpoint_, conversation);

  std::string last_error;
  for (std::size_t attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(500) * (1 << std::min<std::size_t>(attempt, 6)));
    httplib::Client client(origin);
    client.set_connection_timeout(endpoint_.timeout_seconds, 0);
    client.set_read_timeout(endpoint_.timeout_seconds, 0);
    ++requests_;
    auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
    return parse_response(res->body);
  }
  throw TransportError("chat completion failed after " + std::to_string(endpoint_.max_retries + 1) +
                       " attempts: " + last_error);
}

CachingChatClient::CachingChatClient(std::filesystem::path dir, std::string model_name,
                                     std::shared_ptr<ChatClient> inner)
    : dir_(std::move(dir)), model_(std::move(model_name)), inner_(std::move(inner)) {}

std::string CachingChatClient::prompt_text(const Conversation& conversation) {
  json messages = json::array();
  for (const auto& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  return messages.dump();
}

std::string CachingChatClient::prompt_hash(const std::string& model_name, const Conversation& conversation) {
  return sha256_hex(model_name + "\n" + prompt_text(conversation));
}

std::string CachingChatClient::complete(const Conversation& conversation) {
  const std::string hash = prompt_hash(model_, conversation);
  const auto path = dir_ / (hash + ".json");
  if (std::filesystem::exists(path)) {
    try {
      const auto doc = json::parse(detail::read_file(path));
      ++hits_;
      return doc.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError("corrupt cache entry '" + path.string() + "': " + e.what());
    }
  }
  ++misses_;
  if (!inner_) throw TransportError("no cached reply for prompt " + hash + " and no endpoint configured");
  std::string response = inner_->complete(conversation);
  const json doc = {{"prompt_hash", hash},
                    {"prompt", prompt_text(conversation)},
                    {"response", response},
                    {"timestamp", static_cast<long long>(std::time(nullptr))}};
  const auto tmp = dir_ / (hash + ".json.tmp");
  detail::write_file(tmp, doc.dump(2) + "\n");
  std::filesystem::rename(tmp, path);
  return response;
}

std::shared_ptr<ChatClient> make_client(const LlmEndpoint& endpoint) {
  endpoint.validate();
  std::shared_ptr<ChatClient> http;
  if (!endpoint.base_url.empty()) http = std::make_shared<HttpChatClient>(endpoint);
  if (endpoint.cache_dir) return std::make_shared<CachingChatClient>(*endpoint.cache_dir, endpoint.model_name, http);
  if (!http) throw DomainError("LLM endpoint needs a base URL or a cache directory");
  return http;
}

}  // namespace llmdcd

#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace llmdcd {

struct ChatMessage {
  std::string role;  ///< "system", "user" or "assistant"
  std::string content;
};

using Conversation = std::vector<ChatMessage>;

/// The endpoint could not be reached or returned an unusable reply.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anything that turns a conversation into the assistant's reply text.
/// Implementations must be safe to call from several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const Conversation& conversation) = 0;
};

struct LlmEndpoint {
  std::string base_url;  ///< e.g. https://api.openai.com/v1 ; empty means cache-only
  std::string model_name = "gpt-4-0613";
  std::string api_key_env_var = "OPENAI_API_KEY";
  double temperature = 1.0;
  std::size_t max_retries = 3;
  std::optional<std::filesystem::path> cache_dir;
  int timeout_seconds = 120;

  /// Throws DomainError when temperature < 0.
  void validate() const;
};

/// Chat-completions client: POST {base_url}/chat/completions with
/// {"model", "messages", "temperature"}; returns choices[0].message.content.
/// Transport failures, 429 and 5xx replies are retried with exponential
/// backoff up to max_retries times.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LlmEndpoint endpoint);
  std::string complete(const Conversation& conversation) override;
  std::size_t requests_sent() const { return requests_; }

  static std::string request_body(const LlmEndpoint& endpoint, const Conversation& conversation);
  /// Extracts choices[0].message.content; throws TransportError otherwise.
  static std::string parse_response(const std::string& body);

 private:
  LlmEndpoint endpoint_;
  std::atomic<std::size_t> requests_{0};
};

/// Write-through disk cache in front of another client. One JSON document per
/// conversation, {prompt_hash, prompt, response, timestamp}, named
/// <prompt_hash>.json, where the hash is SHA-256 of the model name and the
/// serialized conversation. With no inner client, a miss is a TransportError.
class CachingChatClient : public ChatClient {
 public:
  CachingChatClient(std::filesystem::path dir, std::string model_name, std::shared_ptr<ChatClient> inner);
  std::string complete(const Conversation& conversation) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

  static std::string prompt_text(const Conversation& conversation);
  static std::string prompt_hash(const std::string& model_name, const Conversation& conversation);

 private:
  std::filesystem::path dir_;
  std::string model_;
  std::shared_ptr<ChatClient> inner_;
  std::atomic<std::size_t> hits_{0}, misses_{0};
};

/// Builds the client an endpoint describes: HTTP when base_url is set,
/// wrapped in the disk cache when cache_dir is set.
std::shared_ptr<ChatClient> make_client(const LlmEndpoint& endpoint);

std::string sha256_hex(std::string_view data);

}  // namespace llmdcd

#pragma once

#include <atomic>
#include <functional>
#include <mutex>

#include "llmdcd/llm_client.hpp"

// Scripted chat client for tests: answers with a callback and counts calls.
class StubClient : public llmdcd::ChatClient {
 public:
  using Script = std::function<std::string(const llmdcd::Conversation&)>;
  explicit StubClient(Script script) : script_(std::move(script)) {}

  std::string complete(const llmdcd::Conversation& conversation) override {
    ++calls_;
    std::lock_guard<std::mutex> lock(mutex_);
    return script_(conversation);
  }
  std::size_t calls() const { return calls_; }

 private:
  Script script_;
  std::mutex mutex_;
  std::atomic<std::size_t> calls_{0};
};

// Value between the first occurrence of `open` after `key` and the next `close`.
inline std::string extract(const std::string& text, const std::string& key, char open = '"', char close = '"') {
  const auto k = text.find(key);
  if (k == std::string::npos) return {};
  const auto a = text.find(open, k + key.size());
  const auto b = text.find(close, a + 1);
  return text.substr(a + 1, b - a - 1);
}

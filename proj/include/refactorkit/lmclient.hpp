#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refactorkit/common.hpp"

namespace refactorkit::lmclient {

inline constexpr std::string_view kCassetteSchemaVersion = "refactorkit.cassette/1";

struct LmFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CassetteMiss : LmFailure {
  using LmFailure::LmFailure;
};
struct Timeout : LmFailure {
  using LmFailure::LmFailure;
};
struct RateLimited : LmFailure {
  using LmFailure::LmFailure;
};
struct AuthFailure : LmFailure {
  using LmFailure::LmFailure;
};

struct Message {
  std::string role;  // system | user | assistant
  std::string text;
  friend bool operator==(const Message&, const Message&) = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct Usage {
  std::size_t prompt = 0;
  std::size_t completion = 0;
  std::size_t total() const { return prompt + completion; }
  Usage& operator+=(const Usage& o) {
    prompt += o.prompt;
    completion += o.completion;
    return *this;
  }
  friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
  std::string text;
  Usage usage;
  std::string backend;
  friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

/// Throws SchemaError for an empty message list or an unknown role.
void validate_request(const ChatRequest& request);
Json request_json(const ChatRequest& request);
/// sha256 of the canonical request document.
std::string request_digest(const ChatRequest& request);

/// Whitespace-separated word count; the offline backends' usage estimate.
std::size_t estimate_tokens(std::string_view text);
Usage estimate_usage(const ChatRequest& request, std::string_view reply);

/// Replies from a "refactorkit.script/1" document or a bare JSON array of strings.
std::vector<std::string> load_script(const std::filesystem::path& path);  // throws SchemaError, IoFailure

class Client {
 public:
  virtual ~Client() = default;
  /// Serialized per instance; safe to share across threads.
  ChatResponse complete(const ChatRequest& request);
  virtual std::string backend() const = 0;
  Usage total_usage() const;
  std::size_t calls() const;

 protected:
  virtual ChatResponse do_complete(const ChatRequest& request) = 0;

 private:
  mutable std::mutex mu_;
  Usage total_;
  std::size_t calls_ = 0;
};

/// Replies in order; LmFailure once exhausted.
class ScriptedClient : public Client {
 public:
  explicit ScriptedClient(std::vector<std::string> replies);
  std::string backend() const override { return "scripted"; }
  std::size_t remaining() const { return replies_.size() - next_; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

/// Reply computed from the request; used for simulated models.
class FunctionClient : public Client {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  FunctionClient(std::string tag, Fn fn);
  std::string backend() const override { return tag_; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  std::string tag_;
  Fn fn_;
};

// ---------------------------------------------------------------- cassettes

enum class ReplayMode { Digest, Sequence };

struct CassetteEntry {
  std::string request_digest;
  /// Kept for inspection; never consulted when replaying.
  Json request;
  std::string response;
  Usage usage;
  std::string backend;
  friend bool operator==(const CassetteEntry&, const CassetteEntry&) = default;
};

struct Cassette {
  ReplayMode mode = ReplayMode::Sequence;
  std::vector<CassetteEntry> entries;
  Usage total_usage() const;
  friend bool operator==(const Cassette&, const Cassette&) = default;
};

Json cassette_json(const Cassette& cassette);
Cassette cassette_from_json(const Json& document);  // throws SchemaError
Cassette load_cassette(const std::filesystem::path& path);
void save_cassette(const Cassette& cassette, const std::filesystem::path& path);

class ReplayClient : public Client {
 public:
  ReplayClient(Cassette cassette, std::optional<ReplayMode> mode = std::nullopt);
  std::string backend() const override { return "replay"; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  Cassette cassette_;
  ReplayMode mode_;
  std::size_t next_ = 0;
};

/// Forwards to `inner` and rewrites the cassette file after every call.
class RecordingClient : public Client {
 public:
  RecordingClient(Client& inner, std::filesystem::path cassette_path, ReplayMode mode = ReplayMode::Sequence);
  std::string backend() const override { return inner_.backend(); }
  const Cassette& cassette() const { return cassette_; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  Client& inner_;
  std::filesystem::path path_;
  Cassette cassette_;
};

// ---------------------------------------------------------------- remote

struct RemoteConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};

  /// REFACTORKIT_LM_BASE_URL, _PATH, _MODEL, _API_KEY. nullopt without a base URL.
  static std::optional<RemoteConfig> from_env();
};

/// Chat-completions style endpoint with bearer auth.
class RemoteClient : public Client {
 public:
  explicit RemoteClient(RemoteConfig config);
  std::string backend() const override { return "remote"; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  RemoteConfig config_;
};

}  // namespace refactorkit::lmclient

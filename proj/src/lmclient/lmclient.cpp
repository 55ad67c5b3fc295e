#include "refactorkit/lmclient.hpp"

#include "httplib.h"

#include <cstdlib>
#include <sstream>
#include <thread>

namespace refactorkit::lmclient {

namespace {

bool known_role(const std::string& r) { return r == "system" || r == "user" || r == "assistant"; }

std::string mode_name(ReplayMode m) { return m == ReplayMode::Digest ? "digest" : "sequence"; }

Json usage_json(const Usage& u) { return Json{{"prompt", u.prompt}, {"completion", u.completion}}; }

Usage usage_from(const Json& j, const std::string& loc) {
  if (!j.is_object() || !j.contains("prompt") || !j.contains("completion") || !j["prompt"].is_number_unsigned() ||
      !j["completion"].is_number_unsigned())
    throw SchemaError(loc, "usage needs unsigned prompt and completion counts");
  return {j["prompt"].get<std::size_t>(), j["completion"].get<std::size_t>()};
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

}  // namespace

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) throw SchemaError("request.messages", "at least one message required");
  for (std::size_t i = 0; i < request.messages.size(); ++i)
    if (!known_role(request.messages[i].role))
      throw SchemaError("request.messages[" + std::to_string(i) + "]", "unknown role '" + request.messages[i].role + "'");
}

Json request_json(const ChatRequest& request) {
  Json msgs = Json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.text}});
  return Json{{"model", request.model},
              {"messages", msgs},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

std::string request_digest(const ChatRequest& request) { return sha256_digest(request_json(request).dump()); }

std::size_t estimate_tokens(std::string_view text) { return word_count(text); }

Usage estimate_usage(const ChatRequest& request, std::string_view reply) {
  Usage u;
  for (const auto& m : request.messages) u.prompt += estimate_tokens(m.text);
  u.completion = estimate_tokens(reply);
  return u;
}

ChatResponse Client::complete(const ChatRequest& request) {
  validate_request(request);
  std::lock_guard lock(mu_);
  ChatResponse r = do_complete(request);
  total_ += r.usage;
  ++calls_;
  return r;
}

Usage Client::total_usage() const {
  std::lock_guard lock(mu_);
  return total_;
}

std::size_t Client::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<std::string> load_script(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string(), e.what());
  }
  if (doc.is_object()) {
    reject_unknown_keys(doc, {"schema_version", "replies"}, "$");
    if (doc.value("schema_version", "") != "refactorkit.script/1")
      throw SchemaError("$.schema_version", "expected refactorkit.script/1");
    doc = doc.value("replies", Json());
  }
  if (!doc.is_array()) throw SchemaError("$.replies", "array of strings required");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_string()) throw SchemaError("$.replies[" + std::to_string(i) + "]", "string required");
    out.push_back(doc[i].get<std::string>());
  }
  return out;
}

ScriptedClient::ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}

ChatResponse ScriptedClient::do_complete(const ChatRequest& request) {
  if (next_ >= replies_.size()) throw LmFailure("script exhausted after " + std::to_string(replies_.size()) + " replies");
  const std::string& text = replies_[next_++];
  return {text, estimate_usage(request, text), backend()};
}

FunctionClient::FunctionClient(std::string tag, Fn fn) : tag_(std::move(tag)), fn_(std::move(fn)) {}

ChatResponse FunctionClient::do_complete(const ChatRequest& request) {
  std::string text = fn_(request);
  Usage u = estimate_usage(request, text);
  return {std::move(text), u, tag_};
}

// ---------------------------------------------------------------- cassettes

Usage Cassette::total_usage() const {
  Usage u;
  for (const auto& e : entries) u += e.usage;
  return u;
}

Json cassette_json(const Cassette& cassette) {
  Json entries = Json::array();
  for (const auto& e : cassette.entries)
    entries.push_back({{"request_digest", e.request_digest},
                       {"request", e.request},
                       {"response", e.response},
                       {"usage", usage_json(e.usage)},
                       {"backend", e.backend}});
  return Json{{"schema_version", kCassetteSchemaVersion}, {"mode", mode_name(cassette.mode)}, {"entries", entries}};
}

Cassette cassette_from_json(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "cassette must be an object");
  reject_unknown_keys(doc, {"schema_version", "mode", "entries"}, "$");
  if (doc.value("schema_version", "") != kCassetteSchemaVersion)
    throw SchemaError("$.schema_version", "expected " + std::string(kCassetteSchemaVersion));
  Cassette c;
  const std::string mode = doc.value("mode", "");
  if (mode == "digest") c.mode = ReplayMode::Digest;
  else if (mode == "sequence") c.mode = ReplayMode::Sequence;
  else throw SchemaError("$.mode", "expected digest or sequence");
  if (!doc.contains("entries") || !doc["entries"].is_array()) throw SchemaError("$.entries", "array required");
  for (std::size_t i = 0; i < doc["entries"].size(); ++i) {
    const Json& e = doc["entries"][i];
    const std::string loc = "$.entries[" + std::to_string(i) + "]";
    if (!e.is_object()) throw SchemaError(loc, "object required");
    reject_unknown_keys(e, {"request_digest", "request", "response", "usage", "backend"}, loc);
    if (!e.contains("request_digest") || !e["request_digest"].is_string())
      throw SchemaError(loc + ".request_digest", "string required");
    if (!e.contains("response") || !e["response"].is_string()) throw SchemaError(loc + ".response", "string required");
    c.entries.push_back({e["request_digest"].get<std::string>(), e.value("request", Json()),
                         e["response"].get<std::string>(), usage_from(e.value("usage", Json()), loc + ".usage"),
                         e.value("backend", "")});
  }
  return c;
}

Cassette load_cassette(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string(), e.what());
  }
  return cassette_from_json(doc);
}

void save_cassette(const Cassette& cassette, const std::filesystem::path& path) {
  write_file(path, cassette_json(cassette).dump(2) + "\n");
}

ReplayClient::ReplayClient(Cassette cassette, std::optional<ReplayMode> mode)
    : cassette_(std::move(cassette)), mode_(mode.value_or(cassette_.mode)) {}

ChatResponse ReplayClient::do_complete(const ChatRequest& request) {
  if (mode_ == ReplayMode::Sequence) {
    if (next_ >= cassette_.entries.size())
      throw CassetteMiss("cassette exhausted after " + std::to_string(cassette_.entries.size()) + " entries");
    const auto& e = cassette_.entries[next_++];
    return {e.response, e.usage, backend()};
  }
  const std::string digest = request_digest(request);
  for (const auto& e : cassette_.entries)
    if (e.request_digest == digest) return {e.response, e.usage, backend()};
  throw CassetteMiss("no cassette entry for " + digest);
}

RecordingClient::RecordingClient(Client& inner, std::filesystem::path cassette_path, ReplayMode mode)
    : inner_(inner), path_(std::move(cassette_path)) {
  cassette_.mode = mode;
  save_cassette(cassette_, path_);
}

ChatResponse RecordingClient::do_complete(const ChatRequest& request) {
  ChatResponse r = inner_.complete(request);
  cassette_.entries.push_back({request_digest(request), request_json(request), r.text, r.usage, r.backend});
  save_cassette(cassette_, path_);
  return r;
}

// ---------------------------------------------------------------- remote

std::optional<RemoteConfig> RemoteConfig::from_env() {
  const char* base = env("REFACTORKIT_LM_BASE_URL");
  if (!base) return std::nullopt;
  RemoteConfig c;
  c.base_url = base;
  if (const char* p = env("REFACTORKIT_LM_PATH")) c.path = p;
  if (const char* m = env("REFACTORKIT_LM_MODEL")) c.model = m;
  if (const char* k = env("REFACTORKIT_LM_API_KEY")) c.api_key = k;
  return c;
}

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {}

ChatResponse RemoteClient::do_complete(const ChatRequest& request) {
  Json body = request_json(request);
  if (body["model"].get<std::string>().empty()) body["model"] = config_.model;
  const std::string payload = body.dump();

  httplib::Client http(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  http.set_connection_timeout(secs.count(), usecs.count());
  http.set_read_timeout(secs.count(), usecs.count());
  http.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last;
  enum { kNone, kTimeout, kRate, kOther } last_kind = kNone;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = http.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last = "transport error: " + httplib::to_string(err);
      last_kind = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ? kTimeout : kOther;
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthFailure("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500) {
      last = "HTTP " + std::to_string(res->status);
      last_kind = res->status == 429 ? kRate : kOther;
      continue;
    }
    if (res->status != 200) throw LmFailure("HTTP " + std::to_string(res->status) + ": " + res->body);
    Json doc;
    try {
      doc = Json::parse(res->body);
      ChatResponse out;
      out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (doc.contains("usage")) {
        out.usage.prompt = doc["usage"].value("prompt_tokens", std::size_t{0});
        out.usage.completion = doc["usage"].value("completion_tokens", std::size_t{0});
      } else {
        out.usage = estimate_usage(request, out.text);
      }
      out.backend = backend();
      return out;
    } catch (const Json::exception& e) {
      throw LmFailure(std::string("malformed completion: ") + e.what());
    }
  }
  const std::string why = "giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last;
  if (last_kind == kTimeout) throw Timeout(why);
  if (last_kind == kRate) throw RateLimited(why);
  throw LmFailure(why);
}

}  // namespace refactorkit::lmclient

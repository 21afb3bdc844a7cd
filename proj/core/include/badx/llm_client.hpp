#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "badx/http_transport.hpp"

namespace badx {

struct Message {
  std::string role;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 512;
  int n = 5;  // generations per request (G)
  std::int64_t seed = 42;

  bool operator==(const SamplingParams&) const = default;
};

enum class PersonaGroup { Marginalized, Advantaged };
const char* to_string(PersonaGroup group);
PersonaGroup persona_group_from_string(std::string_view s);
// A-C default to marginalized, D-F to advantaged; others need an explicit
// group in the config.
std::optional<PersonaGroup> default_group_for_persona_id(std::string_view id);

struct Persona {
  std::string id;
  std::string description;
  PersonaGroup group = PersonaGroup::Marginalized;

  bool operator==(const Persona&) const = default;
};

enum class PromptTheme { Leadership, Success, Workplace, Technology,
                         Adaptability };
const char* to_string(PromptTheme theme);
PromptTheme prompt_theme_from_string(std::string_view s);

struct PromptSpec {
  std::string id;
  std::string text;
  std::optional<PromptTheme> theme;
  std::optional<std::string> class_id;  // Task-1 binding

  bool operator==(const PromptSpec&) const = default;
};

struct GenerationRecord {
  std::string prompt_id;
  std::optional<std::string> persona_id;  // absent = neutral baseline
  int generation_index = 0;
  std::string text;
  std::string model_id;
  std::string request_fingerprint;
  std::string finish_reason;
  std::string created_at;

  bool operator==(const GenerationRecord&) const = default;
};

// Persona framing: a fixed-template system message; the neutral baseline is
// the bare user prompt with identical sampling parameters.
std::vector<Message> build_messages(const std::optional<Persona>& persona,
                                    const PromptSpec& prompt);

// Canonical chat-completion payload (sorted keys, compact) and its
// FNV-1a-64 fingerprint; both are stable across runs and platforms.
std::string chat_payload_json(const std::vector<Message>& messages,
                              const SamplingParams& params,
                              const std::string& model_id);
std::string request_fingerprint(const std::vector<Message>& messages,
                                const SamplingParams& params,
                                const std::string& model_id);

struct CellKey {
  std::string prompt_id;
  std::optional<std::string> persona_id;

  std::string describe() const;
  bool operator==(const CellKey&) const = default;
};

// Append-only request/response log: one JSON-lines file per request
// fingerprint under dir, one line per attempt.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::string dir);

  void append(const std::string& fingerprint, const std::string& request_json,
              int status, const std::string& response_body,
              const std::string& timestamp);

  // Raw lines of one fingerprint's file; empty if the file is absent.
  std::vector<std::string> read_lines(const std::string& fingerprint) const;
  bool has(const std::string& fingerprint) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& fingerprint) const;
  std::string dir_;
  mutable std::mutex mu_;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Exactly params.n records (indices 0..n-1) or an error; never partial.
  virtual std::vector<GenerationRecord> generate(
      const CellKey& cell, const std::vector<Message>& messages,
      const SamplingParams& params, const std::string& model_id) = 0;
};

using Clock = std::function<std::string()>;  // ISO-8601 timestamps

struct HttpChatOptions {
  std::string endpoint;
  std::string bearer_token;
  RetryPolicy retry;
  std::shared_ptr<TranscriptStore> transcript;  // required
  Clock clock;                                  // nullptr = system clock
};

std::unique_ptr<ChatClient> make_http_chat_client(HttpChatOptions options);

// Replay client over recorded fixtures: resolves every generate call from
// <dir>/<fingerprint>.jsonl, never touches the network, never writes.
std::unique_ptr<ChatClient> load_replay(const std::string& dir);

}  // namespace badx

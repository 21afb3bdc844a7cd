#include "badx/llm_client.hpp"

#include <filesystem>
#include <fstream>
#include <utility>

#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "badx/text.hpp"
#include "json_util.hpp"
#include "timeutil.hpp"

namespace badx {

const char* to_string(PersonaGroup group) {
  return group == PersonaGroup::Marginalized ? "marginalized" : "advantaged";
}

PersonaGroup persona_group_from_string(std::string_view s) {
  if (s == "marginalized") return PersonaGroup::Marginalized;
  if (s == "advantaged") return PersonaGroup::Advantaged;
  throw Error(ErrorKind::Config,
              "unknown persona group \"" + std::string(s) +
                  "\" (expected marginalized or advantaged)");
}

std::optional<PersonaGroup> default_group_for_persona_id(std::string_view id) {
  if (id.size() != 1) return std::nullopt;
  if (id[0] >= 'A' && id[0] <= 'C') return PersonaGroup::Marginalized;
  if (id[0] >= 'D' && id[0] <= 'F') return PersonaGroup::Advantaged;
  return std::nullopt;
}

const char* to_string(PromptTheme theme) {
  switch (theme) {
    case PromptTheme::Leadership: return "leadership";
    case PromptTheme::Success: return "success";
    case PromptTheme::Workplace: return "workplace";
    case PromptTheme::Technology: return "technology";
    case PromptTheme::Adaptability: return "adaptability";
  }
  return "unknown";
}

PromptTheme prompt_theme_from_string(std::string_view s) {
  if (s == "leadership") return PromptTheme::Leadership;
  if (s == "success") return PromptTheme::Success;
  if (s == "workplace") return PromptTheme::Workplace;
  if (s == "technology") return PromptTheme::Technology;
  if (s == "adaptability") return PromptTheme::Adaptability;
  throw Error(ErrorKind::Config,
              "unknown prompt theme \"" + std::string(s) + "\"");
}

std::vector<Message> build_messages(const std::optional<Persona>& persona,
                                    const PromptSpec& prompt) {
  if (trim_view(prompt.text).empty())
    throw Error(ErrorKind::EmptyInput,
                "prompt \"" + prompt.id + "\" has empty text");
  std::vector<Message> out;
  if (persona) {
    out.push_back({"system", "You are " + persona->description +
                                 ". Answer the following from this "
                                 "perspective."});
  }
  out.push_back({"user", prompt.text});
  return out;
}

std::string chat_payload_json(const std::vector<Message>& messages,
                              const SamplingParams& params,
                              const std::string& model_id) {
  jsonu::json payload;
  payload["model"] = model_id;
  payload["messages"] = jsonu::json::array();
  for (const auto& m : messages) {
    jsonu::json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    payload["messages"].push_back(std::move(msg));
  }
  payload["temperature"] = params.temperature;
  payload["top_p"] = params.top_p;
  payload["max_tokens"] = params.max_tokens;
  payload["n"] = params.n;
  payload["seed"] = params.seed;
  return payload.dump();  // keys already sorted: canonical form
}

std::string request_fingerprint(const std::vector<Message>& messages,
                                const SamplingParams& params,
                                const std::string& model_id) {
  return fnv1a64_hex(chat_payload_json(messages, params, model_id));
}

std::string CellKey::describe() const {
  std::string out = "prompt \"" + prompt_id + "\", ";
  out += persona_id ? "persona \"" + *persona_id + "\"" : "neutral";
  return out;
}

namespace {

// Shared by the live client and replay: turn a chat-completion body into
// exactly n generation records.
std::vector<GenerationRecord> records_from_choices(
    const jsonu::json& body, const CellKey& cell, const SamplingParams& params,
    const std::string& model_id, const std::string& fingerprint,
    const std::string& created_at) {
  if (!body.is_object() || !body.contains("choices") ||
      !body.at("choices").is_array())
    throw Error(ErrorKind::MalformedResponse,
                "chat response for " + cell.describe() +
                    " has no \"choices\" array");
  const auto& choices = body.at("choices");
  if (static_cast<int>(choices.size()) != params.n)
    throw Error(ErrorKind::MalformedResponse,
                "chat response for " + cell.describe() + " has " +
                    std::to_string(choices.size()) + " choices, expected " +
                    std::to_string(params.n));

  std::vector<GenerationRecord> records(
      static_cast<std::size_t>(params.n));
  std::vector<bool> filled(records.size(), false);
  for (std::size_t pos = 0; pos < choices.size(); ++pos) {
    const auto& choice = choices.at(pos);
    if (!choice.is_object() || !choice.contains("message") ||
        !choice.at("message").is_object() ||
        !choice.at("message").contains("content") ||
        !choice.at("message").at("content").is_string())
      throw Error(ErrorKind::MalformedResponse,
                  "choice " + std::to_string(pos) + " for " +
                      cell.describe() + " is missing message.content");
    std::size_t index = pos;
    if (choice.contains("index")) {
      if (!choice.at("index").is_number_integer())
        throw Error(ErrorKind::MalformedResponse,
                    "choice index must be an integer");
      auto declared = choice.at("index").get<std::int64_t>();
      if (declared < 0 || declared >= params.n)
        throw Error(ErrorKind::MalformedResponse,
                    "choice index " + std::to_string(declared) +
                        " out of range for n=" + std::to_string(params.n));
      index = static_cast<std::size_t>(declared);
    }
    if (filled[index])
      throw Error(ErrorKind::MalformedResponse,
                  "duplicate choice index " + std::to_string(index));
    filled[index] = true;

    GenerationRecord& rec = records[index];
    rec.prompt_id = cell.prompt_id;
    rec.persona_id = cell.persona_id;
    rec.generation_index = static_cast<int>(index);
    rec.text = choice.at("message").at("content").get<std::string>();
    rec.model_id = model_id;
    rec.request_fingerprint = fingerprint;
    if (choice.contains("finish_reason") &&
        choice.at("finish_reason").is_string())
      rec.finish_reason = choice.at("finish_reason").get<std::string>();
    rec.created_at = created_at;
  }
  return records;
}

[[noreturn]] void throw_for_status(int status, const std::string& detail,
                                   const CellKey& cell) {
  std::string where = " for " + cell.describe();
  if (status == 401 || status == 403)
    throw Error(ErrorKind::Auth,
                "chat endpoint rejected credentials (HTTP " +
                    std::to_string(status) + ")" + where +
                    "; set BADX_API_KEY or the per-model variant");
  if (status == 429)
    throw Error(ErrorKind::RateLimited,
                "chat endpoint still rate-limiting after retries" + where);
  if (status == 0 || (status >= 500 && status <= 599))
    throw Error(ErrorKind::Network,
                "chat request failed after retries" + where +
                    (status == 0 ? ": " + detail
                                 : ": HTTP " + std::to_string(status)));
  throw Error(ErrorKind::Protocol, "unexpected HTTP " +
                                       std::to_string(status) +
                                       " from chat endpoint" + where);
}

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatOptions options)
      : options_(std::move(options)) {
    if (!options_.transcript)
      throw Error(ErrorKind::Config,
                  "live chat client requires a transcript store");
    if (!options_.clock) options_.clock = iso8601_utc_now;
  }

  std::vector<GenerationRecord> generate(const CellKey& cell,
                                         const std::vector<Message>& messages,
                                         const SamplingParams& params,
                                         const std::string& model_id) override {
    std::string payload = chat_payload_json(messages, params, model_id);
    std::string fp = fnv1a64_hex(payload);

    std::map<std::string, std::string> headers;
    if (!options_.bearer_token.empty())
      headers["Authorization"] = "Bearer " + options_.bearer_token;

    HttpResponse resp = http_post_json_with_retry(
        options_.endpoint + "/v1/chat/completions", payload, headers,
        options_.retry, [&](const HttpResponse& attempt) {
          options_.transcript->append(fp, payload, attempt.status,
                                      attempt.body, options_.clock());
        });

    if (resp.status < 200 || resp.status >= 300)
      throw_for_status(resp.status, resp.body, cell);
    jsonu::json body = jsonu::json::parse(resp.body, nullptr, false);
    if (body.is_discarded())
      throw Error(ErrorKind::MalformedResponse,
                  "chat response for " + cell.describe() + " is not JSON");
    return records_from_choices(body, cell, params, model_id, fp,
                                options_.clock());
  }

 private:
  HttpChatOptions options_;
};

class ReplayChatClient final : public ChatClient {
 public:
  explicit ReplayChatClient(std::string dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
      throw Error(ErrorKind::Io,
                  "replay directory " + dir_ + " does not exist");
  }

  std::vector<GenerationRecord> generate(const CellKey& cell,
                                         const std::vector<Message>& messages,
                                         const SamplingParams& params,
                                         const std::string& model_id) override {
    std::string fp = request_fingerprint(messages, params, model_id);
    std::string path = dir_ + "/" + fp + ".jsonl";
    if (!std::filesystem::exists(path))
      throw Error(ErrorKind::FixtureMissing,
                  "no replay fixture for " + cell.describe() +
                      " (fingerprint " + fp + ")");

    // The last line is the attempt that succeeded (earlier lines may be
    // recorded 429s/5xxs).
    std::string last;
    {
      std::ifstream in(path, std::ios::binary);
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) last = line;
    }
    if (last.empty())
      throw Error(ErrorKind::FixtureMissing,
                  "replay fixture for " + cell.describe() + " is empty");

    jsonu::json entry = jsonu::parse_text(last, "replay fixture line");
    if (!entry.is_object() || !entry.contains("response") ||
        !entry.at("response").is_object())
      throw Error(ErrorKind::Schema,
                  "replay fixture for " + cell.describe() +
                      " has no response object");
    const auto& response = entry.at("response");
    int status = response.contains("status")
                     ? response.at("status").get<int>()
                     : 200;
    if (status < 200 || status >= 300)
      throw_for_status(status, "recorded failure", cell);
    std::string t = entry.contains("t") && entry.at("t").is_string()
                        ? entry.at("t").get<std::string>()
                        : std::string("1970-01-01T00:00:00Z");
    if (!response.contains("body"))
      throw Error(ErrorKind::Schema,
                  "replay fixture for " + cell.describe() + " has no body");
    return records_from_choices(response.at("body"), cell, params, model_id,
                                fp, t);
  }

 private:
  std::string dir_;
};

}  // namespace

std::unique_ptr<ChatClient> make_http_chat_client(HttpChatOptions options) {
  return std::make_unique<HttpChatClient>(std::move(options));
}

std::unique_ptr<ChatClient> load_replay(const std::string& dir) {
  return std::make_unique<ReplayChatClient>(dir);
}

}  // namespace badx

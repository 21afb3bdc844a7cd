// fixturegen: builds deterministic offline replay fixtures for an audit
// config. One JSONL file per request fingerprint, shaped exactly like a
// recorded transcript line, so the replay client can serve it.
//
// Response texts are synthesized from the identity-class lexicons with a
// persona-dependent lean, so scores, BAD gaps and volatility are all
// non-trivial yet bit-reproducible.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "badx/audit.hpp"
#include "badx/config.hpp"
#include "badx/corpus.hpp"
#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "badx/llm_client.hpp"

namespace {

using nlohmann::json;

constexpr const char* kEpoch = "1970-01-01T00:00:00Z";

const std::vector<std::string> kRoles = {"colleagues", "leaders", "engineers",
                                         "mentors", "candidates"};
const std::vector<std::string> kSettings = {
    "the workplace", "team settings", "hiring panels", "technical reviews",
    "public forums"};

std::string pick(const std::vector<std::string>& pool, badx::SplitMix64& rng) {
  return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

// One synthetic sentence: a target-side mention plus an attribute-side
// mention from the same class, stereotypical or counter-stereotypical.
std::string make_sentence(const badx::IdentityClass& cls, bool stereotypical,
                          badx::SplitMix64& rng) {
  bool first_target = rng.next_below(2) == 0;
  const auto& targets = first_target ? cls.targets_1 : cls.targets_2;
  // Orientation: targets_1 with attributes_1 reads stereotypical; flipping
  // either side flips the association.
  bool first_attr = first_target == stereotypical;
  const auto& attrs = first_attr ? cls.attributes_1 : cls.attributes_2;
  std::string target = pick(targets, rng);
  std::string attr = pick(attrs, rng);
  std::string role = pick(kRoles, rng);
  std::string setting = pick(kSettings, rng);
  switch (rng.next_below(3)) {
    case 0:
      return "Many " + target + " " + role + " are described as " + attr +
             " in " + setting + ".";
    case 1:
      return "In " + setting + ", " + target + " " + role +
             " often come across as " + attr + ".";
    default:
      return "Reviews from " + setting + " call " + target + " " + role +
             " notably " + attr + ".";
  }
}

std::string make_response_text(const std::vector<badx::IdentityClass>& classes,
                               const std::string& model_id,
                               const std::string& prompt_id,
                               const std::optional<std::string>& persona_id,
                               const badx::PersonaGroup* group, int gen_index) {
  std::string seed_material = model_id + "|" + prompt_id + "|" +
                              (persona_id ? *persona_id : "neutral") + "|" +
                              std::to_string(gen_index);
  badx::SplitMix64 rng(badx::fnv1a64(seed_material));

  // Marginalized personas lean stereotypical, advantaged personas lean the
  // other way, the neutral baseline sits in between; generations within a
  // cell still vary, which is what the volatility statistic measures.
  int stereo_percent = 50;
  if (group)
    stereo_percent =
        *group == badx::PersonaGroup::Marginalized ? 68 : 32;

  std::string text;
  int sentences = 3 + static_cast<int>(rng.next_below(2));
  for (int s = 0; s < sentences; ++s) {
    const auto& cls =
        classes[static_cast<std::size_t>(rng.next_below(classes.size()))];
    bool stereotypical =
        static_cast<int>(rng.next_below(100)) < stereo_percent;
    if (s > 0) text += " ";
    text += make_sentence(cls, stereotypical, rng);
  }
  return text;
}

void write_fixture(const std::string& out_dir,
                   const std::vector<badx::Message>& messages,
                   const badx::SamplingParams& params,
                   const std::string& model_id, const std::string& text_key,
                   const std::vector<std::string>& texts) {
  std::string payload = badx::chat_payload_json(messages, params, model_id);
  std::string fp = badx::request_fingerprint(messages, params, model_id);

  json choices = json::array();
  for (std::size_t i = 0; i < texts.size(); ++i)
    choices.push_back({{"index", static_cast<int>(i)},
                       {"message",
                        {{"role", "assistant"}, {"content", texts[i]}}},
                       {"finish_reason", "stop"}});
  json line;
  line["fp"] = fp;
  line["request"] = json::parse(payload);
  line["response"] = {{"status", 200},
                      {"body",
                       {{"id", "fixture-" + fp},
                        {"model", model_id},
                        {"choices", choices}}}};
  line["t"] = kEpoch;

  std::string path = out_dir + "/" + fp + ".jsonl";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw badx::Error(badx::ErrorKind::Io, "cannot write " + path);
  out << line.dump() << "\n";
  std::cerr << text_key << " -> " << fp << ".jsonl\n";
}

void generate_cell(const std::string& out_dir,
                   const std::vector<badx::IdentityClass>& classes,
                   const std::string& model_id,
                   const badx::PromptSpec& prompt,
                   const std::optional<badx::Persona>& persona,
                   const badx::SamplingParams& params) {
  std::vector<std::string> texts;
  const badx::PersonaGroup* group = persona ? &persona->group : nullptr;
  std::optional<std::string> persona_id;
  if (persona) persona_id = persona->id;
  for (int i = 0; i < params.n; ++i)
    texts.push_back(make_response_text(classes, model_id, prompt.id,
                                       persona_id, group, i));
  auto messages = badx::build_messages(persona, prompt);
  std::string key = persona ? prompt.id + "/" + persona->id
                            : prompt.id + "/neutral";
  write_fixture(out_dir, messages, params, model_id, key, texts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate offline replay fixtures for an audit config"};
  std::string config_path, out_dir, task = "task2";
  app.add_option("--config", config_path, "audit config JSON")->required();
  app.add_option("--out", out_dir, "fixture output directory")->required();
  app.add_option("--task", task, "task1, task2 or both");
  CLI11_PARSE(app, argc, argv);

  try {
    badx::AuditConfig config = badx::parse_config(config_path);
    std::vector<badx::IdentityClass> classes =
        badx::load_classes(config.classes_path);
    std::filesystem::create_directories(out_dir);

    int files = 0;
    for (const auto& model : config.models) {
      if (task == "task2" || task == "both") {
        for (const auto& prompt : config.prompts) {
          generate_cell(out_dir, classes, model.model_id, prompt, std::nullopt,
                        config.sampling);
          ++files;
          for (const auto& persona : config.personas) {
            generate_cell(out_dir, classes, model.model_id, prompt, persona,
                          config.sampling);
            ++files;
          }
        }
      }
      if (task == "task1" || task == "both") {
        for (const auto& prompt : badx::build_task1_prompts(classes)) {
          generate_cell(out_dir, classes, model.model_id, prompt, std::nullopt,
                        config.sampling);
          ++files;
        }
      }
    }
    std::cerr << files << " fixture file(s) in " << out_dir << "\n";
  } catch (const badx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

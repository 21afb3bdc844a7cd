#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "badx/association.hpp"
#include "badx/embedding.hpp"
#include "badx/explain.hpp"
#include "badx/llm_client.hpp"

namespace badx {

// The three embedding roles a model binding must fill: term lookups for
// I-WEAT, mention-in-context embeddings for CEAT, and whole-sentence
// embeddings for I-SEAT.
struct ProviderBindings {
  ProviderConfig word = default_provider();
  ProviderConfig contextual = default_provider();
  ProviderConfig sentence = default_provider();

  static ProviderConfig default_provider() {
    ProviderConfig p;
    p.kind = ProviderKind::Deterministic;
    p.dim = 64;
    return p;
  }
};

struct ModelConfig {
  std::string model_id;
  std::string endpoint;  // chat endpoint; empty means replay-only
  ProviderBindings providers;
};

struct AuditConfig {
  std::vector<ModelConfig> models;
  std::string classes_path;
  std::string corpus_path;
  std::string output_dir;
  std::vector<Persona> personas;
  std::vector<PromptSpec> prompts;
  SamplingParams sampling;
  PerturbConfig lime;
  NormalizationMode normalization = NormalizationMode::Raw;
  int concurrency = 1;
  ClassBinding binding = ClassBinding::AllClasses;
  ScoringOptions scoring;
};

// Strict parse: every key must be known, errors carry the JSON path of the
// offending key. Credentials never appear in configs; they come from the
// environment (BADX_API_KEY / BADX_API_KEY_<MODEL-ID>).
AuditConfig parse_config(const std::string& path);
AuditConfig parse_config_json(std::string_view text, const std::string& origin);

// Full serialization including applied defaults; parse(serialize(c)) is
// value-identical to c.
std::string serialize_config(const AuditConfig& config);

}  // namespace badx

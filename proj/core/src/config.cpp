// Strict audit configuration: one JSON file drives both tasks.

#include "badx/config.hpp"

#include <string>

#include "badx/error.hpp"
#include "json_util.hpp"

namespace badx {

namespace {

using jsonu::json;

// Optional-key readers layered over the strict getters: absent keys keep
// the default already sitting in the target.
void opt_double(const json& obj, const char* key, const std::string& ctx,
                double& target) {
  if (obj.contains(key)) target = jsonu::get_double(obj, key, ctx);
}

void opt_int(const json& obj, const char* key, const std::string& ctx,
             std::int64_t& target) {
  if (obj.contains(key)) target = jsonu::get_int(obj, key, ctx);
}

void opt_int32(const json& obj, const char* key, const std::string& ctx,
               int& target) {
  if (obj.contains(key)) {
    std::int64_t v = jsonu::get_int(obj, key, ctx);
    target = static_cast<int>(v);
  }
}

void opt_uint64(const json& obj, const char* key, const std::string& ctx,
                std::uint64_t& target) {
  if (obj.contains(key))
    target = static_cast<std::uint64_t>(jsonu::get_int(obj, key, ctx));
}

void opt_string(const json& obj, const char* key, const std::string& ctx,
                std::string& target) {
  if (obj.contains(key)) target = jsonu::get_string(obj, key, ctx);
}

[[noreturn]] void config_error(const std::string& path,
                               const std::string& message) {
  throw Error(ErrorKind::Config, path + ": " + message);
}

// Enum parsers throw with only the bad token; re-anchor them to the key's
// JSON path so config errors are actionable.
template <typename Fn>
auto parse_enum(const std::string& value, const std::string& ctx, Fn&& fn) {
  try {
    return fn(value);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, ctx + ": " + e.what());
  }
}

ProviderConfig parse_provider(const json& obj, const std::string& ctx) {
  jsonu::require_keys(obj, ctx, {"kind"},
                      {"model_id", "endpoint", "dim", "file_path",
                       "cache_path"});
  ProviderConfig p;
  p.kind = parse_enum(jsonu::get_string(obj, "kind", ctx), ctx + ".kind",
                      [](const std::string& s) {
                        return provider_kind_from_string(s);
                      });
  // Deterministic bindings keep their dim-64 default unless overridden.
  if (p.kind == ProviderKind::Deterministic) p.dim = 64;
  opt_string(obj, "model_id", ctx, p.model_id);
  opt_string(obj, "endpoint", ctx, p.endpoint);
  opt_int32(obj, "dim", ctx, p.dim);
  opt_string(obj, "file_path", ctx, p.file_path);
  opt_string(obj, "cache_path", ctx, p.cache_path);
  return p;
}

ModelConfig parse_model(const json& obj, const std::string& ctx) {
  jsonu::require_keys(obj, ctx, {"model_id"}, {"endpoint", "providers"});
  ModelConfig m;
  m.model_id = jsonu::get_string(obj, "model_id", ctx);
  if (m.model_id.empty()) config_error(ctx, "model_id must be non-empty");
  opt_string(obj, "endpoint", ctx, m.endpoint);
  if (obj.contains("providers")) {
    const json& prov = jsonu::get_object(obj, "providers", ctx);
    std::string pctx = ctx + ".providers";
    jsonu::require_keys(prov, pctx, {}, {"word", "contextual", "sentence"});
    if (prov.contains("word"))
      m.providers.word = parse_provider(
          jsonu::get_object(prov, "word", pctx), pctx + ".word");
    if (prov.contains("contextual"))
      m.providers.contextual = parse_provider(
          jsonu::get_object(prov, "contextual", pctx), pctx + ".contextual");
    if (prov.contains("sentence"))
      m.providers.sentence = parse_provider(
          jsonu::get_object(prov, "sentence", pctx), pctx + ".sentence");
  }
  return m;
}

Persona parse_persona(const json& obj, const std::string& ctx) {
  jsonu::require_keys(obj, ctx, {"id", "description"}, {"group"});
  Persona p;
  p.id = jsonu::get_string(obj, "id", ctx);
  p.description = jsonu::get_string(obj, "description", ctx);
  if (obj.contains("group")) {
    p.group = parse_enum(jsonu::get_string(obj, "group", ctx), ctx + ".group",
                         [](const std::string& s) {
                           return persona_group_from_string(s);
                         });
  } else if (auto g = default_group_for_persona_id(p.id)) {
    p.group = *g;
  } else {
    config_error(ctx, "persona \"" + p.id +
                          "\" has no default group; set \"group\" to "
                          "\"marginalized\" or \"advantaged\"");
  }
  return p;
}

PromptSpec parse_prompt(const json& obj, const std::string& ctx) {
  jsonu::require_keys(obj, ctx, {"id", "text"}, {"theme", "class_id"});
  PromptSpec p;
  p.id = jsonu::get_string(obj, "id", ctx);
  p.text = jsonu::get_string(obj, "text", ctx);
  if (obj.contains("theme"))
    p.theme = parse_enum(jsonu::get_string(obj, "theme", ctx), ctx + ".theme",
                         [](const std::string& s) {
                           return prompt_theme_from_string(s);
                         });
  if (obj.contains("class_id"))
    p.class_id = jsonu::get_string(obj, "class_id", ctx);
  return p;
}

json provider_to_json(const ProviderConfig& p) {
  json j;
  j["kind"] = to_string(p.kind);
  j["model_id"] = p.model_id;
  j["endpoint"] = p.endpoint;
  j["dim"] = p.dim;
  j["file_path"] = p.file_path;
  j["cache_path"] = p.cache_path;
  return j;
}

}  // namespace

AuditConfig parse_config_json(std::string_view text,
                              const std::string& origin) {
  json root = jsonu::parse_text(text, origin);
  jsonu::require_keys(root, origin,
                      {"models", "classes_path", "corpus_path", "output_dir"},
                      {"personas", "prompts", "sampling", "lime",
                       "normalization", "concurrency", "scoring"});

  AuditConfig config;
  const json& models = jsonu::get_array(root, "models", origin);
  if (models.empty())
    config_error(origin + ".models", "at least one model is required");
  for (std::size_t i = 0; i < models.size(); ++i) {
    std::string ctx = origin + ".models[" + std::to_string(i) + "]";
    if (!models[i].is_object())
      throw Error(ErrorKind::Schema, ctx + " must be an object");
    config.models.push_back(parse_model(models[i], ctx));
  }

  config.classes_path = jsonu::get_string(root, "classes_path", origin);
  config.corpus_path = jsonu::get_string(root, "corpus_path", origin);
  config.output_dir = jsonu::get_string(root, "output_dir", origin);

  if (root.contains("personas")) {
    const json& personas = jsonu::get_array(root, "personas", origin);
    for (std::size_t i = 0; i < personas.size(); ++i) {
      std::string ctx = origin + ".personas[" + std::to_string(i) + "]";
      if (!personas[i].is_object())
        throw Error(ErrorKind::Schema, ctx + " must be an object");
      config.personas.push_back(parse_persona(personas[i], ctx));
    }
  }
  if (root.contains("prompts")) {
    const json& prompts = jsonu::get_array(root, "prompts", origin);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      std::string ctx = origin + ".prompts[" + std::to_string(i) + "]";
      if (!prompts[i].is_object())
        throw Error(ErrorKind::Schema, ctx + " must be an object");
      config.prompts.push_back(parse_prompt(prompts[i], ctx));
    }
  }

  if (root.contains("sampling")) {
    const json& s = jsonu::get_object(root, "sampling", origin);
    std::string ctx = origin + ".sampling";
    jsonu::require_keys(s, ctx, {},
                        {"temperature", "top_p", "max_tokens", "n", "seed"});
    opt_double(s, "temperature", ctx, config.sampling.temperature);
    opt_double(s, "top_p", ctx, config.sampling.top_p);
    opt_int32(s, "max_tokens", ctx, config.sampling.max_tokens);
    opt_int32(s, "n", ctx, config.sampling.n);
    opt_int(s, "seed", ctx, config.sampling.seed);
    if (config.sampling.temperature < 0.0)
      config_error(ctx + ".temperature", "must be >= 0");
    if (config.sampling.top_p <= 0.0 || config.sampling.top_p > 1.0)
      config_error(ctx + ".top_p", "must be in (0, 1]");
    if (config.sampling.max_tokens < 1)
      config_error(ctx + ".max_tokens", "must be >= 1");
    if (config.sampling.n < 1) config_error(ctx + ".n", "must be >= 1");
  }

  if (root.contains("lime")) {
    const json& l = jsonu::get_object(root, "lime", origin);
    std::string ctx = origin + ".lime";
    jsonu::require_keys(l, ctx, {},
                        {"n_samples", "keep_prob", "kernel_width",
                         "ridge_lambda", "seed"});
    opt_int32(l, "n_samples", ctx, config.lime.n_samples);
    opt_double(l, "keep_prob", ctx, config.lime.keep_prob);
    opt_double(l, "kernel_width", ctx, config.lime.kernel_width);
    opt_double(l, "ridge_lambda", ctx, config.lime.ridge_lambda);
    opt_uint64(l, "seed", ctx, config.lime.seed);
    if (config.lime.n_samples < 1)
      config_error(ctx + ".n_samples", "must be >= 1");
    if (config.lime.keep_prob <= 0.0 || config.lime.keep_prob > 1.0)
      config_error(ctx + ".keep_prob", "must be in (0, 1]");
    if (config.lime.kernel_width <= 0.0)
      config_error(ctx + ".kernel_width", "must be > 0");
    if (config.lime.ridge_lambda < 0.0)
      config_error(ctx + ".ridge_lambda", "must be >= 0");
  }

  if (root.contains("normalization"))
    config.normalization =
        parse_enum(jsonu::get_string(root, "normalization", origin),
                   origin + ".normalization", [](const std::string& s) {
                     return normalization_from_string(s);
                   });

  if (root.contains("concurrency")) {
    config.concurrency =
        static_cast<int>(jsonu::get_int(root, "concurrency", origin));
    if (config.concurrency < 1)
      config_error(origin + ".concurrency", "must be >= 1");
  }

  if (root.contains("scoring")) {
    const json& s = jsonu::get_object(root, "scoring", origin);
    std::string ctx = origin + ".scoring";
    jsonu::require_keys(s, ctx, {},
                        {"class_binding", "ceat_max_windows", "seed"});
    if (s.contains("class_binding"))
      config.binding =
          parse_enum(jsonu::get_string(s, "class_binding", ctx),
                     ctx + ".class_binding", [](const std::string& v) {
                       return class_binding_from_string(v);
                     });
    opt_int32(s, "ceat_max_windows", ctx, config.scoring.ceat_max_windows);
    opt_uint64(s, "seed", ctx, config.scoring.seed);
    if (config.scoring.ceat_max_windows < 1)
      config_error(ctx + ".ceat_max_windows", "must be >= 1");
  }

  return config;
}

AuditConfig parse_config(const std::string& path) {
  return parse_config_json(jsonu::read_text_file(path), path);
}

std::string serialize_config(const AuditConfig& config) {
  json root;
  root["classes_path"] = config.classes_path;
  root["corpus_path"] = config.corpus_path;
  root["output_dir"] = config.output_dir;
  root["normalization"] = to_string(config.normalization);
  root["concurrency"] = config.concurrency;

  root["models"] = json::array();
  for (const auto& m : config.models) {
    json j;
    j["model_id"] = m.model_id;
    j["endpoint"] = m.endpoint;
    j["providers"] = {{"word", provider_to_json(m.providers.word)},
                      {"contextual", provider_to_json(m.providers.contextual)},
                      {"sentence", provider_to_json(m.providers.sentence)}};
    root["models"].push_back(std::move(j));
  }

  root["personas"] = json::array();
  for (const auto& p : config.personas) {
    json j;
    j["id"] = p.id;
    j["description"] = p.description;
    j["group"] = to_string(p.group);
    root["personas"].push_back(std::move(j));
  }

  root["prompts"] = json::array();
  for (const auto& p : config.prompts) {
    json j;
    j["id"] = p.id;
    j["text"] = p.text;
    if (p.theme) j["theme"] = to_string(*p.theme);
    if (p.class_id) j["class_id"] = *p.class_id;
    root["prompts"].push_back(std::move(j));
  }

  root["sampling"] = {{"temperature", config.sampling.temperature},
                      {"top_p", config.sampling.top_p},
                      {"max_tokens", config.sampling.max_tokens},
                      {"n", config.sampling.n},
                      {"seed", config.sampling.seed}};
  root["lime"] = {{"n_samples", config.lime.n_samples},
                  {"keep_prob", config.lime.keep_prob},
                  {"kernel_width", config.lime.kernel_width},
                  {"ridge_lambda", config.lime.ridge_lambda},
                  {"seed", static_cast<std::int64_t>(config.lime.seed)}};
  root["scoring"] = {{"class_binding", to_string(config.binding)},
                     {"ceat_max_windows", config.scoring.ceat_max_windows},
                     {"seed", static_cast<std::int64_t>(config.scoring.seed)}};
  return root.dump(2) + "\n";
}

}  // namespace badx

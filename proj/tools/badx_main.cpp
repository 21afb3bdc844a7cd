// badx: persona-conditioned bias audit CLI over the core library.
//
// Exit codes: 0 success, 1 validation findings / golden mismatch,
// 2 provider or runtime failure, 3 configuration error.

#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "badx/audit.hpp"
#include "badx/config.hpp"
#include "badx/corpus.hpp"
#include "badx/error.hpp"
#include "badx/explain.hpp"
#include "badx/hash.hpp"
#include "badx/llm_client.hpp"
#include "badx/report.hpp"

namespace {

using nlohmann::json;

std::atomic<bool> g_interrupted{false};

void on_sigint(int) { g_interrupted.store(true); }

constexpr const char* kEpochTimestamp = "1970-01-01T00:00:00Z";

// Secrets come from the environment only: the per-model variable wins,
// BADX_API_KEY is the fallback. Model ids are uppercased with every
// non-alphanumeric byte mapped to '_'.
std::string env_api_key(const std::string& model_id) {
  std::string suffix;
  for (unsigned char c : model_id)
    suffix += std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_';
  std::string per_model = "BADX_API_KEY_" + suffix;
  if (const char* v = std::getenv(per_model.c_str())) return v;
  if (const char* v = std::getenv("BADX_API_KEY")) return v;
  return "";
}

std::string sanitize_for_path(const std::string& id) {
  std::string out;
  for (unsigned char c : id)
    out += (std::isalnum(c) || c == '.' || c == '_' || c == '-')
               ? static_cast<char>(c)
               : '_';
  return out;
}

// Any failure to assemble a usable configuration is a config error (exit 3),
// whatever the underlying error kind was.
badx::AuditConfig load_config(const std::string& path) {
  try {
    return badx::parse_config(path);
  } catch (const badx::Error& e) {
    throw badx::Error(badx::ErrorKind::Config, e.what());
  }
}

badx::ProviderSet build_providers(const badx::ModelConfig& model) {
  auto build = [&](const badx::ProviderConfig& pc) {
    badx::RemoteOptions remote;
    remote.bearer_token =
        env_api_key(pc.model_id.empty() ? model.model_id : pc.model_id);
    return std::shared_ptr<badx::EmbeddingProvider>(
        badx::make_provider(pc, nullptr, remote));
  };
  badx::ProviderSet set;
  set.word = build(model.providers.word);
  set.contextual = build(model.providers.contextual);
  set.sentence = build(model.providers.sentence);
  return set;
}

std::unique_ptr<badx::ChatClient> build_chat_client(
    const badx::ModelConfig& model, const std::string& replay_dir,
    const std::string& run_dir, const badx::Clock& clock) {
  if (!replay_dir.empty()) return badx::load_replay(replay_dir);
  if (model.endpoint.empty())
    throw badx::Error(badx::ErrorKind::Config,
                      "model \"" + model.model_id +
                          "\" has no endpoint; add one to the config or pass "
                          "--replay");
  badx::HttpChatOptions options;
  options.endpoint = model.endpoint;
  options.bearer_token = env_api_key(model.model_id);
  options.transcript =
      std::make_shared<badx::TranscriptStore>(run_dir + "/transcript");
  options.clock = clock;
  return badx::make_http_chat_client(std::move(options));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw badx::Error(badx::ErrorKind::Io, "cannot write " + path);
  out << content;
}

int exit_code_for(const badx::Error& e) {
  switch (e.kind()) {
    case badx::ErrorKind::Config:
    case badx::ErrorKind::UnknownKey:
      return 3;
    default:
      return 2;
  }
}

struct CommandContext {
  bool json_output = false;
  std::string command;
  json result = json::object();
};

// ---- corpus ---------------------------------------------------------------

int cmd_corpus_validate(CommandContext& ctx, const std::string& path) {
  badx::Corpus corpus = badx::load_corpus_unchecked(path);
  badx::ValidationReport findings = badx::validate_corpus(corpus);
  ctx.result["findings"] = json::array();
  for (const auto& f : findings) {
    ctx.result["findings"].push_back(
        {{"id", f.id}, {"rule", f.rule}, {"message", f.message}});
    std::cerr << f.id << " [" << f.rule << "] " << f.message << "\n";
  }
  ctx.result["record_count"] = corpus.records.size();
  if (findings.empty())
    std::cerr << "corpus ok: " << corpus.records.size() << " records, "
              << corpus.classes.size() << " classes\n";
  return findings.empty() ? 0 : 1;
}

int cmd_corpus_iibs(CommandContext& ctx, const std::string& path) {
  badx::Corpus corpus = badx::load_corpus(path);
  double iibs = badx::compute_iibs(corpus);
  ctx.result["iibs"] = iibs;
  ctx.result["record_count"] = corpus.records.size();
  std::cerr << "IIBS " << iibs << " over " << corpus.records.size()
            << " records\n";
  std::cout << (ctx.json_output ? "" : badx::format_rounded(iibs, 3) + "\n");
  return 0;
}

// ---- task runs ------------------------------------------------------------

struct TaskArgs {
  std::string config_path;
  std::string replay_dir;
  bool keep_going = false;
};

badx::RunOptions make_run_options(const badx::AuditConfig& config,
                                  const TaskArgs& args,
                                  const std::string& run_dir) {
  badx::RunOptions options;
  options.run_dir = run_dir;
  options.keep_going = args.keep_going;
  options.concurrency = config.concurrency;
  options.normalization = config.normalization;
  options.binding = config.binding;
  options.scoring = config.scoring;
  options.config_snapshot = badx::serialize_config(config);
  if (!args.replay_dir.empty())
    options.clock = [] { return std::string(kEpochTimestamp); };
  options.interrupted = [] { return g_interrupted.load(); };
  return options;
}

int cmd_task2(CommandContext& ctx, const TaskArgs& args) {
  badx::AuditConfig config = load_config(args.config_path);
  if (config.personas.empty())
    throw badx::Error(badx::ErrorKind::Config,
                      "task2 requires at least one persona in the config");
  if (config.prompts.empty())
    throw badx::Error(badx::ErrorKind::Config,
                      "task2 requires at least one prompt in the config");
  std::vector<badx::IdentityClass> classes =
      badx::load_classes(config.classes_path);

  ctx.result["runs"] = json::array();
  for (const auto& model : config.models) {
    std::string run_dir = config.output_dir + "/task2-" +
                          sanitize_for_path(model.model_id);
    badx::RunOptions options = make_run_options(config, args, run_dir);
    auto client =
        build_chat_client(model, args.replay_dir, run_dir, options.clock);
    badx::ProviderSet providers = build_providers(model);
    badx::AuditRun run =
        badx::run_task2(classes, config.personas, config.prompts, *client,
                        providers, config.sampling, model.model_id, options);

    json entry;
    entry["model_id"] = run.model_id;
    entry["run_dir"] = run_dir;
    entry["psi"] = json::array();
    std::cerr << model.model_id << " -> " << run_dir << "\n";
    for (const auto& p : run.psi_values) {
      entry["psi"].push_back({{"persona_id", p.persona_id},
                              {"psi", p.psi},
                              {"n_prompts", p.n_prompts}});
      std::cerr << "  persona " << p.persona_id << ": PSI "
                << badx::format_rounded(p.psi, 3) << " over " << p.n_prompts
                << " prompts\n";
    }
    int failed = 0;
    for (const auto& cell : run.grid) failed += cell.failed ? 1 : 0;
    entry["failed_cells"] = failed;
    if (failed > 0)
      std::cerr << "  " << failed << " cell(s) failed (see scores.json)\n";
    ctx.result["runs"].push_back(std::move(entry));
  }
  if (g_interrupted.load()) {
    ctx.result["interrupted"] = true;
    std::cerr << "interrupted: completed cells were persisted\n";
    return 2;
  }
  return 0;
}

int cmd_task1(CommandContext& ctx, const TaskArgs& args) {
  badx::AuditConfig config = load_config(args.config_path);
  std::vector<badx::IdentityClass> classes =
      badx::load_classes(config.classes_path);
  if (classes.empty())
    throw badx::Error(badx::ErrorKind::Config,
                      "task1 requires at least one identity class");
  std::vector<badx::PromptSpec> prompts = badx::build_task1_prompts(classes);

  ctx.result["runs"] = json::array();
  for (const auto& model : config.models) {
    std::string run_dir = config.output_dir + "/task1-" +
                          sanitize_for_path(model.model_id);
    badx::RunOptions options = make_run_options(config, args, run_dir);
    auto client =
        build_chat_client(model, args.replay_dir, run_dir, options.clock);
    badx::ProviderSet providers = build_providers(model);
    badx::Task1Run run =
        badx::run_task1(classes, prompts, *client, providers, config.sampling,
                        model.model_id, options);

    json entry;
    entry["model_id"] = run.model_id;
    entry["run_dir"] = run_dir;
    entry["table"] = json::array();
    std::cerr << model.model_id << " -> " << run_dir << "\n";
    for (const auto& row : run.rows) {
      json scores;
      for (const auto& [metric, value] : row.scores)
        scores[badx::to_string(metric)] = value;
      entry["table"].push_back({{"class_id", row.class_id},
                                {"class_name", row.class_name},
                                {"scores", scores}});
      std::cerr << "  " << row.class_name << ":";
      for (const auto& [metric, value] : row.scores)
        std::cerr << " " << badx::to_string(metric) << " "
                  << badx::format_rounded(value, 3);
      std::cerr << "\n";
    }
    ctx.result["runs"].push_back(std::move(entry));
  }
  if (g_interrupted.load()) {
    ctx.result["interrupted"] = true;
    std::cerr << "interrupted: completed prompts were persisted\n";
    return 2;
  }
  return 0;
}

// ---- explain ----------------------------------------------------------------

struct ExplainArgs {
  std::string run_dir;
  int top_k = 10;
  std::string metric;  // empty = average of all three
};

int cmd_explain(CommandContext& ctx, const ExplainArgs& args) {
  if (args.top_k < 1)
    throw badx::Error(badx::ErrorKind::Config, "--top-k must be >= 1");
  std::optional<badx::MetricKind> metric;
  if (!args.metric.empty()) {
    try {
      metric = badx::metric_from_string(args.metric);
    } catch (const badx::Error& e) {
      throw badx::Error(badx::ErrorKind::Config, e.what());
    }
  }

  badx::AuditConfig config;
  try {
    config = badx::parse_config(args.run_dir + "/config.json");
  } catch (const badx::Error& e) {
    throw badx::Error(badx::ErrorKind::Config,
                      std::string("run config: ") + e.what());
  }

  std::string kind = badx::run_task_kind(args.run_dir);
  std::string model_id;
  std::vector<badx::IdentityClass> classes;
  std::vector<badx::PromptSpec> prompts;
  std::vector<badx::GenerationRecord> generations;
  badx::NormalizationMode normalization = badx::NormalizationMode::Raw;
  badx::ClassBinding binding = badx::ClassBinding::PerPrompt;
  if (kind == "task2") {
    badx::AuditRun run = badx::load_task2_run(args.run_dir);
    model_id = run.model_id;
    classes = std::move(run.classes);
    prompts = std::move(run.prompts);
    generations = std::move(run.generations);
    normalization = run.normalization;
    binding = run.binding;
  } else {
    badx::Task1Run run = badx::load_task1_run(args.run_dir);
    model_id = run.model_id;
    classes = std::move(run.classes);
    prompts = std::move(run.prompts);
    generations = std::move(run.generations);
    normalization = run.normalization;
  }

  const badx::ModelConfig* model = nullptr;
  for (const auto& m : config.models)
    if (m.model_id == model_id) model = &m;
  if (!model)
    throw badx::Error(badx::ErrorKind::Config,
                      "run config does not define model \"" + model_id + "\"");
  badx::ProviderSet providers = build_providers(*model);

  auto bound_for_prompt = [&](const std::string& prompt_id) {
    std::vector<const badx::IdentityClass*> bound;
    if (binding == badx::ClassBinding::AllClasses) {
      for (const auto& c : classes) bound.push_back(&c);
      return bound;
    }
    for (const auto& p : prompts)
      if (p.id == prompt_id && p.class_id)
        for (const auto& c : classes)
          if (c.id == *p.class_id) bound.push_back(&c);
    return bound;
  };

  std::vector<badx::Attribution> attributions;
  json entries = json::array();
  int failures = 0;
  for (const auto& g : generations) {
    auto bound = bound_for_prompt(g.prompt_id);
    json entry;
    entry["prompt_id"] = g.prompt_id;
    entry["persona_id"] = g.persona_id ? json(*g.persona_id) : json(nullptr);
    entry["generation_index"] = g.generation_index;
    if (bound.empty()) {
      entry["failed"] = true;
      entry["error"] = "prompt has no resolvable class binding";
      ++failures;
      entries.push_back(std::move(entry));
      continue;
    }
    auto score_fn = [&](const std::string& text) {
      if (metric)
        return badx::response_metric_score(text, bound, *metric, providers,
                                           config.scoring, normalization);
      double acc = 0.0;
      for (badx::MetricKind m : badx::kAllMetrics)
        acc += badx::response_metric_score(text, bound, m, providers,
                                           config.scoring, normalization);
      return acc / static_cast<double>(badx::kAllMetrics.size());
    };
    badx::PerturbConfig perturb = config.lime;
    perturb.seed = config.lime.seed ^
                   badx::fnv1a64(g.request_fingerprint + "#" +
                                 std::to_string(g.generation_index));
    try {
      badx::Attribution attr = badx::lime_attribute(g.text, score_fn, perturb);
      entry["tokens"] = attr.tokens;
      entry["weights"] = attr.weights;
      entry["intercept"] = attr.intercept;
      entry["fit_r2"] = attr.fit_r2;
      entry["failed"] = false;
      attributions.push_back(std::move(attr));
    } catch (const badx::Error& e) {
      entry["failed"] = true;
      entry["error"] = e.what();
      ++failures;
    }
    entries.push_back(std::move(entry));
  }

  std::vector<badx::TermWeight> top =
      badx::aggregate_terms(attributions, args.top_k);

  json attr_doc;
  attr_doc["model_id"] = model_id;
  attr_doc["metric"] = metric ? json(badx::to_string(*metric)) : json("avg");
  attr_doc["attributions"] = std::move(entries);
  std::string attr_path = args.run_dir + "/attributions.json";
  write_file(attr_path, attr_doc.dump(2) + "\n");

  std::string csv = "term,total_weight\n";
  for (const auto& t : top)
    csv += t.term + "," + json(t.total_weight).dump() + "\n";
  std::string terms_path = args.run_dir + "/top_terms.csv";
  write_file(terms_path, csv);

  ctx.result["attributions_path"] = attr_path;
  ctx.result["top_terms_path"] = terms_path;
  ctx.result["failed_generations"] = failures;
  ctx.result["top_terms"] = json::array();
  std::cerr << "most influential terms (" << attributions.size()
            << " generations attributed):\n";
  for (const auto& t : top) {
    ctx.result["top_terms"].push_back(
        {{"term", t.term}, {"total_weight", t.total_weight}});
    std::cerr << "  " << t.term << "  " << badx::format_rounded(t.total_weight, 4)
              << "\n";
  }
  return 0;
}

// ---- report / compare -------------------------------------------------------

int cmd_report(CommandContext& ctx, const std::string& run_dir,
               const std::string& format, int kde_grid, bool per_persona) {
  badx::ReportOptions options;
  try {
    options.table_format = badx::table_format_from_string(format);
  } catch (const badx::Error& e) {
    throw badx::Error(badx::ErrorKind::Config, e.what());
  }
  if (kde_grid < 2)
    throw badx::Error(badx::ErrorKind::Config, "--kde-grid must be >= 2");
  options.kde_grid_n = kde_grid;
  options.density_per_cell = !per_persona;
  std::string path = badx::write_report(run_dir, options);
  ctx.result["report_path"] = path;
  std::cerr << "wrote " << path << "\n";
  return 0;
}

int cmd_compare(CommandContext& ctx, const std::string& run_dir,
                const std::string& golden_dir) {
  badx::DiffReport diff = badx::compare_golden(run_dir, golden_dir);
  ctx.result["match"] = diff.empty();
  ctx.result["diff"] = json::array();
  for (const auto& d : diff) {
    ctx.result["diff"].push_back(
        {{"path", d.path}, {"expected", d.expected}, {"actual", d.actual}});
    std::cerr << d.path << ": expected " << d.expected << ", actual "
              << d.actual << "\n";
  }
  if (diff.empty()) {
    std::cerr << "run matches golden\n";
    return 0;
  }
  std::cerr << diff.size() << " difference(s)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);

  CLI::App app{"audit persona-conditioned bias in text-generation models"};
  app.require_subcommand(1);
  bool json_output = false;
  app.add_flag("--json", json_output,
               "machine-readable JSON envelope on stdout");

  std::string corpus_path;
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* validate_cmd =
      corpus_cmd->add_subcommand("validate", "check corpus invariants");
  validate_cmd->add_option("path", corpus_path, "corpus JSON file")
      ->required();
  auto* iibs_cmd = corpus_cmd->add_subcommand(
      "iibs", "label prevalence of the intersectional-biased class");
  iibs_cmd->add_option("path", corpus_path, "corpus JSON file")->required();

  TaskArgs task_args;
  auto add_task_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", task_args.config_path, "audit config JSON")
        ->required();
    cmd->add_option("--replay", task_args.replay_dir,
                    "replay fixtures directory (offline)");
  };
  auto* task1_cmd =
      app.add_subcommand("task1", "neutral-prompt bias baseline");
  add_task_options(task1_cmd);
  auto* task2_cmd =
      app.add_subcommand("task2", "persona-conditioned bias grid");
  add_task_options(task2_cmd);
  task2_cmd->add_flag("--keep-going", task_args.keep_going,
                      "record cell failures instead of aborting");

  ExplainArgs explain_args;
  auto* explain_cmd =
      app.add_subcommand("explain", "token attribution for a finished run");
  explain_cmd->add_option("--run", explain_args.run_dir, "run directory")
      ->required();
  explain_cmd->add_option("--top-k", explain_args.top_k,
                          "terms in the aggregate table");
  explain_cmd->add_option("--metric", explain_args.metric,
                          "CEAT, I-WEAT or I-SEAT (default: average)");

  std::string report_run_dir, report_format = "md";
  int report_kde_grid = 256;
  bool report_per_persona = false;
  auto* report_cmd =
      app.add_subcommand("report", "render tables and density curves");
  report_cmd->add_option("--run", report_run_dir, "run directory")->required();
  report_cmd->add_option("--format", report_format, "csv, json or md");
  report_cmd->add_option("--kde-grid", report_kde_grid,
                         "density curve grid points");
  report_cmd->add_flag("--per-persona-density", report_per_persona,
                       "density over per-persona aggregates, not cells");

  std::string compare_run_dir, compare_golden_dir;
  auto* compare_cmd =
      app.add_subcommand("compare", "diff a run against a golden bundle");
  compare_cmd->add_option("--run", compare_run_dir, "run directory")
      ->required();
  compare_cmd->add_option("--golden", compare_golden_dir, "golden directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 3;
  }

  CommandContext ctx;
  ctx.json_output = json_output;
  int code = 0;
  try {
    if (corpus_cmd->parsed()) {
      if (validate_cmd->parsed()) {
        ctx.command = "corpus-validate";
        code = cmd_corpus_validate(ctx, corpus_path);
      } else {
        ctx.command = "corpus-iibs";
        code = cmd_corpus_iibs(ctx, corpus_path);
      }
    } else if (task1_cmd->parsed()) {
      ctx.command = "task1";
      code = cmd_task1(ctx, task_args);
    } else if (task2_cmd->parsed()) {
      ctx.command = "task2";
      code = cmd_task2(ctx, task_args);
    } else if (explain_cmd->parsed()) {
      ctx.command = "explain";
      code = cmd_explain(ctx, explain_args);
    } else if (report_cmd->parsed()) {
      ctx.command = "report";
      code = cmd_report(ctx, report_run_dir, report_format, report_kde_grid,
                        report_per_persona);
    } else if (compare_cmd->parsed()) {
      ctx.command = "compare";
      code = cmd_compare(ctx, compare_run_dir, compare_golden_dir);
    }
  } catch (const badx::Error& e) {
    code = exit_code_for(e);
    std::cerr << "error: " << e.what() << "\n";
    if (json_output) {
      json envelope;
      envelope["command"] = ctx.command;
      envelope["ok"] = false;
      envelope["exit_code"] = code;
      envelope["error"] = {{"kind", badx::to_string(e.kind())},
                           {"message", e.what()}};
      std::cout << envelope.dump(2) << "\n";
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (json_output) {
      json envelope;
      envelope["command"] = ctx.command;
      envelope["ok"] = false;
      envelope["exit_code"] = 2;
      envelope["error"] = {{"kind", "internal"}, {"message", e.what()}};
      std::cout << envelope.dump(2) << "\n";
    }
    return 2;
  }

  if (json_output) {
    ctx.result["command"] = ctx.command;
    ctx.result["ok"] = code == 0;
    ctx.result["exit_code"] = code;
    std::cout << ctx.result.dump(2) << "\n";
  }
  return code;
}

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "badx/association.hpp"
#include "badx/corpus.hpp"
#include "badx/llm_client.hpp"

namespace badx {

struct ScorePair {
  double persona_mean = 0.0;  // mean persona-side score over G generations
  double neutral_mean = 0.0;  // mean neutral-baseline score
  MetricKind metric = MetricKind::Ceat;
  std::string prompt_id;
  std::string persona_id;
};

// The persona-minus-neutral differential for one metric.
double bad(const ScorePair& pair);

// Mean of the three per-metric differentials; exactly three inputs.
double bad_avg(std::span<const double> per_metric);

// Mean differential across prompts for one persona.
double psi(std::span<const double> bad_avgs);

// Population standard deviation of per-generation scores; needs >= 2.
double volatility(std::span<const double> scores);

struct BadCell {
  std::string prompt_id;
  std::string persona_id;
  std::map<MetricKind, double> bad_by_metric;
  double bad_avg_value = 0.0;
  std::map<MetricKind, double> persona_mean;
  std::map<MetricKind, double> neutral_mean;
  std::map<MetricKind, std::vector<double>> persona_scores;  // per generation
  std::map<MetricKind, std::vector<double>> neutral_scores;
  bool failed = false;
  std::string failure;
};

struct PsiValue {
  std::string persona_id;
  double psi = 0.0;
  int n_prompts = 0;  // cells included (failed cells are excluded)
};

struct VolatilityCell {
  std::string prompt_id;
  std::string persona_id;
  MetricKind metric = MetricKind::Ceat;
  double stddev = 0.0;
  std::vector<double> scores;  // persona-side per-generation scores
};

struct AuditRun {
  std::string config_snapshot = "{}";  // JSON text persisted as config.json
  std::string model_id;
  NormalizationMode normalization = NormalizationMode::Raw;
  ClassBinding binding = ClassBinding::AllClasses;
  std::vector<Persona> personas;
  std::vector<PromptSpec> prompts;
  std::vector<IdentityClass> classes;
  std::vector<BadCell> grid;  // sorted by (prompt_id, persona_id)
  std::vector<PsiValue> psi_values;            // sorted by persona_id
  std::vector<VolatilityCell> volatility_cells;
  std::vector<GenerationRecord> generations;
  std::string started_at;
  std::string finished_at;
};

struct Task1Row {
  std::string class_id;
  std::string class_name;
  std::map<MetricKind, double> scores;
};

struct Task1ResponseScore {
  std::string prompt_id;
  int generation_index = 0;
  std::string class_id;
  std::map<MetricKind, double> scores;
};

struct Task1Run {
  std::string config_snapshot = "{}";
  std::string model_id;
  NormalizationMode normalization = NormalizationMode::Raw;
  std::vector<PromptSpec> prompts;
  std::vector<IdentityClass> classes;
  std::vector<Task1Row> rows;  // one per class, config order
  std::vector<Task1ResponseScore> per_response;
  std::vector<GenerationRecord> generations;
  std::string started_at;
  std::string finished_at;
};

struct RunOptions {
  std::string run_dir;  // empty: compute only, persist nothing
  bool keep_going = false;
  int concurrency = 1;
  NormalizationMode normalization = NormalizationMode::Raw;
  ClassBinding binding = ClassBinding::AllClasses;
  ScoringOptions scoring;
  Clock clock;                         // nullptr = system clock
  std::string config_snapshot = "{}";
  std::function<bool()> interrupted;   // graceful-drain probe
};

// One response's score under one metric: the normalized score_response
// value averaged over the bound classes.
double response_metric_score(const std::string& text,
                             const std::vector<const IdentityClass*>& bound,
                             MetricKind metric, const ProviderSet& providers,
                             const ScoringOptions& scoring,
                             NormalizationMode normalization);

// Full grid evaluation: G persona and G neutral generations per
// (prompt, persona) cell, scored under all three metrics; neutral batches
// are generated once per prompt and shared across personas. Persisted to
// options.run_dir before returning when a run directory is set.
AuditRun run_task2(const std::vector<IdentityClass>& classes,
                   const std::vector<Persona>& personas,
                   const std::vector<PromptSpec>& prompts, ChatClient& client,
                   const ProviderSet& providers, const SamplingParams& params,
                   const std::string& model_id, const RunOptions& options);

// Neutral-only evaluation producing the class x metric score table. Every
// prompt must carry a class binding.
Task1Run run_task1(const std::vector<IdentityClass>& classes,
                   const std::vector<PromptSpec>& prompts, ChatClient& client,
                   const ProviderSet& providers, const SamplingParams& params,
                   const std::string& model_id, const RunOptions& options);

// Default prompt inventory: per_class prompts per class from a fixed
// open-ended template over a built-in domain list.
std::vector<PromptSpec> build_task1_prompts(
    const std::vector<IdentityClass>& classes, int per_class = 20);

// Run-directory persistence (scores.json, psi.csv, volatility.csv,
// config.json; transcript/ is created if absent).
void write_task2_run(const AuditRun& run, const std::string& run_dir);
void write_task1_run(const Task1Run& run, const std::string& run_dir);

// "task1" or "task2", read from <run_dir>/scores.json.
std::string run_task_kind(const std::string& run_dir);
AuditRun load_task2_run(const std::string& run_dir);
Task1Run load_task1_run(const std::string& run_dir);

}  // namespace badx

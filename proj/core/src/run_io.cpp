// Run-directory persistence: scores.json and the CSV side files.

#include <filesystem>
#include <map>

#include "badx/audit.hpp"
#include "badx/error.hpp"
#include "json_util.hpp"

namespace badx {

namespace {

using jsonu::json;

// Shortest round-trip decimal text for a double (what the JSON dumper
// emits); used for CSV values so data files stay full precision.
std::string dump_double(double v) { return json(v).dump(); }

json metric_map_to_json(const std::map<MetricKind, double>& m) {
  json out;
  for (const auto& [metric, value] : m) out[to_string(metric)] = value;
  return out;
}

json metric_lists_to_json(
    const std::map<MetricKind, std::vector<double>>& m) {
  json out;
  for (const auto& [metric, values] : m) out[to_string(metric)] = values;
  return out;
}

std::map<MetricKind, double> metric_map_from_json(const json& j) {
  std::map<MetricKind, double> out;
  for (const auto& [key, value] : j.items())
    out[metric_from_string(key)] = value.get<double>();
  return out;
}

std::map<MetricKind, std::vector<double>> metric_lists_from_json(
    const json& j) {
  std::map<MetricKind, std::vector<double>> out;
  for (const auto& [key, value] : j.items())
    out[metric_from_string(key)] = value.get<std::vector<double>>();
  return out;
}

json class_to_json(const IdentityClass& cls) {
  json j;
  j["id"] = cls.id;
  j["name"] = cls.name;
  j["targets_1"] = cls.targets_1;
  j["targets_2"] = cls.targets_2;
  j["attributes_1"] = cls.attributes_1;
  j["attributes_2"] = cls.attributes_2;
  j["attribute_templates"] = cls.attribute_templates;
  return j;
}

json persona_to_json(const Persona& p) {
  json j;
  j["id"] = p.id;
  j["description"] = p.description;
  j["group"] = to_string(p.group);
  return j;
}

Persona persona_from_json(const json& j) {
  Persona p;
  p.id = j.at("id").get<std::string>();
  p.description = j.at("description").get<std::string>();
  p.group = persona_group_from_string(j.at("group").get<std::string>());
  return p;
}

json prompt_to_json(const PromptSpec& p) {
  json j;
  j["id"] = p.id;
  j["text"] = p.text;
  if (p.theme) j["theme"] = to_string(*p.theme);
  if (p.class_id) j["class_id"] = *p.class_id;
  return j;
}

PromptSpec prompt_from_json(const json& j) {
  PromptSpec p;
  p.id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  if (j.contains("theme"))
    p.theme = prompt_theme_from_string(j.at("theme").get<std::string>());
  if (j.contains("class_id")) p.class_id = j.at("class_id").get<std::string>();
  return p;
}

json generation_to_json(const GenerationRecord& g) {
  json j;
  j["prompt_id"] = g.prompt_id;
  if (g.persona_id)
    j["persona_id"] = *g.persona_id;
  else
    j["persona_id"] = nullptr;
  j["generation_index"] = g.generation_index;
  j["text"] = g.text;
  j["model_id"] = g.model_id;
  j["request_fingerprint"] = g.request_fingerprint;
  j["finish_reason"] = g.finish_reason;
  j["created_at"] = g.created_at;
  return j;
}

GenerationRecord generation_from_json(const json& j) {
  GenerationRecord g;
  g.prompt_id = j.at("prompt_id").get<std::string>();
  if (j.contains("persona_id") && !j.at("persona_id").is_null())
    g.persona_id = j.at("persona_id").get<std::string>();
  g.generation_index = j.at("generation_index").get<int>();
  g.text = j.at("text").get<std::string>();
  g.model_id = j.at("model_id").get<std::string>();
  g.request_fingerprint = j.at("request_fingerprint").get<std::string>();
  g.finish_reason = j.at("finish_reason").get<std::string>();
  g.created_at = j.at("created_at").get<std::string>();
  return g;
}

std::vector<IdentityClass> classes_from_json(const json& arr,
                                             const std::string& origin) {
  json wrapper;
  wrapper["classes"] = arr;
  return parse_classes_json(wrapper.dump(), origin);
}

void ensure_run_dir(const std::string& run_dir) {
  std::error_code ec;
  std::filesystem::create_directories(run_dir + "/transcript", ec);
  if (ec)
    throw Error(ErrorKind::Io,
                "cannot create run directory " + run_dir + ": " + ec.message());
}

void write_config_snapshot(const std::string& snapshot,
                           const std::string& run_dir) {
  json parsed = json::parse(snapshot, nullptr, false);
  std::string text = parsed.is_discarded() ? "{}\n" : parsed.dump(2) + "\n";
  jsonu::write_text_file(run_dir + "/config.json", text);
}

}  // namespace

void write_task2_run(const AuditRun& run, const std::string& run_dir) {
  ensure_run_dir(run_dir);
  write_config_snapshot(run.config_snapshot, run_dir);

  json root;
  root["task"] = "task2";
  root["model_id"] = run.model_id;
  root["normalization"] = to_string(run.normalization);
  root["class_binding"] = to_string(run.binding);
  root["started_at"] = run.started_at;
  root["finished_at"] = run.finished_at;

  root["personas"] = json::array();
  for (const auto& p : run.personas)
    root["personas"].push_back(persona_to_json(p));
  root["prompts"] = json::array();
  for (const auto& p : run.prompts) root["prompts"].push_back(prompt_to_json(p));
  root["classes"] = json::array();
  for (const auto& c : run.classes) root["classes"].push_back(class_to_json(c));

  root["grid"] = json::array();
  for (const auto& cell : run.grid) {
    json j;
    j["prompt_id"] = cell.prompt_id;
    j["persona_id"] = cell.persona_id;
    j["failed"] = cell.failed;
    if (cell.failed) {
      j["failure"] = cell.failure;
    } else {
      j["bad"] = metric_map_to_json(cell.bad_by_metric);
      j["bad_avg"] = cell.bad_avg_value;
      j["persona_mean"] = metric_map_to_json(cell.persona_mean);
      j["neutral_mean"] = metric_map_to_json(cell.neutral_mean);
      j["persona_scores"] = metric_lists_to_json(cell.persona_scores);
      j["neutral_scores"] = metric_lists_to_json(cell.neutral_scores);
    }
    root["grid"].push_back(std::move(j));
  }

  root["psi"] = json::array();
  for (const auto& p : run.psi_values) {
    json j;
    j["persona_id"] = p.persona_id;
    j["psi"] = p.psi;
    j["n_prompts"] = p.n_prompts;
    root["psi"].push_back(std::move(j));
  }

  root["volatility"] = json::array();
  for (const auto& v : run.volatility_cells) {
    json j;
    j["prompt_id"] = v.prompt_id;
    j["persona_id"] = v.persona_id;
    j["metric"] = to_string(v.metric);
    j["stddev"] = v.stddev;
    j["scores"] = v.scores;
    root["volatility"].push_back(std::move(j));
  }

  // Per-persona aggregate (mean over prompts and metrics), labeled as such
  // because it is a summary convention, not a primitive quantity.
  root["volatility_aggregated"] = json::array();
  for (const auto& p : run.psi_values) {
    double acc = 0.0;
    int count = 0;
    for (const auto& v : run.volatility_cells) {
      if (v.persona_id == p.persona_id) {
        acc += v.stddev;
        ++count;
      }
    }
    json j;
    j["persona_id"] = p.persona_id;
    j["label"] = "aggregated";
    j["n_cells"] = count;
    j["mean_stddev"] = count > 0 ? acc / count : 0.0;
    root["volatility_aggregated"].push_back(std::move(j));
  }

  root["generations"] = json::array();
  for (const auto& g : run.generations)
    root["generations"].push_back(generation_to_json(g));

  jsonu::write_text_file(run_dir + "/scores.json", root.dump(2) + "\n");

  std::string psi_csv = "persona_id,psi,n_prompts\n";
  for (const auto& p : run.psi_values)
    psi_csv += p.persona_id + "," + dump_double(p.psi) + "," +
               std::to_string(p.n_prompts) + "\n";
  jsonu::write_text_file(run_dir + "/psi.csv", psi_csv);

  std::string vol_csv = "prompt_id,persona_id,metric,stddev\n";
  for (const auto& v : run.volatility_cells)
    vol_csv += v.prompt_id + "," + v.persona_id + "," + to_string(v.metric) +
               "," + dump_double(v.stddev) + "\n";
  for (const auto& agg : root["volatility_aggregated"])
    vol_csv += "ALL," + agg.at("persona_id").get<std::string>() +
               ",aggregated," + dump_double(agg.at("mean_stddev").get<double>()) +
               "\n";
  jsonu::write_text_file(run_dir + "/volatility.csv", vol_csv);
}

void write_task1_run(const Task1Run& run, const std::string& run_dir) {
  ensure_run_dir(run_dir);
  write_config_snapshot(run.config_snapshot, run_dir);

  json root;
  root["task"] = "task1";
  root["model_id"] = run.model_id;
  root["normalization"] = to_string(run.normalization);
  root["started_at"] = run.started_at;
  root["finished_at"] = run.finished_at;

  root["prompts"] = json::array();
  for (const auto& p : run.prompts) root["prompts"].push_back(prompt_to_json(p));
  root["classes"] = json::array();
  for (const auto& c : run.classes) root["classes"].push_back(class_to_json(c));

  root["table"] = json::array();
  for (const auto& row : run.rows) {
    json j;
    j["class_id"] = row.class_id;
    j["class_name"] = row.class_name;
    j["scores"] = metric_map_to_json(row.scores);
    root["table"].push_back(std::move(j));
  }

  root["per_response"] = json::array();
  for (const auto& rs : run.per_response) {
    json j;
    j["prompt_id"] = rs.prompt_id;
    j["generation_index"] = rs.generation_index;
    j["class_id"] = rs.class_id;
    j["scores"] = metric_map_to_json(rs.scores);
    root["per_response"].push_back(std::move(j));
  }

  root["generations"] = json::array();
  for (const auto& g : run.generations)
    root["generations"].push_back(generation_to_json(g));

  jsonu::write_text_file(run_dir + "/scores.json", root.dump(2) + "\n");
}

std::string run_task_kind(const std::string& run_dir) {
  json root = jsonu::parse_file(run_dir + "/scores.json");
  if (!root.is_object() || !root.contains("task") ||
      !root.at("task").is_string())
    throw Error(ErrorKind::Schema,
                run_dir + "/scores.json has no \"task\" field");
  return root.at("task").get<std::string>();
}

AuditRun load_task2_run(const std::string& run_dir) {
  json root = jsonu::parse_file(run_dir + "/scores.json");
  if (root.value("task", "") != "task2")
    throw Error(ErrorKind::Schema,
                run_dir + " does not hold a task2 run");
  AuditRun run;
  run.model_id = root.at("model_id").get<std::string>();
  run.normalization =
      normalization_from_string(root.at("normalization").get<std::string>());
  run.binding =
      class_binding_from_string(root.at("class_binding").get<std::string>());
  run.started_at = root.at("started_at").get<std::string>();
  run.finished_at = root.at("finished_at").get<std::string>();
  for (const auto& j : root.at("personas"))
    run.personas.push_back(persona_from_json(j));
  for (const auto& j : root.at("prompts"))
    run.prompts.push_back(prompt_from_json(j));
  run.classes = classes_from_json(root.at("classes"), run_dir + "/scores.json");

  for (const auto& j : root.at("grid")) {
    BadCell cell;
    cell.prompt_id = j.at("prompt_id").get<std::string>();
    cell.persona_id = j.at("persona_id").get<std::string>();
    cell.failed = j.at("failed").get<bool>();
    if (cell.failed) {
      cell.failure = j.value("failure", "");
    } else {
      cell.bad_by_metric = metric_map_from_json(j.at("bad"));
      cell.bad_avg_value = j.at("bad_avg").get<double>();
      cell.persona_mean = metric_map_from_json(j.at("persona_mean"));
      cell.neutral_mean = metric_map_from_json(j.at("neutral_mean"));
      cell.persona_scores = metric_lists_from_json(j.at("persona_scores"));
      cell.neutral_scores = metric_lists_from_json(j.at("neutral_scores"));
    }
    run.grid.push_back(std::move(cell));
  }
  for (const auto& j : root.at("psi")) {
    PsiValue p;
    p.persona_id = j.at("persona_id").get<std::string>();
    p.psi = j.at("psi").get<double>();
    p.n_prompts = j.at("n_prompts").get<int>();
    run.psi_values.push_back(std::move(p));
  }
  for (const auto& j : root.at("volatility")) {
    VolatilityCell v;
    v.prompt_id = j.at("prompt_id").get<std::string>();
    v.persona_id = j.at("persona_id").get<std::string>();
    v.metric = metric_from_string(j.at("metric").get<std::string>());
    v.stddev = j.at("stddev").get<double>();
    v.scores = j.at("scores").get<std::vector<double>>();
    run.volatility_cells.push_back(std::move(v));
  }
  for (const auto& j : root.at("generations"))
    run.generations.push_back(generation_from_json(j));
  return run;
}

Task1Run load_task1_run(const std::string& run_dir) {
  json root = jsonu::parse_file(run_dir + "/scores.json");
  if (root.value("task", "") != "task1")
    throw Error(ErrorKind::Schema,
                run_dir + " does not hold a task1 run");
  Task1Run run;
  run.model_id = root.at("model_id").get<std::string>();
  run.normalization =
      normalization_from_string(root.at("normalization").get<std::string>());
  run.started_at = root.at("started_at").get<std::string>();
  run.finished_at = root.at("finished_at").get<std::string>();
  for (const auto& j : root.at("prompts"))
    run.prompts.push_back(prompt_from_json(j));
  run.classes = classes_from_json(root.at("classes"), run_dir + "/scores.json");
  for (const auto& j : root.at("table")) {
    Task1Row row;
    row.class_id = j.at("class_id").get<std::string>();
    row.class_name = j.at("class_name").get<std::string>();
    row.scores = metric_map_from_json(j.at("scores"));
    run.rows.push_back(std::move(row));
  }
  for (const auto& j : root.at("per_response")) {
    Task1ResponseScore rs;
    rs.prompt_id = j.at("prompt_id").get<std::string>();
    rs.generation_index = j.at("generation_index").get<int>();
    rs.class_id = j.at("class_id").get<std::string>();
    rs.scores = metric_map_from_json(j.at("scores"));
    run.per_response.push_back(std::move(rs));
  }
  for (const auto& j : root.at("generations"))
    run.generations.push_back(generation_from_json(j));
  return run;
}

}  // namespace badx

// Run-directory comparison against a golden bundle, and the report
// renderer that turns a persisted run into report.md + tables + densities.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "badx/audit.hpp"
#include "badx/error.hpp"
#include "badx/report.hpp"
#include "json_util.hpp"

namespace badx {

namespace {

namespace fs = std::filesystem;
using jsonu::json;

constexpr double kNumericTolerance = 1e-9;

// Timestamp fields change run to run; equality of the audit is judged on
// everything else.
bool is_timestamp_key(const std::string& key) {
  return key == "started_at" || key == "finished_at" || key == "created_at" ||
         key == "t";
}

bool parse_full_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

void diff_json(const json& expected, const json& actual,
               const std::string& path, DiffReport& out) {
  if (expected.is_number() && actual.is_number()) {
    double e = expected.get<double>();
    double a = actual.get<double>();
    if (std::abs(e - a) > kNumericTolerance)
      out.push_back({path, expected.dump(), actual.dump()});
    return;
  }
  if (expected.type() != actual.type()) {
    out.push_back({path, expected.dump(), actual.dump()});
    return;
  }
  if (expected.is_object()) {
    for (const auto& [key, value] : expected.items()) {
      if (is_timestamp_key(key)) continue;
      std::string child = path + "/" + key;
      if (!actual.contains(key))
        out.push_back({child, value.dump(), "<missing>"});
      else
        diff_json(value, actual.at(key), child, out);
    }
    for (const auto& [key, value] : actual.items()) {
      if (is_timestamp_key(key)) continue;
      if (!expected.contains(key))
        out.push_back({path + "/" + key, "<missing>", value.dump()});
    }
    return;
  }
  if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      out.push_back({path, "array of " + std::to_string(expected.size()),
                     "array of " + std::to_string(actual.size())});
    }
    std::size_t n = std::min(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i)
      diff_json(expected[i], actual[i], path + "/" + std::to_string(i), out);
    return;
  }
  if (expected != actual) out.push_back({path, expected.dump(), actual.dump()});
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

// CSV cells holding full-precision numbers get the same tolerance as JSON;
// everything else must match exactly.
void diff_csv(const std::string& expected, const std::string& actual,
              const std::string& rel, DiffReport& out) {
  auto exp_lines = split_lines(expected);
  auto act_lines = split_lines(actual);
  if (exp_lines.size() != act_lines.size())
    out.push_back({rel, std::to_string(exp_lines.size()) + " lines",
                   std::to_string(act_lines.size()) + " lines"});
  std::size_t n_lines = std::min(exp_lines.size(), act_lines.size());
  for (std::size_t i = 0; i < n_lines; ++i) {
    auto exp_cells = split_cells(exp_lines[i]);
    auto act_cells = split_cells(act_lines[i]);
    std::string line_path = rel + ":" + std::to_string(i + 1);
    if (exp_cells.size() != act_cells.size()) {
      out.push_back({line_path, exp_lines[i], act_lines[i]});
      continue;
    }
    for (std::size_t c = 0; c < exp_cells.size(); ++c) {
      double ev = 0.0, av = 0.0;
      if (parse_full_double(exp_cells[c], ev) &&
          parse_full_double(act_cells[c], av)) {
        if (std::abs(ev - av) > kNumericTolerance)
          out.push_back({line_path + ":" + std::to_string(c + 1),
                         exp_cells[c], act_cells[c]});
      } else if (exp_cells[c] != act_cells[c]) {
        out.push_back({line_path + ":" + std::to_string(c + 1), exp_cells[c],
                       act_cells[c]});
      }
    }
  }
}

void diff_bytes(const std::string& expected, const std::string& actual,
                const std::string& rel, DiffReport& out) {
  if (expected == actual) return;
  auto exp_lines = split_lines(expected);
  auto act_lines = split_lines(actual);
  std::size_t n = std::max(exp_lines.size(), act_lines.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string e = i < exp_lines.size() ? exp_lines[i] : "<missing line>";
    std::string a = i < act_lines.size() ? act_lines[i] : "<missing line>";
    if (e != a) {
      out.push_back({rel + ":" + std::to_string(i + 1), e, a});
      return;  // first difference is enough to act on
    }
  }
  out.push_back({rel, "<content>", "<content differs>"});
}

}  // namespace

DiffReport compare_golden(const std::string& run_dir,
                          const std::string& golden_dir) {
  for (const std::string& dir : {golden_dir, run_dir})
    if (!fs::exists(fs::path(dir) / "scores.json"))
      throw Error(ErrorKind::Io, dir + " does not contain scores.json");

  std::vector<std::string> rel_paths;
  for (const auto& entry : fs::recursive_directory_iterator(golden_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string rel =
        fs::relative(entry.path(), golden_dir).generic_string();
    if (rel == "config.json") continue;
    if (rel.rfind("transcript/", 0) == 0) continue;
    rel_paths.push_back(std::move(rel));
  }
  std::sort(rel_paths.begin(), rel_paths.end());

  DiffReport report;
  for (const std::string& rel : rel_paths) {
    fs::path run_file = fs::path(run_dir) / rel;
    if (!fs::exists(run_file)) {
      report.push_back({rel, "<file>", "<missing>"});
      continue;
    }
    std::string expected =
        jsonu::read_text_file((fs::path(golden_dir) / rel).string());
    std::string actual = jsonu::read_text_file(run_file.string());
    std::string ext = fs::path(rel).extension().string();
    if (ext == ".json") {
      json e = json::parse(expected, nullptr, false);
      json a = json::parse(actual, nullptr, false);
      if (e.is_discarded() || a.is_discarded())
        diff_bytes(expected, actual, rel, report);
      else
        diff_json(e, a, rel + "#", report);
    } else if (ext == ".csv") {
      diff_csv(expected, actual, rel, report);
    } else {
      diff_bytes(expected, actual, rel, report);
    }
  }
  return report;
}

namespace {

std::string metric_file_stem(MetricKind metric) {
  std::string stem = to_string(metric);
  for (char& c : stem) {
    if (c == '-') c = '_';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return stem;
}

void write_density_csv(const std::string& path, std::span<const double> values,
                       int grid_n, std::string& report_notes,
                       const std::string& label) {
  try {
    DensityCurve curve = kde(values, grid_n);
    std::string csv = "grid,density\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
      csv += json(curve.grid[i]).dump() + "," + json(curve.density[i]).dump() +
             "\n";
    jsonu::write_text_file(path, csv);
    report_notes += "- " + label + ": " + std::to_string(values.size()) +
                    " values, bandwidth " + json(curve.bandwidth).dump() +
                    "\n";
  } catch (const Error& e) {
    report_notes +=
        "- " + label + ": density curve skipped (" + e.what() + ")\n";
  }
}

struct NamedTable {
  std::string name;  // file stem under tables/
  std::string title;
  ScoreTable table;
};

std::vector<NamedTable> task2_tables(const AuditRun& run) {
  std::vector<std::string> prompt_ids, persona_ids;
  for (const auto& cell : run.grid) {
    if (prompt_ids.empty() || prompt_ids.back() != cell.prompt_id)
      prompt_ids.push_back(cell.prompt_id);
  }
  std::sort(prompt_ids.begin(), prompt_ids.end());
  prompt_ids.erase(std::unique(prompt_ids.begin(), prompt_ids.end()),
                   prompt_ids.end());
  for (const auto& p : run.psi_values) persona_ids.push_back(p.persona_id);

  auto make_grid_table = [&](auto&& cell_value) {
    ScoreTable t;
    t.row_labels = prompt_ids;
    t.col_labels = persona_ids;
    t.cells.assign(prompt_ids.size() * persona_ids.size(), 0.0);
    for (const auto& cell : run.grid) {
      if (cell.failed) continue;  // rendered as 0 and called out in notes
      auto r = std::find(prompt_ids.begin(), prompt_ids.end(), cell.prompt_id);
      auto c =
          std::find(persona_ids.begin(), persona_ids.end(), cell.persona_id);
      if (r == prompt_ids.end() || c == persona_ids.end()) continue;
      t.at(static_cast<std::size_t>(r - prompt_ids.begin()),
           static_cast<std::size_t>(c - persona_ids.begin())) =
          cell_value(cell);
    }
    return t;
  };

  std::vector<NamedTable> tables;
  tables.push_back({"bad_avg", "BAD (average of metrics) by prompt and persona",
                    make_grid_table([](const BadCell& c) {
                      return c.bad_avg_value;
                    })});
  for (MetricKind metric : kAllMetrics) {
    tables.push_back(
        {"bad_" + metric_file_stem(metric),
         std::string("BAD under ") + to_string(metric),
         make_grid_table([metric](const BadCell& c) {
           auto it = c.bad_by_metric.find(metric);
           return it == c.bad_by_metric.end() ? 0.0 : it->second;
         })});
  }

  // Table-5 shape: one row per persona, PSI next to aggregated volatility.
  ScoreTable summary;
  summary.row_labels = persona_ids;
  summary.col_labels = {"PSI", "Volatility"};
  summary.cells.assign(persona_ids.size() * 2, 0.0);
  for (std::size_t r = 0; r < run.psi_values.size(); ++r) {
    summary.at(r, 0) = run.psi_values[r].psi;
    double acc = 0.0;
    int count = 0;
    for (const auto& v : run.volatility_cells)
      if (v.persona_id == persona_ids[r]) {
        acc += v.stddev;
        ++count;
      }
    summary.at(r, 1) = count > 0 ? acc / count : 0.0;
  }
  tables.push_back({"psi_volatility",
                    "PSI and aggregated volatility by persona", summary});
  return tables;
}

std::vector<NamedTable> task1_tables(const Task1Run& run) {
  ScoreTable t;
  for (const auto& row : run.rows) t.row_labels.push_back(row.class_name);
  for (MetricKind metric : kAllMetrics)
    t.col_labels.push_back(to_string(metric));
  t.cells.assign(t.row_labels.size() * t.col_labels.size(), 0.0);
  for (std::size_t r = 0; r < run.rows.size(); ++r)
    for (std::size_t c = 0; c < kAllMetrics.size(); ++c) {
      auto it = run.rows[r].scores.find(kAllMetrics[c]);
      t.at(r, c) = it == run.rows[r].scores.end() ? 0.0 : it->second;
    }
  return {{"scores", "Bias score by identity class and metric", t}};
}

std::string table_extension(TableFormat format) {
  switch (format) {
    case TableFormat::Csv: return "csv";
    case TableFormat::Json: return "json";
    case TableFormat::Md: return "md";
  }
  return "txt";
}

}  // namespace

std::string write_report(const std::string& run_dir,
                         const ReportOptions& options) {
  std::string kind = run_task_kind(run_dir);

  std::vector<NamedTable> tables;
  std::string header;
  std::string density_notes;
  std::string failure_notes;

  if (kind == "task2") {
    AuditRun run = load_task2_run(run_dir);
    tables = task2_tables(run);
    header = "# Audit report: " + run.model_id + " (persona grid)\n\n";
    header += "- normalization: " + std::string(to_string(run.normalization)) +
              "\n";
    header += "- class binding: " + std::string(to_string(run.binding)) + "\n";
    header += "- grid: " + std::to_string(run.prompts.size()) + " prompts x " +
              std::to_string(run.personas.size()) + " personas\n\n";
    for (const auto& cell : run.grid)
      if (cell.failed)
        failure_notes += "- cell (" + cell.prompt_id + ", " + cell.persona_id +
                         ") failed: " + cell.failure + "\n";

    std::vector<double> psi_inputs, vol_inputs;
    if (options.density_per_cell) {
      for (const auto& cell : run.grid)
        if (!cell.failed) psi_inputs.push_back(cell.bad_avg_value);
      for (const auto& v : run.volatility_cells)
        vol_inputs.push_back(v.stddev);
    } else {
      for (const auto& p : run.psi_values) psi_inputs.push_back(p.psi);
      for (const auto& p : run.psi_values) {
        double acc = 0.0;
        int count = 0;
        for (const auto& v : run.volatility_cells)
          if (v.persona_id == p.persona_id) {
            acc += v.stddev;
            ++count;
          }
        if (count > 0) vol_inputs.push_back(acc / count);
      }
    }
    write_density_csv(run_dir + "/density/psi.csv", psi_inputs,
                      options.kde_grid_n, density_notes,
                      options.density_per_cell ? "bias-shift density (per cell)"
                                               : "PSI density (per persona)");
    write_density_csv(run_dir + "/density/volatility.csv", vol_inputs,
                      options.kde_grid_n, density_notes,
                      options.density_per_cell
                          ? "volatility density (per cell)"
                          : "volatility density (per persona)");
  } else if (kind == "task1") {
    Task1Run run = load_task1_run(run_dir);
    tables = task1_tables(run);
    header = "# Audit report: " + run.model_id + " (neutral baseline)\n\n";
    header += "- normalization: " + std::string(to_string(run.normalization)) +
              "\n";
    header += "- classes: " + std::to_string(run.classes.size()) +
              ", prompts: " + std::to_string(run.prompts.size()) + "\n\n";
  } else {
    throw Error(ErrorKind::Schema,
                run_dir + "/scores.json names unknown task \"" + kind + "\"");
  }

  std::string report = header;
  for (const auto& named : tables) {
    // tables/*.csv always exist; the configured format drives the report body.
    jsonu::write_text_file(run_dir + "/tables/" + named.name + ".csv",
                           render_table(named.table, TableFormat::Csv));
    auto marks = mark_extremes(named.table, ExtremeScope::Global);
    report += "## " + named.title + "\n\n";
    if (options.table_format == TableFormat::Md) {
      report += render_table(named.table, TableFormat::Md, marks);
    } else {
      report += "```" + table_extension(options.table_format) + "\n" +
                render_table(named.table, options.table_format, marks) + "```\n";
    }
    report += "\n";
  }
  if (!failure_notes.empty())
    report += "## Failed cells (excluded from PSI)\n\n" + failure_notes + "\n";
  if (!density_notes.empty())
    report += "## Density curves\n\n" + density_notes + "\n";
  report += "Markdown tables mark the largest-magnitude cells with asterisks; "
            "full-precision values live in scores.json.\n";

  std::string report_path = run_dir + "/report.md";
  jsonu::write_text_file(report_path, report);
  return report_path;
}

}  // namespace badx

#include "badx/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "badx/error.hpp"
#include "json_util.hpp"

namespace badx {

TableFormat table_format_from_string(std::string_view s) {
  if (s == "csv") return TableFormat::Csv;
  if (s == "json") return TableFormat::Json;
  if (s == "md") return TableFormat::Md;
  throw Error(ErrorKind::Config, "unknown table format \"" + std::string(s) +
                                     "\" (expected csv, json or md)");
}

std::string format_rounded(double value, int decimals) {
  if (!std::isfinite(value))
    throw Error(ErrorKind::DegenerateData,
                "cannot render a non-finite table value");
  double scale = std::pow(10.0, decimals);
  double scaled = value * scale;
  if (std::abs(scaled) > 9.0e15) {  // llround range guard
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
  }
  long long q = std::llround(scaled);  // rounds halfway away from zero
  bool negative = q < 0;
  unsigned long long magnitude =
      negative ? static_cast<unsigned long long>(-(q + 1)) + 1
               : static_cast<unsigned long long>(q);

  unsigned long long unit = 1;
  for (int i = 0; i < decimals; ++i) unit *= 10;
  unsigned long long whole = decimals > 0 ? magnitude / unit : magnitude;
  unsigned long long frac = decimals > 0 ? magnitude % unit : 0;

  std::string out;
  if (negative && magnitude != 0) out += '-';  // never "-0.000"
  out += std::to_string(whole);
  if (decimals > 0) {
    std::string f = std::to_string(frac);
    out += '.';
    out += std::string(static_cast<std::size_t>(decimals) - f.size(), '0');
    out += f;
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string render_table(const ScoreTable& table, TableFormat format,
                         const std::set<CellCoord>& marks) {
  const std::size_t rows = table.row_labels.size();
  const std::size_t cols = table.col_labels.size();
  if (table.cells.size() != rows * cols)
    throw Error(ErrorKind::Config, "table cells do not match its labels");

  if (format == TableFormat::Csv) {
    std::string out;
    for (const auto& c : table.col_labels) {
      out += ',';
      out += csv_escape(c);
    }
    out += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
      out += csv_escape(table.row_labels[r]);
      for (std::size_t c = 0; c < cols; ++c) {
        out += ',';
        out += format_rounded(table.at(r, c), table.rounding);
      }
      out += '\n';
    }
    return out;
  }

  if (format == TableFormat::Json) {
    jsonu::json j;
    j["columns"] = table.col_labels;
    j["rows"] = jsonu::json::array();
    for (std::size_t r = 0; r < rows; ++r) {
      jsonu::json row;
      row["label"] = table.row_labels[r];
      row["values"] = jsonu::json::array();
      for (std::size_t c = 0; c < cols; ++c)
        // Re-parse the rounded text so the JSON number is the rounded value.
        row["values"].push_back(jsonu::json::parse(
            format_rounded(table.at(r, c), table.rounding)));
      j["rows"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
  }

  // Markdown.
  std::string out = "|  |";
  for (const auto& c : table.col_labels) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t c = 0; c < cols; ++c) out += "---|";
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out += "| " + table.row_labels[r] + " |";
    for (std::size_t c = 0; c < cols; ++c) {
      std::string cell = format_rounded(table.at(r, c), table.rounding);
      if (marks.count({r, c})) cell = "*" + cell + "*";
      out += " " + cell + " |";
    }
    out += '\n';
  }
  return out;
}

std::set<CellCoord> mark_extremes(const ScoreTable& table,
                                  ExtremeScope scope) {
  const std::size_t rows = table.row_labels.size();
  const std::size_t cols = table.col_labels.size();
  std::set<CellCoord> marks;
  if (rows == 0 || cols == 0) return marks;

  auto mark_range = [&](std::size_t row_begin, std::size_t row_end) {
    double best = 0.0;
    for (std::size_t r = row_begin; r < row_end; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        best = std::max(best, std::abs(table.at(r, c)));
    if (best == 0.0) return;  // an all-zero scope marks nothing
    for (std::size_t r = row_begin; r < row_end; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (std::abs(table.at(r, c)) == best) marks.insert({r, c});
  };

  if (scope == ExtremeScope::Global) {
    mark_range(0, rows);
  } else {
    for (std::size_t r = 0; r < rows; ++r) mark_range(r, r + 1);
  }
  return marks;
}

}  // namespace badx

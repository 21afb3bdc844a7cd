#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace badx {

struct ScoreTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<double> cells;  // row-major, |rows| * |cols|
  int rounding = 3;           // decimal places, half-away-from-zero

  double& at(std::size_t row, std::size_t col) {
    return cells[row * col_labels.size() + col];
  }
  double at(std::size_t row, std::size_t col) const {
    return cells[row * col_labels.size() + col];
  }
};

enum class TableFormat { Csv, Json, Md };
TableFormat table_format_from_string(std::string_view s);

enum class ExtremeScope { PerRowGroup, Global };

struct CellCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const CellCoord&) const = default;
};

// Decimal rendering with half-away-from-zero rounding; never prints "-0".
std::string format_rounded(double value, int decimals);

// Byte-deterministic rendering. Marks only affect the md format, which
// wraps marked cells in asterisks.
std::string render_table(const ScoreTable& table, TableFormat format,
                         const std::set<CellCoord>& marks = {});

// Cells attaining the maximum |value| within the scope (each row is its own
// group under PerRowGroup); ties all marked; an all-zero scope marks none.
std::set<CellCoord> mark_extremes(const ScoreTable& table, ExtremeScope scope);

struct DensityCurve {
  std::vector<double> grid;     // ascending
  std::vector<double> density;  // nonnegative
  double bandwidth = 0.0;
};

// Gaussian kernel density: bandwidth 0.9*min(sigma, IQR/1.34)*n^(-1/5)
// (sample sigma; sigma alone when the IQR is zero); grid_n points over
// [min - 4h, max + 4h].
DensityCurve kde(std::span<const double> values, int grid_n);

struct DiffEntry {
  std::string path;
  std::string expected;
  std::string actual;

  bool operator==(const DiffEntry&) const = default;
};
using DiffReport = std::vector<DiffEntry>;

// Field-for-field comparison of two run directories: every golden file
// except config.json and transcript/ must exist in the run and agree —
// JSON files numerically within 1e-9 (timestamp fields skipped), other
// files byte-for-byte.
DiffReport compare_golden(const std::string& run_dir,
                          const std::string& golden_dir);

struct ReportOptions {
  TableFormat table_format = TableFormat::Md;
  int kde_grid_n = 256;
  // true: density inputs are per-cell values (BAD_avg, per-cell stddev);
  // false: per-persona aggregates (PSI, mean volatility).
  bool density_per_cell = true;
};

// Renders <run>/report.md, <run>/tables/*.csv and <run>/density/*.csv from
// a persisted run. Returns the report path.
std::string write_report(const std::string& run_dir,
                         const ReportOptions& options = {});

}  // namespace badx

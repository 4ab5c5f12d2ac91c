#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace slowfast {

struct SweepResult;

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip representation; "nan" / "inf" for non-finite values.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  void add_numbers(const std::vector<double>& row);
  std::string str() const;
  std::size_t n_rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable sweep_table(const SweepResult& result);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Single-panel line chart; log_x puts the x axis on a log10 scale.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_x);

}  // namespace slowfast

#pragma once

#include <string>
#include <vector>

namespace qfj {

/// 17 significant digits, '.' separator, "nan"/"inf"/"-inf" for non-finite.
std::string format_double(double v);

class CsvTable {
public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void add_row(std::vector<std::string> row);
  /// -1 when absent
  int column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;

  std::string to_string() const;
  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);
  static CsvTable parse(const std::string& text);

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace qfj

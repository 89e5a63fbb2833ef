#include "qfj/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qfj {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size())
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " fields, header has " +
                                std::to_string(header_.size()));
  for (const auto& f : row)
    if (f.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("csv field contains a separator: " + f);
  rows_.push_back(std::move(row));
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::invalid_argument("missing column '" + name + "'");
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r[c].empty() ? NAN : std::stod(r[c]));
  return v;
}

std::string CsvTable::to_string() const {
  std::string s;
  auto line = [&s](const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) s += ',';
      s += f[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

void CsvTable::write(const std::string& path) const {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << to_string();
  if (!out) throw std::runtime_error("cannot write " + path);
}

CsvTable CsvTable::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = l.find(',', start);
      f.push_back(l.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return f;
  };
  CsvTable t;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv");
  t.header_ = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.add_row(split(line));
  }
  return t;
}

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace qfj

#include "frkd/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace frkd {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": cannot parse number '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": cannot parse integer '" + s + "'");
  }
}

int required_column(const CsvTable& t, const std::string& name,
                    const std::string& path) {
  const int c = t.column(name);
  if (c < 0) throw std::runtime_error(path + ": missing column '" + name + "'");
  return c;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw std::runtime_error(path + ": row with " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Location> load_points(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int cx = required_column(t, "x", path);
  const int cy = required_column(t, "y", path);
  std::vector<Location> points;
  points.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    points.push_back({parse_double(row[cx], path), parse_double(row[cy], path)});
  }
  return points;
}

std::pair<std::vector<Location>, std::vector<double>> load_point_values(
    const std::string& path) {
  const CsvTable t = read_csv(path);
  const int cx = required_column(t, "x", path);
  const int cy = required_column(t, "y", path);
  const int cv = required_column(t, "value", path);
  std::vector<Location> points;
  std::vector<double> values;
  points.reserve(t.rows.size());
  values.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    points.push_back({parse_double(row[cx], path), parse_double(row[cy], path)});
    values.push_back(parse_double(row[cv], path));
  }
  return {std::move(points), std::move(values)};
}

std::vector<double> load_bau_field(const std::string& path, int n_bau) {
  const CsvTable t = read_csv(path);
  const int ci = required_column(t, "bau_index", path);
  const int cv = required_column(t, "value", path);
  std::vector<double> field(n_bau, 0.0);
  for (const auto& row : t.rows) {
    const int i = parse_int(row[ci], path);
    if (i < 0 || i >= n_bau) {
      throw std::runtime_error(path + ": bau_index " + std::to_string(i) +
                               " out of range [0, " + std::to_string(n_bau) + ")");
    }
    field[i] = parse_double(row[cv], path);
  }
  return field;
}

std::vector<double> load_block_values(const std::string& path, int n_blocks,
                                      const std::string& value_column) {
  const CsvTable t = read_csv(path);
  const int ci = required_column(t, "block_index", path);
  const int cv = required_column(t, value_column, path);
  std::vector<double> values(n_blocks, 0.0);
  std::vector<bool> seen(n_blocks, false);
  for (const auto& row : t.rows) {
    const int i = parse_int(row[ci], path);
    if (i < 0 || i >= n_blocks) {
      throw std::runtime_error(path + ": block_index " + std::to_string(i) +
                               " out of range [0, " + std::to_string(n_blocks) + ")");
    }
    if (seen[i]) throw std::runtime_error(path + ": duplicate block_index " + std::to_string(i));
    seen[i] = true;
    values[i] = parse_double(row[cv], path);
  }
  for (int i = 0; i < n_blocks; ++i) {
    if (!seen[i]) {
      throw std::runtime_error(path + ": missing block_index " + std::to_string(i));
    }
  }
  return values;
}

void write_bau_field(const std::string& path, const std::vector<double>& values) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    rows.push_back({std::to_string(i), format_number(values[i])});
  }
  write_csv(path, {"bau_index", "value"}, rows);
}

void write_block_values(const std::string& path, const std::vector<double>& values,
                        const std::string& value_column) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    rows.push_back({std::to_string(i), format_number(values[i])});
  }
  write_csv(path, {"block_index", value_column}, rows);
}

void write_surface(const std::string& path, const std::vector<int>& bau_indices,
                   const std::vector<double>& mean, const std::vector<double>& sd) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(bau_indices.size());
  for (std::size_t i = 0; i < bau_indices.size(); ++i) {
    rows.push_back({std::to_string(bau_indices[i]), format_number(mean[i]),
                    format_number(sd[i])});
  }
  write_csv(path, {"bau_index", "mean", "sd"}, rows);
}

}  // namespace frkd

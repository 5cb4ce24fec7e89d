#pragma once

#include <string>
#include <utility>
#include <vector>

#include "frkd/geometry.hpp"

namespace frkd {

/// Raw CSV contents: header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

/// Number formatting used for every numeric output file: 12 significant
/// digits, locale-independent.
std::string format_number(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// --- loaders for the fixed file schemas ---

/// Columns (x, y).
std::vector<Location> load_points(const std::string& path);

/// Columns (x, y, value).
std::pair<std::vector<Location>, std::vector<double>> load_point_values(
    const std::string& path);

/// Columns (bau_index, value); absent indices default to 0.
std::vector<double> load_bau_field(const std::string& path, int n_bau);

/// Columns (block_index, <value_column>), returned in block-index order and
/// required to cover 0..n_blocks-1 exactly.
std::vector<double> load_block_values(const std::string& path, int n_blocks,
                                      const std::string& value_column);

// --- writers for the fixed file schemas ---

void write_bau_field(const std::string& path, const std::vector<double>& values);
void write_block_values(const std::string& path, const std::vector<double>& values,
                        const std::string& value_column);
void write_surface(const std::string& path, const std::vector<int>& bau_indices,
                   const std::vector<double>& mean, const std::vector<double>& sd);

}  // namespace frkd

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hamrc/reservoir.hpp"

namespace hamrc {

/// Header plus a rows x columns block of numbers.
struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};

/// Shortest text with 17 significant digits ("%.17g").
std::string format_number(double x);

void write_csv(std::ostream& out, const CsvTable& table);
/// Creates parent directories. Throws ConfigError when the file cannot be written.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Reads a numeric table whose first row is a header. Throws ConfigError on
/// ragged rows or unparsable fields.
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Column names of the observable for each system.
std::vector<std::string> pendulum_columns();
std::vector<std::string> map_columns();

/// Table with a leading time column t = t0 + k*dt for each state column k.
CsvTable trajectory_table(const Matrix& states, double t0, double dt,
                          const std::vector<std::string>& columns);

}  // namespace hamrc

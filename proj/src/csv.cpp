#include "hamrc/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hamrc/errors.hpp"

namespace hamrc {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_number(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c) {
      if (c) out << ',';
      out << format_number(table.rows(r, c));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (static_cast<std::size_t>(table.rows.cols()) != table.header.size() && table.rows.rows() > 0)
    throw std::invalid_argument("csv: header and column count differ");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw ConfigError("failed writing " + path.string());
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header row");
  for (const auto& f : split(line)) table.header.push_back(trim(f));
  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != table.header.size())
      throw ConfigError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields");
    std::vector<double> row;
    for (const auto& raw : fields) {
      const std::string f = trim(raw);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw ConfigError("csv line " + std::to_string(line_no) + ": bad number '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  table.rows.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_csv(in);
}

std::vector<std::string> pendulum_columns() { return {"theta1", "omega1", "theta2", "omega2"}; }

std::vector<std::string> map_columns() { return {"sin_theta", "sin_p", "cos_theta", "cos_p"}; }

CsvTable trajectory_table(const Matrix& states, double t0, double dt,
                          const std::vector<std::string>& columns) {
  if (static_cast<std::size_t>(states.rows()) != columns.size())
    throw std::invalid_argument("trajectory_table: one column name per state row");
  CsvTable table;
  table.header.push_back("t");
  table.header.insert(table.header.end(), columns.begin(), columns.end());
  table.rows.resize(states.cols(), states.rows() + 1);
  for (Eigen::Index k = 0; k < states.cols(); ++k) {
    table.rows(k, 0) = t0 + static_cast<double>(k) * dt;
    table.rows.row(k).tail(states.rows()) = states.col(k).transpose();
  }
  return table;
}

}  // namespace hamrc

#include "survstack/csv.hpp"

#include <fstream>
#include <sstream>

namespace survstack {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim surrounding whitespace.
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no,
                    const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) +
                    ": cannot parse value '" + cell + "' in column '" +
                    column + "'");
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // numeric cells
  std::vector<std::size_t> line_numbers;
};

void raise_problems(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = "malformed CSV rows:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw DataError(msg);
}

Table read_table(std::istream& in, std::vector<std::string>* defer = nullptr) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(t.header.size()) + " columns, got " +
                         std::to_string(cells.size()));
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    bool ok = true;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      try {
        row.push_back(parse_number(cells[j], line_no, t.header[j]));
      } catch (const DataError& e) {
        problems.push_back(e.what());
        ok = false;
        break;
      }
    }
    if (ok) {
      t.rows.push_back(std::move(row));
      t.line_numbers.push_back(line_no);
    }
  }
  if (t.header.empty()) throw DataError("empty CSV: no header row");
  if (defer)
    *defer = std::move(problems);
  else
    raise_problems(problems);
  return t;
}

std::size_t find_column(const Table& t, const std::string& name) {
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == name) return j;
  throw DataError("missing required column '" + name + "'");
}

}  // namespace

SurvivalDataset read_survival_csv(std::istream& in) {
  std::vector<std::string> problems;
  const Table t = read_table(in, &problems);
  const std::size_t time_col = find_column(t, "time");
  const std::size_t event_col = find_column(t, "event");
  std::vector<std::string> names;
  std::vector<std::size_t> cov_cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == time_col || j == event_col) continue;
    names.push_back(t.header[j]);
    cov_cols.push_back(j);
  }
  std::vector<double> times;
  std::vector<bool> events;
  Matrix x(t.rows.size(), cov_cols.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double time = t.rows[i][time_col];
    if (!(time > 0.0))
      problems.push_back("line " + std::to_string(t.line_numbers[i]) +
                         ": non-positive time " + std::to_string(time));
    const double ev = t.rows[i][event_col];
    if (ev != 0.0 && ev != 1.0)
      problems.push_back("line " + std::to_string(t.line_numbers[i]) +
                         ": event must be 0 or 1");
    times.push_back(time);
    events.push_back(ev == 1.0);
    for (std::size_t j = 0; j < cov_cols.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          t.rows[i][cov_cols[j]];
  }
  raise_problems(problems);
  if (t.rows.empty()) throw DataError("CSV contains no data rows");
  try {
    return SurvivalDataset(std::move(times), std::move(events), std::move(x),
                           std::move(names));
  } catch (const Error& e) {
    throw DataError(e.what());
  }
}

SurvivalDataset read_survival_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return read_survival_csv(in);
}

Matrix read_covariate_csv(std::istream& in,
                          const std::vector<std::string>& covariate_names) {
  const Table t = read_table(in);
  std::vector<std::size_t> cols;
  std::vector<std::string> missing;
  for (const auto& name : covariate_names) {
    bool found = false;
    for (std::size_t j = 0; j < t.header.size(); ++j)
      if (t.header[j] == name) {
        cols.push_back(j);
        found = true;
        break;
      }
    if (!found) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "schema mismatch; missing columns:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }
  Matrix x(t.rows.size(), cols.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          t.rows[i][cols[j]];
  return x;
}

Matrix read_covariate_csv_file(
    const std::string& path, const std::vector<std::string>& covariate_names) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return read_covariate_csv(in, covariate_names);
}

}  // namespace survstack

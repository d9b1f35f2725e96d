#include "strata/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace strata {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

size_t find_column(const CsvTable& table, const std::string& name) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError("schema error: column '" + name + "' not found in CSV header");
  }
  return static_cast<size_t>(it - table.header.begin());
}

double parse_double(const std::string& s, size_t row, const std::string& col) {
  const std::string t = trim(s);
  if (t.empty()) {
    throw DataError("empty value at row " + std::to_string(row) + ", column '" + col + "'");
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw DataError("non-numeric value '" + t + "' at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  return v;
}

int parse_binary(const std::string& s, size_t row, const std::string& col) {
  const double v = parse_double(s, row, col);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw DataError("column '" + col + "' must be binary; found '" + trim(s) + "' at row " +
                  std::to_string(row));
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // strip a UTF-8 BOM if present
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line = line.substr(3);
  for (auto& h : split_line(line)) table.header.push_back(trim(h));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw DataError("row " + std::to_string(table.rows.size() + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

Dataset dataset_from_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (schema.covariates.empty()) throw DataError("schema error: no covariate columns named");
  const CsvTable table = read_csv(path);
  const size_t n = table.rows.size();
  if (n == 0) throw DataError("CSV file '" + path.string() + "' has no data rows");

  const size_t d_col = find_column(table, schema.treatment);
  const size_t y_col = find_column(table, schema.outcome);
  std::vector<size_t> x_cols;
  for (const auto& name : schema.covariates) x_cols.push_back(find_column(table, name));

  Dataset data;
  data.d.resize(static_cast<Eigen::Index>(n));
  data.y.resize(static_cast<Eigen::Index>(n));
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x_cols.size()));

  for (size_t i = 0; i < n; ++i) {
    data.d[static_cast<Eigen::Index>(i)] =
        parse_binary(table.rows[i][d_col], i + 1, schema.treatment);
    data.y[static_cast<Eigen::Index>(i)] =
        parse_binary(table.rows[i][y_col], i + 1, schema.outcome);
    for (size_t j = 0; j < x_cols.size(); ++j) {
      const double v = parse_double(table.rows[i][x_cols[j]], i + 1, schema.covariates[j]);
      if (!std::isfinite(v)) {
        throw DataError("non-finite covariate at row " + std::to_string(i + 1) + ", column '" +
                        schema.covariates[j] + "'");
      }
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }

  // min-max rescale each covariate column; constants collapse to 0
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const double lo = data.x.col(j).minCoeff();
    const double hi = data.x.col(j).maxCoeff();
    ColumnScaling sc{schema.covariates[static_cast<size_t>(j)], lo, hi};
    if (hi > lo) {
      data.x.col(j) = (data.x.col(j).array() - lo) / (hi - lo);
    } else {
      data.x.col(j).setZero();
    }
    data.scaling.push_back(sc);
  }

  auto read_optional_vec = [&](const std::string& name) -> Vec {
    const size_t col = find_column(table, name);
    Vec v(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      v[static_cast<Eigen::Index>(i)] = parse_double(table.rows[i][col], i + 1, name);
    }
    return v;
  };

  if (!schema.y1.empty() || !schema.y0.empty()) {
    if (schema.y1.empty() || schema.y0.empty()) {
      throw DataError("schema error: y1 and y0 must be named together");
    }
    GroundTruth truth;
    const size_t y1_col = find_column(table, schema.y1);
    const size_t y0_col = find_column(table, schema.y0);
    truth.y1.resize(static_cast<Eigen::Index>(n));
    truth.y0.resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      truth.y1[static_cast<Eigen::Index>(i)] = parse_binary(table.rows[i][y1_col], i + 1, schema.y1);
      truth.y0[static_cast<Eigen::Index>(i)] = parse_binary(table.rows[i][y0_col], i + 1, schema.y0);
    }
    if (!schema.m1.empty()) truth.m1 = read_optional_vec(schema.m1);
    if (!schema.m0.empty()) truth.m0 = read_optional_vec(schema.m0);
    if (!schema.strata.empty()) {
      if (schema.strata.size() != 4) {
        throw DataError("schema error: strata needs exactly 4 columns (e00,e10,e01,e11)");
      }
      Mat e(static_cast<Eigen::Index>(n), 4);
      for (int s = 0; s < 4; ++s) e.col(s) = read_optional_vec(schema.strata[static_cast<size_t>(s)]);
      truth.principal_scores = std::move(e);
    }
    data.truth = std::move(truth);
  }

  data.validate();
  return data;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file '" + path.string() + "'");
  for (size_t j = 0; j < header.size(); ++j) {
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw DataError("CSV row width mismatch while writing");
    for (size_t j = 0; j < row.size(); ++j) {
      out << row[j] << (j + 1 < row.size() ? "," : "\n");
    }
  }
}

void write_score_csv(const std::filesystem::path& path, const ScoreTable& scores) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<size_t>(scores.n()));
  for (Eigen::Index i = 0; i < scores.n(); ++i) {
    rows.push_back({std::to_string(i), format_double(scores.gamma0[i]),
                    format_double(scores.gamma1[i]), to_string(scores.method)});
  }
  write_csv(path, {"unit", "gamma0", "gamma1", "method"}, rows);
}

}  // namespace strata

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "strata/types.hpp"

namespace strata {

// Column mapping for CSV ingestion. Covariate columns are rescaled to [0,1]
// per column (constant columns map to 0). The optional truth columns let
// simulated exports round-trip.
struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  std::string y1;  // optional potential-outcome columns
  std::string y0;
  std::string m1;  // optional true conditional means
  std::string m0;
  std::vector<std::string> strata;  // optional, exactly 4: e00,e10,e01,e11
};

Dataset dataset_from_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Parsed, unvalidated CSV contents (header + rows of strings).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

// Minimal tidy-table writer shared by all report emitters.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_score_csv(const std::filesystem::path& path, const ScoreTable& scores);

std::string format_double(double v);

}  // namespace strata

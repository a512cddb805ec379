#pragma once

#include <iosfwd>

#include "survstack/types.hpp"

namespace survstack {

/// Malformed input data (bad CSV, schema mismatch). Separate from Error so
/// the CLI can map it to its own exit code.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Reads a survival dataset. Schema: header row; required columns `time`
/// and `event` (0/1); every remaining column is a numeric covariate, in
/// header order. Malformed rows are reported with their line number.
SurvivalDataset read_survival_csv(std::istream& in);
SurvivalDataset read_survival_csv_file(const std::string& path);

/// Reads covariate-only rows matching the given schema by column name.
/// Extra columns (including time/event) are ignored; missing ones are an
/// error naming the columns.
Matrix read_covariate_csv(std::istream& in,
                          const std::vector<std::string>& covariate_names);
Matrix read_covariate_csv_file(const std::string& path,
                               const std::vector<std::string>& covariate_names);

}  // namespace survstack

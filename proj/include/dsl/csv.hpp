#pragma once

#include <string>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/data_model.hpp"

namespace dsl {

/// Raw CSV contents before validation. Missing covariate cells (empty
/// strings) are stored as NaN; time/event/treatment may not be missing.
struct RawCsvData {
  MatrixXd x;  // may contain NaN where cells were empty
  VectorXd u;
  VectorXi delta;
  VectorXi w;
  int d = 0;

  bool has_missing() const { return !x.allFinite(); }
};

/// Reads `time,event,treatment,x1,...,xd` with a mandatory header.
RawCsvData read_dataset_csv(const std::string& path);

/// Replaces NaN covariate cells with the per-column mean over observed
/// cells. Errors if a column is entirely missing.
void mean_impute(RawCsvData& raw);

/// Validates raw contents (after any imputation) into a Dataset.
Dataset dataset_from_raw(const RawCsvData& raw);

/// Convenience: read + optional mean imputation + validate.
Dataset read_dataset(const std::string& path, bool impute_missing);

void write_dataset_csv(const Dataset& dataset, const std::string& path);

/// Writes a numeric table with the given header cells at full precision.
void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const MatrixXd& values);

/// Full-precision decimal rendering that round-trips doubles.
std::string format_double(double v);

}  // namespace dsl

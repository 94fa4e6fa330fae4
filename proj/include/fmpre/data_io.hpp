#pragma once

// Input parsing: the UCI processed heart-disease format and generic
// comma-separated tables with a header row.

#include "fmpre/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fmpre {

enum class SlopeEncoding { Numeric, Dummy };

struct HeartOptions {
  SlopeEncoding slope = SlopeEncoding::Numeric;
  /// Drop a row when any of its 14 fields is missing (gives 297 rows on the
  /// canonical file); when false only the three used fields are checked.
  bool drop_any_missing = true;
};

struct HeartData {
  Dataset data;            // y = disease stage, X = Omega = [1, Z1, Z2] (or slope dummies)
  VectorXd st_depression;  // Z1
  VectorXd st_slope;       // Z2 as coded in the file (1, 2, 3)
  int rows_read = 0;
  int rows_dropped = 0;
};

inline constexpr int kHeartColumns = 14;
inline constexpr int kHeartOldpeakColumn = 9;  // 0-based
inline constexpr int kHeartSlopeColumn = 10;
inline constexpr int kHeartStageColumn = 13;

HeartData parse_heart(std::istream& is, const HeartOptions& opts = {});
HeartData load_heart_dataset(const std::string& path, const HeartOptions& opts = {});

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;  // rows x header.size()

  int column(const std::string& name) const;  // throws ContractViolation if absent
};

/// Numeric CSV with a header line. Errors carry 1-based line numbers.
CsvTable parse_csv(std::istream& is);
CsvTable read_csv(const std::string& path);

/// Dataset from named columns; an intercept column is prepended to X and Omega.
Dataset dataset_from_table(const CsvTable& table, const std::string& response,
                           const std::vector<std::string>& x_cols,
                           const std::vector<std::string>& omega_cols);

/// Pearson correlation.
double correlation(const VectorXd& a, const VectorXd& b);

}  // namespace fmpre

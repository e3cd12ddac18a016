#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace serls::app {

/// Comma-separated table with a header row. Cells keep their raw text;
/// numeric conversion happens per column on request.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> raw_lines;  // data lines as read, without newline
  std::string raw_header;

  /// -1 when absent.
  long column_index(const std::string& name) const;
  /// Throws DataError for a missing column or a non-numeric cell.
  Eigen::VectorXd numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace serls::app

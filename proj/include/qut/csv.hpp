#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qut/model.hpp"

namespace qut {

/// Numeric table with a header row. Comma separated, '.' decimal point;
/// empty or non-numeric cells are rejected with InputError.
struct CsvTable {
  std::vector<std::string> header;
  Matrix data;

  /// Resolves a column by header name, or by 1-based position when `key` is
  /// a number that is not itself a header name.
  Index column(const std::string& key) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Text of the table in the same dialect, reals as "%.17g".
std::string format_csv(const std::vector<std::string>& header, const Matrix& data);

}  // namespace qut

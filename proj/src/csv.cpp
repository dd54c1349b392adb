#include "qut/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qut/report.hpp"

namespace qut {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  const auto where = " at data row " + std::to_string(row) + ", column " + std::to_string(col + 1);
  if (cell.empty()) throw InputError("missing value" + where);
  const char* first = cell.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw InputError("non-numeric value '" + cell + "'" + where);
  if (!std::isfinite(v)) throw InputError("non-finite value" + where);
  return v;
}

}  // namespace

Index CsvTable::column(const std::string& key) const {
  const auto it = std::find(header.begin(), header.end(), key);
  if (it != header.end()) return static_cast<Index>(it - header.begin());
  Index pos = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), pos);
  if (ec == std::errc() && ptr == key.data() + key.size() && pos >= 1 &&
      pos <= static_cast<Index>(header.size()))
    return pos - 1;
  throw InputError("no column named '" + key + "'");
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  CsvTable t;
  // Skip a UTF-8 byte-order mark and blank leading lines.
  while (std::getline(is, line)) {
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("CSV input is empty");
  t.header = split_line(line);
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j].empty()) throw InputError("empty header name in column " + std::to_string(j + 1));

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw InputError("data row " + std::to_string(rows.size() + 1) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(t.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_number(cells[j], rows.size() + 1, j);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("CSV input has no data rows");
  t.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return parse_csv(os.str());
}

std::string format_csv(const std::vector<std::string>& header, const Matrix& data) {
  std::ostringstream os;
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) os << (j ? "," : "") << format_real(data(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace qut

#ifndef BEC_CAVITY_RESULT_TABLE_HPP
#define BEC_CAVITY_RESULT_TABLE_HPP

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bec_cavity/errors.hpp"

namespace bec_cavity {

using Cell = std::variant<double, std::string>;

/// Shortest decimal text that still carries 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s == "nan") { out = std::numeric_limits<double>::quiet_NaN(); return true; }
  if (s == "inf") { out = std::numeric_limits<double>::infinity(); return true; }
  if (s == "-inf") { out = -std::numeric_limits<double>::infinity(); return true; }
  if (s.empty()) return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

/// Named columns, uniform rows, `#` metadata lines.
///
/// Text cells must not contain commas, quotes or line breaks.
class ResultTable {
public:
  ResultTable() = default;
  explicit ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return meta_; }
  std::size_t size() const { return rows_.size(); }

  void add_metadata(std::string key, std::string value) { meta_.emplace_back(std::move(key), std::move(value)); }

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw ValidationError("result table: row width differs from header");
    for (const Cell& c : row)
      if (const auto* s = std::get_if<std::string>(&c); s && s->find_first_of(",\"\r\n") != std::string::npos)
        throw ValidationError("result table: text cell contains a separator");
    rows_.push_back(std::move(row));
  }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw ValidationError("result table: no column " + std::string(name));
  }

  double number(std::size_t row, std::string_view col) const {
    const Cell& c = rows_.at(row).at(column_index(col));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    throw ValidationError("result table: cell is not numeric");
  }

  std::string text(std::size_t row, std::string_view col) const {
    const Cell& c = rows_.at(row).at(column_index(col));
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    return format_double(std::get<double>(c));
  }

  void write_csv(std::ostream& os) const {
    for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << '\n';
    write_row(os, columns_);
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        if (const auto* d = std::get_if<double>(&row[i])) os << format_double(*d);
        else os << std::get<std::string>(row[i]);
      }
      os << '\n';
    }
  }

  std::string to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
  }

  static ResultTable read_csv(std::istream& is) {
    ResultTable t;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') throw ValidationError("result table: CRLF line ending");
      if (!header && line.rfind("# ", 0) == 0) {
        const auto colon = line.find(": ");
        if (colon == std::string::npos) t.meta_.emplace_back(line.substr(2), "");
        else t.meta_.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
        continue;
      }
      std::vector<std::string> fields = split(line);
      if (!header) {
        t.columns_ = std::move(fields);
        header = true;
        continue;
      }
      std::vector<Cell> row;
      for (auto& f : fields) {
        double v;
        if (parse_double(f, v)) row.emplace_back(v);
        else row.emplace_back(std::move(f));
      }
      t.add_row(std::move(row));
    }
    if (!header) throw ValidationError("result table: missing header row");
    return t;
  }

  static ResultTable from_csv(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
  }

private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      out.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  static void write_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

/// Lines that do not start with '#'.
inline std::string data_section(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, out;
  while (std::getline(is, line))
    if (line.rfind('#', 0) != 0) out += line + '\n';
  return out;
}

} // namespace bec_cavity

#endif // BEC_CAVITY_RESULT_TABLE_HPP

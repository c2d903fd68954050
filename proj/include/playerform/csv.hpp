#pragma once

// Minimal RFC-4180 CSV support: quoted fields, embedded quotes doubled,
// embedded separators/newlines inside quotes. Output quotes only when needed
// so files stay byte-stable and diff-friendly.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "playerform/common.hpp"

namespace playerform {

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // reads one record (handles quoted newlines); false at EOF
  bool next(std::vector<std::string>& row);

  std::size_t line() const { return line_; }  // 1-based line of last record start

 private:
  std::istream& in_;
  std::size_t cur_line_ = 1;
  std::size_t line_ = 0;
};

std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& row);

// header lookup that records the original column order
class CsvHeader {
 public:
  explicit CsvHeader(const std::vector<std::string>& names);

  // throws SchemaMismatch when absent
  std::size_t index(std::string_view name) const;
  bool has(std::string_view name) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // throws SchemaMismatch unless the header is exactly `expected` in order
  void require_exact(const std::vector<std::string>& expected) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace playerform

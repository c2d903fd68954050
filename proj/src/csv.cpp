#include "playerform/csv.hpp"

namespace playerform {

bool CsvReader::next(std::vector<std::string>& row) {
  row.clear();
  int c = in_.get();
  // skip a completely empty trailing line
  if (c == std::char_traits<char>::eof()) return false;
  line_ = cur_line_;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (;;) {
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) throw ParseError("unterminated quoted CSV field at line " + std::to_string(line_));
      row.push_back(field);
      return true;
    }
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        int peek = in_.peek();
        if (peek == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++cur_line_;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !any) {
      in_quotes = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(field);
      field.clear();
      any = false;
    } else if (ch == '\r') {
      // swallow; newline handling below
    } else if (ch == '\n') {
      ++cur_line_;
      row.push_back(field);
      return true;
    } else {
      field.push_back(ch);
      any = true;
    }
    c = in_.get();
  }
}

std::string csv_escape(std::string_view field) {
  bool needs = false;
  for (char ch : field) {
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') {
      needs = true;
      break;
    }
  }
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string csv_join(const std::vector<std::string>& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(row[i]);
  }
  out.push_back('\n');
  return out;
}

CsvHeader::CsvHeader(const std::vector<std::string>& names) : names_(names) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!by_name_.emplace(names_[i], i).second)
      throw SchemaMismatch("duplicate CSV column: " + names_[i]);
  }
}

std::size_t CsvHeader::index(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw SchemaMismatch("missing CSV column: " + std::string(name));
  return it->second;
}

bool CsvHeader::has(std::string_view name) const {
  return by_name_.count(std::string(name)) != 0;
}

void CsvHeader::require_exact(const std::vector<std::string>& expected) const {
  if (names_ == expected) return;
  std::string msg = "CSV header mismatch; expected [" + join(expected, ',') + "] got [" +
                    join(names_, ',') + "]";
  throw SchemaMismatch(msg);
}

}  // namespace playerform

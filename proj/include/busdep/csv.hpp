#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace busdep {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line_no = 0;  // 1-based line where the record starts
  std::string raw;          // record text without the trailing newline
};

/// Minimal RFC4180-style reader: quoted fields, doubled-quote escapes,
/// delimiters and newlines inside quotes. Fully blank lines are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, char delimiter = ',')
      : in_(in), delim_(delimiter) {}

  bool next(CsvRow& row);

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 0;
};

std::string csv_escape(std::string_view field, char delimiter = ',');
std::string csv_join(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace busdep

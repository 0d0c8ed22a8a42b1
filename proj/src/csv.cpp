#include "busdep/csv.hpp"

#include <istream>

namespace busdep {

bool CsvReader::next(CsvRow& row) {
  row.fields.clear();
  row.raw.clear();

  int c = in_.get();
  // skip blank lines
  while (c == '\n' || c == '\r') {
    if (c == '\n') ++line_;
    c = in_.get();
  }
  if (c == std::istream::traits_type::eof()) return false;

  ++line_;
  row.line_no = line_;

  std::string field;
  bool in_quotes = false;
  bool record_done = false;
  while (!record_done) {
    if (c == std::istream::traits_type::eof()) {
      break;  // unterminated quote degrades to end-of-record
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          row.raw += "\"\"";
          field += '"';
        } else {
          row.raw += ch;
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        if (ch != '\r') field += ch;
        row.raw += ch;
      }
    } else {
      switch (ch) {
        case '"':
          in_quotes = true;
          row.raw += ch;
          break;
        case '\r':
          break;  // swallowed; paired \n ends the record
        case '\n':
          record_done = true;
          break;
        default:
          if (ch == delim_) {
            row.fields.push_back(std::move(field));
            field.clear();
          } else {
            field += ch;
          }
          row.raw += ch;
          break;
      }
    }
    if (!record_done) c = in_.get();
  }
  row.fields.push_back(std::move(field));
  return true;
}

std::string csv_escape(std::string_view field, char delimiter) {
  const bool needs_quotes =
      field.find(delimiter) != std::string_view::npos ||
      field.find('"') != std::string_view::npos ||
      field.find('\n') != std::string_view::npos ||
      field.find('\r') != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += delimiter;
    out += csv_escape(fields[i], delimiter);
  }
  return out;
}

}  // namespace busdep

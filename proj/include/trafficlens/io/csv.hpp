#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "trafficlens/core/error.hpp"

namespace trafficlens::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

// RFC 4180 style: comma separated, double-quoted fields may hold commas,
// newlines and "" escapes. CRLF and LF line endings are both accepted.
inline std::vector<Row> parse_rows(std::string_view text, std::string_view source = "<csv>") {
  std::vector<Row> rows;
  std::size_t pos = 0;
  std::size_t line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;  // UTF-8 BOM

  while (pos < text.size()) {
    Row row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    bool done = false;
    while (!done) {
      if (pos >= text.size()) {
        if (in_quotes) {
          fail(ErrorKind::kParse, std::string(source) + ":" + std::to_string(row.line) +
                                      ": unterminated quoted field");
        }
        row.fields.push_back(std::move(field));
        done = true;
        break;
      }
      const char c = text[pos];
      if (in_quotes) {
        if (c == '"') {
          if (pos + 1 < text.size() && text[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
          } else {
            in_quotes = false;
            ++pos;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++pos;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || field_quoted) {
            fail(ErrorKind::kParse, std::string(source) + ":" + std::to_string(line) +
                                        ": stray quote inside unquoted field");
          }
          in_quotes = true;
          field_quoted = true;
          ++pos;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          field_quoted = false;
          ++pos;
          break;
        case '\r':
          ++pos;
          break;
        case '\n':
          row.fields.push_back(std::move(field));
          ++pos;
          ++line;
          done = true;
          break;
        default:
          if (field_quoted) {
            fail(ErrorKind::kParse, std::string(source) + ":" + std::to_string(line) +
                                        ": text after closing quote");
          }
          field.push_back(c);
          ++pos;
      }
    }
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kParse, path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Table parse(std::string_view text, std::string_view source = "<csv>") {
  auto rows = parse_rows(text, source);
  require(!rows.empty(), ErrorKind::kParse, std::string(source) + ": missing header row");
  Table table;
  table.header = std::move(rows.front().fields);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].fields.size() != table.header.size()) {
      fail(ErrorKind::kParse, std::string(source) + ":" + std::to_string(rows[i].line) +
                                  ": expected " + std::to_string(table.header.size()) +
                                  " fields, found " + std::to_string(rows[i].fields.size()));
    }
    table.rows.push_back(std::move(rows[i]));
  }
  return table;
}

inline Table read(const std::string& path) { return parse(read_file(path), path); }

inline std::optional<double> to_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  return value;
}

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Shortest representation that parses back to the same double.
inline std::string format_number(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(fields[i]);
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace trafficlens::csv

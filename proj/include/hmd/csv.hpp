#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hmd/errors.hpp"

namespace hmd::csv {

/// Splits one CSV record. Quoted fields may contain commas and doubled
/// quotes; records spanning several lines are not supported.
inline std::vector<std::string> split(std::string_view line, std::size_t line_no = 0) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) {
        throw Error(ErrorKind::kParse, "stray quote inside unquoted field", line_no);
      }
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorKind::kParse, "unterminated quoted field", line_no);
  fields.push_back(std::move(field));
  return fields;
}

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Line-oriented reader accepting LF and CRLF endings and skipping blank
/// lines. Line numbers are 1-based.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_no_ = 0;
};

/// Reads the header line and checks it equals `expected` exactly.
inline void expect_header(LineReader& reader, std::string_view expected) {
  std::string line;
  if (!reader.next(line) || line != expected) {
    throw Error(ErrorKind::kFormat,
                "'" + reader.path() + "' must start with header '" + std::string(expected) + "'",
                reader.line_no());
  }
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace hmd::csv

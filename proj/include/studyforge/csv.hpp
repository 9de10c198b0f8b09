#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace studyforge::csv {

/// One parsed CSV record plus the 1-based line it starts on.
struct Record {
  std::vector<std::string> cells;
  int line = 0;
};

/// Parse CSV text. Dialect: comma delimiter, LF line endings (CRLF accepted
/// on input), minimal quoting with doubled embedded quotes. Quoted cells may
/// span lines. A UTF-8 BOM at the start is skipped. Throws ParseError on an
/// unterminated quote or on text following a closing quote.
std::vector<Record> parse(std::string_view text);

/// Quote a cell only when it contains a comma, quote, CR, or LF.
std::string escape_cell(std::string_view cell);

/// Render one row, LF-terminated.
std::string write_row(const std::vector<std::string>& cells);

}  // namespace studyforge::csv

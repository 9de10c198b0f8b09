#include "studyforge/csv.hpp"

#include "studyforge/error.hpp"

namespace studyforge::csv {

namespace {

bool needs_quoting(std::string_view cell) {
  return cell.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

std::vector<Record> parse(std::string_view text) {
  // Skip a UTF-8 BOM.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }

  std::vector<Record> records;
  std::size_t i = 0;
  int line = 1;

  while (i < text.size()) {
    Record record;
    record.line = line;
    std::string cell;
    bool in_quotes = false;
    bool cell_was_quoted = false;

    for (;; ++i) {
      if (i >= text.size()) {
        if (in_quotes) {
          throw ParseError("unterminated quoted cell", record.line);
        }
        record.cells.push_back(std::move(cell));
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            cell += '"';
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') {
            ++line;
          }
          cell += c;
        }
        continue;
      }
      if (c == '"') {
        if (!cell.empty() || cell_was_quoted) {
          throw ParseError("quote inside unquoted cell", line);
        }
        in_quotes = true;
        cell_was_quoted = true;
        continue;
      }
      if (cell_was_quoted && c != ',' && c != '\n' && c != '\r') {
        throw ParseError("text after closing quote", line);
      }
      if (c == ',') {
        record.cells.push_back(std::move(cell));
        cell.clear();
        cell_was_quoted = false;
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
          ++i;
        }
        ++i;
        ++line;
        record.cells.push_back(std::move(cell));
        break;
      }
      cell += c;
    }

    // A lone trailing newline does not produce an empty final record.
    if (i >= text.size() && record.cells.size() == 1 && record.cells[0].empty() &&
        !records.empty() && !cell_was_quoted) {
      break;
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string escape_cell(std::string_view cell) {
  if (!needs_quoting(cell)) {
    return std::string(cell);
  }
  std::string out;
  out.reserve(cell.size() + 2);
  out += '"';
  for (char c : cell) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

std::string write_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += escape_cell(cells[i]);
  }
  out += '\n';
  return out;
}

}  // namespace studyforge::csv

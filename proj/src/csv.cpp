#include "discern/csv.hpp"

#include "discern/common.hpp"
#include "discern/error.hpp"

namespace discern::csv {

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::string_view::npos;
}

Table parse(std::string_view text, std::string_view source) {
  Table table;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool have_header = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    const bool blank = row.size() == 1 && row[0].empty() && !field_started;
    const bool comment = !have_header && !row.empty() && !row[0].empty() && row[0][0] == '#';
    if (!blank && !comment) {
      if (!have_header) {
        table.header = std::move(row);
        have_header = true;
      } else {
        if (row.size() != table.header.size())
          throw LoadError(std::string(source) + ":" + std::to_string(row_line) + ": expected " +
                          std::to_string(table.header.size()) + " columns, found " + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(row_line);
      }
    }
    row.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw LoadError(std::string(source) + ":" + std::to_string(row_line) + ": unterminated quote");
  if (field_started || !field.empty() || !row.empty()) end_row();
  if (!have_header) throw LoadError(std::string(source) + ": empty CSV (no header row)");
  return table;
}

Table read(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(row[i]);
  }
  return out;
}

}  // namespace discern::csv

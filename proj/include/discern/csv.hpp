#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace discern::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
};

// RFC 4180 subset: comma separated, double-quote escaping, CRLF tolerated.
// Lines starting with '#' before the header are treated as comments.
Table parse(std::string_view text, std::string_view source);
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string join(const Row& row);

}  // namespace discern::csv

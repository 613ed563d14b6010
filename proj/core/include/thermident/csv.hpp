#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace thermident {

/// Plain comma-separated table without quoting; every row has as many
/// fields as the header. Lines starting with '#' are comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`; throws Error(kIo) if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Parses a field; empty, "nan" and "NaN" give quiet NaN.
double parse_field(const std::string& field);

}  // namespace thermident

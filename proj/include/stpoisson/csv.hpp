#ifndef STPOISSON_CSV_HPP
#define STPOISSON_CSV_HPP

#include <map>
#include <string>
#include <vector>

namespace stpoisson {

/// Minimal CSV table: a header row, string cells, and '#'-prefixed metadata
/// lines ("# key: value") collected separately. No quoting; labels must not
/// contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> meta;
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::pair<std::string, std::string>>& meta,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Round-trip exact formatting ("%.17g").
std::string format_double(double v);

/// Parse with row/column coordinates in the error message.
double parse_double(const std::string& cell, const std::string& path, int row, int col);

/// FNV-1a, used for config hashes and model-token seed streams.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace stpoisson

#endif

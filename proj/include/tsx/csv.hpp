#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tsx::csv {

/// Shortest round-trip decimal representation of a double ("nan"/"inf"
/// spelled out). Reports are byte-stable because this is the single
/// formatting path for every emitted number.
std::string format_double(double v);

/// Split one CSV line on commas. No quoting support; the formats used here
/// never contain embedded commas. A trailing '\r' is stripped.
std::vector<std::string> split_line(std::string_view line);

/// Read all lines of a file. Throws std::runtime_error when unreadable.
std::vector<std::string> read_lines(const std::string& path);

/// Line-oriented CSV writer.
class Writer {
 public:
  explicit Writer(const std::string& path);

  void raw_row(std::string_view joined);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

}  // namespace tsx::csv

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cislunar::csv {

/// Shortest decimal text that round-trips to the same double.
std::string fmt(double v);

double parse_double(std::string_view s);
long parse_long(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers; ///< source line of each row (1-based)
};

/// Reads a comma-separated file, skipping blank lines and lines starting with
/// '#'. When `has_header` the first data line becomes the header.
Table read(const std::filesystem::path& path, bool has_header);

} // namespace cislunar::csv

#include "cislunar/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "cislunar/errors.hpp"

namespace cislunar::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

long parse_long(std::string_view s) {
    s = trim(s);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Table read(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    Table t;
    std::string line;
    int lineno = 0;
    bool need_header = has_header;
    while (std::getline(in, line)) {
        ++lineno;
        const auto v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        if (need_header) {
            t.header = split(v);
            need_header = false;
            continue;
        }
        t.rows.push_back(split(v));
        t.line_numbers.push_back(lineno);
    }
    return t;
}

} // namespace cislunar::csv

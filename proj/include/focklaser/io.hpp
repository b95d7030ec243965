#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

// Result envelopes: a config echo, scalar results and one table, written as CSV
// (byte-deterministic) or JSON (adds the wall-clock duration).
namespace focklaser::io {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct Table {
    std::string version;
    KeyValues config;   // echoed as "# key=value"
    KeyValues results;  // echoed as "# result.key=value"
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    double duration = 0.0;  // seconds; JSON only

    void add_row(std::vector<std::string> row);
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    const std::string* result(const std::string& key) const;

    bool operator==(const Table&) const = default;
};

/// 17 significant digits, so that parsing gives back the same double.
std::string format(double x);
std::string format(int x);
double parse_double(const std::string& s);

void write_csv(std::ostream& os, const Table& t);
Table read_csv(std::istream& is);

std::string to_json(const Table& t);
Table from_json(const std::string& text);

} // namespace focklaser::io

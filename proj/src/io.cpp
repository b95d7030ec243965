#include "focklaser/io.hpp"

#include "focklaser/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace focklaser::io {

namespace {

constexpr const char* kMagic = "# focklaser v";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

void check_cell(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
        throw ValidationError("csv: cell contains a separator: '" + s + "'");
    }
}

void check_key(const std::string& k) {
    if (k.empty() || k.find_first_of("=\n\r") != std::string::npos) {
        throw ValidationError("csv: bad config key '" + k + "'");
    }
}

} // namespace

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
        throw ValidationError("table: row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw ValidationError("table: no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
    return parse_double(rows.at(row).at(column(name)));
}

const std::string* Table::result(const std::string& key) const {
    for (const auto& [k, v] : results) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

std::string format(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format(int x) { return std::to_string(x); }

double parse_double(const std::string& s) {
    if (s == "nan") {
        return std::nan("");
    }
    if (s == "inf") {
        return HUGE_VAL;
    }
    if (s == "-inf") {
        return -HUGE_VAL;
    }
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError("not a number: '" + s + "'");
    }
    return v;
}

void write_csv(std::ostream& os, const Table& t) {
    os << kMagic << t.version << '\n';
    for (const auto& [k, v] : t.config) {
        check_key(k);
        os << "# " << k << '=' << v << '\n';
    }
    for (const auto& [k, v] : t.results) {
        check_key(k);
        os << "# result." << k << '=' << v << '\n';
    }
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        check_cell(t.columns[c]);
        os << (c ? "," : "") << t.columns[c];
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            check_cell(row[c]);
            os << (c ? "," : "") << row[c];
        }
        os << '\n';
    }
}

Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line) || line.rfind(kMagic, 0) != 0) {
        throw ValidationError("csv: missing focklaser header line");
    }
    t.version = line.substr(std::string(kMagic).size());
    bool header = false;
    while (std::getline(is, line)) {
        if (line.rfind("# ", 0) == 0 && !header) {
            const std::string body = line.substr(2);
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                throw ValidationError("csv: comment without '=': " + line);
            }
            std::string key = body.substr(0, eq);
            std::string value = body.substr(eq + 1);
            if (key.rfind("result.", 0) == 0) {
                t.results.emplace_back(key.substr(7), std::move(value));
            } else {
                t.config.emplace_back(std::move(key), std::move(value));
            }
        } else if (!header) {
            t.columns = split(line, ',');
            header = true;
        } else {
            t.add_row(split(line, ','));
        }
    }
    if (!header) {
        throw ValidationError("csv: no header row");
    }
    return t;
}

namespace {

nlohmann::ordered_json pairs(const KeyValues& kv) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [k, v] : kv) {
        arr.push_back({k, v});
    }
    return arr;
}

KeyValues unpairs(const nlohmann::ordered_json& arr) {
    KeyValues kv;
    for (const auto& e : arr) {
        kv.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    return kv;
}

} // namespace

// Cells stay strings so that the JSON and CSV forms carry identical digits.
std::string to_json(const Table& t) {
    nlohmann::ordered_json j;
    j["focklaser"] = t.version;
    j["duration_s"] = t.duration;
    j["config"] = pairs(t.config);
    j["results"] = pairs(t.results);
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    return j.dump(1) + "\n";
}

Table from_json(const std::string& text) {
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        Table t;
        t.version = j.at("focklaser").get<std::string>();
        t.duration = j.at("duration_s").get<double>();
        t.config = unpairs(j.at("config"));
        t.results = unpairs(j.at("results"));
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& row : j.at("rows")) {
            t.add_row(row.get<std::vector<std::string>>());
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("json: ") + e.what());
    }
}

} // namespace focklaser::io

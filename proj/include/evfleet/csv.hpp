#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evfleet/errors.hpp"

namespace evfleet::csv {

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Reads a CSV file, checks the header matches exactly, returns data rows.
inline std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                       const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header in " + path);
    if (split_row(line) != header) throw ParseError("bad header in " + path + ": got '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_row(line);
        if (fields.size() != header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }
    return rows;
}

inline long long to_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad integer for " + what + ": '" + s + "'");
    }
}

inline double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad number for " + what + ": '" + s + "'");
    }
}

}  // namespace evfleet::csv

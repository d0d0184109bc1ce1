#pragma once
// Column-oriented CSV output with 17-significant-digit floats (round-trip
// exact) and leading comment lines for schema/manifest metadata.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fit/errors.hpp"

namespace fit {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> comments;       // written as "# ..." lines
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
};

inline std::string render_csv(const CsvTable& t) {
    if (t.column_names.size() != t.columns.size())
        throw ConfigError("csv column name/data count mismatch");
    const std::size_t rows = t.columns.empty() ? 0 : t.columns.front().size();
    for (const auto& c : t.columns)
        if (c.size() != rows) throw ConfigError("csv columns differ in length");

    std::string out;
    for (const auto& c : t.comments) out += "# " + c + "\n";
    for (std::size_t j = 0; j < t.column_names.size(); ++j) {
        if (j) out += ",";
        out += t.column_names[j];
    }
    out += "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            if (j) out += ",";
            out += format_g17(t.columns[j][i]);
        }
        out += "\n";
    }
    return out;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path);
    f << render_csv(t);
}

} // namespace fit

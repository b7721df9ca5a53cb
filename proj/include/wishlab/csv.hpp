#ifndef WISHLAB_CSV_HPP
#define WISHLAB_CSV_HPP

#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wishlab/errors.hpp"

namespace wishlab::csv {

/// Locale-independent, round-trippable rendering (17 significant digits).
inline std::string format(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline double parse_double(const std::string& text) {
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v = 0.0;
    in >> v;
    if (in.fail()) throw DomainError("csv: cannot parse number '" + text + "'");
    return v;
}

} // namespace wishlab::csv

#endif // WISHLAB_CSV_HPP

#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace mgtc {

// Shortest decimal string that parses back to exactly v; ties between
// precisions go to the lower one, so 100.0 prints as "100", not "1e+02".
inline std::string format_double(double v) {
    char buf[64];
    std::string best;
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v && (best.empty() || std::string_view(buf).size() < best.size())) {
            best = buf;
        }
    }
    return best;
}

}  // namespace mgtc

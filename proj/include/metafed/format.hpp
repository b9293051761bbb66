#pragma once

#include <cstdio>
#include <string>

namespace metafed {

// Render a double with 9 significant digits; the shared float format of every
// text artifact (CSV, JSON-lines, summaries).
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace metafed

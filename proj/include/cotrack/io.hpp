#pragma once

#include <cstdio>
#include <string>

namespace cotrack {

// Fixed 9-significant-digit formatting so identical runs produce identical
// bytes in every CSV/JSON we write.
inline std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

}  // namespace cotrack

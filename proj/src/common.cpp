#include "common.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace kserver {

std::string format12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

double round12(double x) {
    if (!std::isfinite(x)) return x;
    return std::strtod(format12(x).c_str(), nullptr);
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace kserver

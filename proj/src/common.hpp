#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kserver {

inline constexpr const char* kVersion = "0.1.0";

// Absolute slack allowed on the triangle inequality and on pmf normalization.
inline constexpr double kMetricSlack = 1e-9;
inline constexpr double kPmfSlack = 1e-9;

// Slack used by the certification inequalities.
inline constexpr double kCertifySlack = 1e-9;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

class TooLargeError : public Error {
public:
    TooLargeError(const std::string& msg, std::uint64_t count, std::uint64_t limit)
        : Error(msg), count(count), limit(limit) {}
    std::uint64_t count;
    std::uint64_t limit;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double span, long iterations)
        : Error(msg), span(span), iterations(iterations) {}
    double span;
    long iterations;
};

// splitmix64 finalizer; used to derive independent substreams from one seed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + 1));
}

// Uniform double in [0,1) from the top 53 bits; avoids the
// implementation-defined std::uniform_real_distribution so that streams are
// identical across standard libraries.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Neumaier compensated summation; keeps replicated reductions reproducible
// independent of run-to-run scheduling.
class Accumulator {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// All numbers in result documents carry 12 significant digits.
std::string format12(double x);
double round12(double x);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace kserver

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "instance.hpp"

namespace kserver {

struct MedianSet {
    std::vector<int> medians;   // point indices; sorted for set solutions,
                                // meaningful order for the server-dependent variant
    double objective = 0.0;
};

struct ApproxReport {
    double heuristic_objective = 0.0;
    std::optional<double> exact_objective;  // present when exact enumeration is feasible
    std::optional<double> ratio;
    long swaps_used = 0;
    long iterations = 0;
};

// Expected distance from a random request to its nearest median.
double kmedian_objective(const MetricInstance& inst, std::span<const int> medians);
double generalized_kmedian_objective(const ServerDependentInstance& inst,
                                     std::span<const int> medians);
double multi_kmedian_objective(const MultiRequestInstance& inst, std::span<const int> medians);

// Exhaustive solvers. Ties break to the lexicographically smallest index
// tuple. Enumeration guards throw TooLargeError.
MedianSet kmedian_exact(const MetricInstance& inst);
MedianSet generalized_kmedian_exact(const ServerDependentInstance& inst);
MedianSet multi_kmedian_exact(const MultiRequestInstance& inst);

// Swap-based local search with greedy seeding; `seed` perturbs tie order in
// the seeding phase. delta is the relative improvement a swap must exceed to
// be taken; delta = 0 yields a true local optimum.
std::pair<MedianSet, ApproxReport> kmedian_local_search(const MetricInstance& inst,
                                                        int swap_size = 1, double delta = 1e-6,
                                                        std::uint64_t seed = 0);

inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

}  // namespace kserver

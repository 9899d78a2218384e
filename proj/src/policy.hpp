#pragma once

#include <span>
#include <vector>

#include "instance.hpp"
#include "kmedian.hpp"

namespace kserver {

enum class PolicyVariant { base, server_dependent };

// Decentralized dispatch rule: a fixed partition of the points, cell i owned
// by server i. Dispatch depends on the request alone, never on server
// positions. Ties in cell membership go to the lowest server index.
struct PartitionPolicy {
    PolicyVariant variant = PolicyVariant::base;
    std::vector<int> medians;
    std::vector<std::vector<int>> cells;  // cells[i] = sorted points owned by server i
    std::vector<int> owner;               // owner[s] = server owning point s
    std::uint64_t instance_digest = 0;
};

PartitionPolicy build_partition(const MetricInstance& inst, std::span<const int> medians);
PartitionPolicy build_partition(const ServerDependentInstance& inst, std::span<const int> medians);

int dispatch(const PartitionPolicy& policy, int request);

// Decentralized rule for n simultaneous requests: match requests to the
// fixed medians, then the server associated with each matched median serves
// that request.
struct MultiDispatchPolicy {
    std::vector<int> medians;
    std::vector<std::vector<double>> median_dist;  // median_dist[i][s] = d(m_i, s)
    int n = 1;
    std::uint64_t instance_digest = 0;
    int k() const { return static_cast<int>(medians.size()); }
};

MultiDispatchPolicy build_multi_dispatch(const MultiRequestInstance& inst,
                                         std::span<const int> medians);

// Injective min-cost assignment of requests to servers; ties resolve to the
// lexicographically smallest assignment vector. Equals the exhaustive
// minimum over all injective assignments.
std::vector<int> dispatch_multi(const MultiDispatchPolicy& policy, std::span<const int> requests);

}  // namespace kserver

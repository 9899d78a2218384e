#include "policy.hpp"

#include <limits>

#include "matching.hpp"

namespace kserver {

namespace {

void check_medians(int num_points, std::span<const int> medians) {
    if (medians.empty()) throw Error("median set is empty");
    for (int m : medians)
        if (m < 0 || m >= num_points)
            throw Error("median index " + std::to_string(m) + " out of range");
}

PartitionPolicy assign_cells(int num_points, int k, std::span<const int> medians,
                             PolicyVariant variant,
                             const std::vector<std::vector<double>>& score) {
    PartitionPolicy policy;
    policy.variant = variant;
    policy.medians.assign(medians.begin(), medians.end());
    policy.cells.resize(k);
    policy.owner.resize(num_points);
    for (int s = 0; s < num_points; ++s) {
        int best = 0;
        for (int i = 1; i < k; ++i)
            if (score[i][s] < score[best][s]) best = i;  // strict: ties keep the lower index
        policy.owner[s] = best;
        policy.cells[best].push_back(s);
    }
    return policy;
}

}  // namespace

PartitionPolicy build_partition(const MetricInstance& inst, std::span<const int> medians) {
    check_medians(inst.size(), medians);
    const int k = static_cast<int>(medians.size());
    std::vector<std::vector<double>> score(k, std::vector<double>(inst.size()));
    for (int i = 0; i < k; ++i)
        for (int s = 0; s < inst.size(); ++s) score[i][s] = inst.dist[medians[i]][s];
    PartitionPolicy p =
        assign_cells(inst.size(), k, medians, PolicyVariant::base, score);
    p.instance_digest = instance_digest(inst);
    return p;
}

PartitionPolicy build_partition(const ServerDependentInstance& inst,
                                std::span<const int> medians) {
    check_medians(inst.size(), medians);
    if (static_cast<int>(medians.size()) != inst.k())
        throw Error("server-dependent partition needs exactly one median per server");
    const int k = inst.k();
    std::vector<std::vector<double>> score(k, std::vector<double>(inst.size()));
    for (int i = 0; i < k; ++i)
        for (int s = 0; s < inst.size(); ++s)
            score[i][s] = inst.dists[i][medians[i]][s] + inst.proc_costs[i][s];
    PartitionPolicy p =
        assign_cells(inst.size(), k, medians, PolicyVariant::server_dependent, score);
    p.instance_digest = instance_digest(inst);
    return p;
}

int dispatch(const PartitionPolicy& policy, int request) {
    if (request < 0 || request >= static_cast<int>(policy.owner.size()))
        throw Error("request index " + std::to_string(request) + " out of range");
    return policy.owner[request];
}

MultiDispatchPolicy build_multi_dispatch(const MultiRequestInstance& inst,
                                         std::span<const int> medians) {
    check_medians(inst.size(), medians);
    MultiDispatchPolicy policy;
    policy.medians.assign(medians.begin(), medians.end());
    policy.n = inst.n;
    policy.median_dist.resize(medians.size());
    for (size_t i = 0; i < medians.size(); ++i) {
        policy.median_dist[i].resize(inst.size());
        for (int s = 0; s < inst.size(); ++s)
            policy.median_dist[i][s] = inst.base.dist[medians[i]][s];
    }
    policy.instance_digest = instance_digest(inst);
    return policy;
}

std::vector<int> dispatch_multi(const MultiDispatchPolicy& policy,
                                std::span<const int> requests) {
    const int n = static_cast<int>(requests.size());
    const int k = policy.k();
    if (n > k) throw Error("more simultaneous requests than servers");
    const int num_points = static_cast<int>(policy.median_dist.empty()
                                                ? 0
                                                : policy.median_dist[0].size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(k));
    for (int j = 0; j < n; ++j) {
        if (requests[j] < 0 || requests[j] >= num_points)
            throw Error("request index " + std::to_string(requests[j]) + " out of range");
        for (int i = 0; i < k; ++i) cost[j][i] = policy.median_dist[i][requests[j]];
    }
    return min_cost_assignment_lex(cost).row_to_col;
}

}  // namespace kserver

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "instance.hpp"
#include "mdp.hpp"
#include "policy.hpp"

namespace kserver {

struct MdpState {
    std::vector<int> positions;
    std::vector<int> requests;  // one entry unless multi-request
};

struct SimStats {
    std::int64_t horizon = 0;
    std::int64_t burn_in = 0;
    int replications = 0;
    double mean_cost = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t seed = 0;
    MdpState initial;
    // named generator recorded so traces can be reproduced elsewhere
    std::string generator = "mt19937_64";
};

struct TraceRow {
    std::int64_t t = 0;
    int j = 0;  // request slot within the period
    int request = 0;
    int server = 0;
    double cost = 0.0;
};

// Seeded Monte Carlo estimate of the long-run average cost. Replication r
// draws its requests from an independent substream derived from (seed, r);
// identical arguments give bit-identical results. Periods
// burn_in..horizon-1 enter the average.
SimStats simulate(const MetricInstance& inst, const PartitionPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in);
SimStats simulate(const ServerDependentInstance& inst, const PartitionPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in);
SimStats simulate(const MultiRequestInstance& inst, const MultiDispatchPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in);
// State-feedback table policy; the instance must fit the model guard.
SimStats simulate(const MdpModel& model, const PolicyTable& table, const MdpState& initial,
                  std::int64_t horizon, int replications, std::uint64_t seed,
                  std::int64_t burn_in);

// Deterministic replay of replication 0.
std::vector<TraceRow> trace(const MetricInstance& inst, const PartitionPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed);
std::vector<TraceRow> trace(const ServerDependentInstance& inst, const PartitionPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed);
std::vector<TraceRow> trace(const MultiRequestInstance& inst, const MultiDispatchPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed);
std::vector<TraceRow> trace(const MdpModel& model, const PolicyTable& table,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed);

// CSV export: t,request,server,cost (multi-request adds a j column).
std::string trace_csv(const std::vector<TraceRow>& rows, bool multi);

}  // namespace kserver

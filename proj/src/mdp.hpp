#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "instance.hpp"
#include "policy.hpp"

namespace kserver {

enum class ModelVariant { base, server_dependent, multi_request };

// Explicit finite MDP for the dispatch problem. A state is the server
// position tuple together with the pending request(s); the action is the
// dispatched server (or injective server tuple). States are enumerated
// lexicographically in (x_1, ..., x_k, request...), positions most
// significant.
struct MdpModel {
    ModelVariant variant = ModelVariant::base;
    int num_points = 0;  // |S|
    int k = 0;
    int n = 1;  // requests per period
    std::uint64_t digest = 0;

    std::vector<Matrix> dist;                 // [k] matrices (server-dependent) or [1]
    std::vector<std::vector<double>> proc;    // server-dependent only
    std::vector<double> req_pmf;              // normalized, dense over request indices
    std::vector<int> req_support;             // request indices with positive probability
    std::vector<std::vector<int>> actions;    // multi-request: injective tuples in lex order

    std::uint64_t num_positions = 0;  // |S|^k
    std::uint64_t num_requests = 0;   // |S|^n
    std::uint64_t num_states = 0;     // positions * requests
    int num_actions = 0;

    std::vector<std::uint64_t> pos_pow;  // |S|^(k-1-i)
    std::vector<std::uint64_t> req_pow;  // |S|^(n-1-j)

    std::uint64_t encode(std::span<const int> positions, std::span<const int> requests) const;
    void decode_positions(std::uint64_t pos_idx, std::vector<int>& out) const;
    void decode_requests(std::uint64_t req_idx, std::vector<int>& out) const;

    // One-step cost and position update from pre-decoded digits.
    double cost_digits(const std::vector<int>& pos, const std::vector<int>& req,
                       int action) const;
    std::uint64_t next_pos_digits(const std::vector<int>& pos, std::uint64_t pos_idx,
                                  const std::vector<int>& req, int action) const;

    // Convenience forms working on a packed state id.
    double cost(std::uint64_t state, int action) const;
    std::uint64_t next_position_index(std::uint64_t state, int action) const;
};

inline constexpr std::uint64_t kStateLimit = 2'000'000;

MdpModel build_mdp(const MetricInstance& inst);
MdpModel build_mdp(const ServerDependentInstance& inst);
MdpModel build_mdp(const MultiRequestInstance& inst);
MdpModel build_mdp(const Instance& inst);

struct PolicyTable {
    std::vector<int> action;  // one action id per state
    std::uint64_t digest = 0;
};

PolicyTable policy_from_partition(const MdpModel& model, const PartitionPolicy& policy);
PolicyTable policy_from_partition(const MdpModel& model, const MultiDispatchPolicy& policy);
PolicyTable greedy_policy(const MdpModel& model);

struct RecurrentClass {
    std::vector<std::uint32_t> states;
    double gain = 0.0;
};

struct EvalResult {
    std::vector<double> gain;  // long-run average cost per initial state
    std::vector<RecurrentClass> classes;
    std::string method = "exact";

    bool unichain() const { return classes.size() == 1; }
    double gain_min() const;
    double gain_max() const;
};

// Exact average cost of a stationary policy: recurrent-class decomposition,
// direct stationary solves, and absorption-weighted gains for transient
// states.
EvalResult evaluate_exact(const MdpModel& model, const PolicyTable& table);

struct SolveResult {
    PolicyTable policy;
    EvalResult eval;
    long iterations = 0;
    double final_span = 0.0;
};

// Average-cost optimal policy by relative value iteration on the
// aperiodicity-transformed kernel (1-alpha) I + alpha P.
SolveResult solve_optimal(const MdpModel& model, double span_tol = 1e-10,
                          long max_iterations = 1'000'000, double alpha = 0.9);

using PotentialTable = std::vector<double>;

// Drift bounds from an arbitrary potential h:
//   upper: sup_x { r(x, mu(x)) + E[h(next)|x, mu(x)] - h(x) }  >= J(mu, x0)
//   lower: inf_{x,u} { r(x,u) + E[h(next)|x,u] - h(x) }        <= J(mu*, x0)
double drift_upper_bound(const MdpModel& model, const PolicyTable& table, const PotentialTable& h);
double drift_lower_bound(const MdpModel& model, const PotentialTable& h);

// The potentials that make the bounds tight: h_L(x) = cheapest immediate
// service from the current positions; h_U(x) = twice the cheapest service
// from the medians plus the positions' displacement from the medians.
PotentialTable canonical_h_lower(const MdpModel& model);
PotentialTable canonical_h_upper(const MdpModel& model, std::span<const int> medians);

}  // namespace kserver

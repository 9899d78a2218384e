#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace kserver {

namespace {

// Inverse-CDF sampler over a fixed index order.
class PmfSampler {
public:
    explicit PmfSampler(const std::vector<double>& pmf) {
        Accumulator total;
        for (double p : pmf) total.add(p);
        double t = total.value();
        if (!(t > 0.0)) throw Error("pmf has no positive mass");
        cum_.reserve(pmf.size());
        double run = 0.0;
        for (double p : pmf) {
            run += p / t;
            cum_.push_back(run);
        }
        cum_.back() = 1.0;
    }

    int sample(std::mt19937_64& gen) const {
        double u = uniform01(gen);
        auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        if (it == cum_.end()) --it;
        return static_cast<int>(it - cum_.begin());
    }

private:
    std::vector<double> cum_;
};

// One period of the dispatch loop, shared by every policy kind. A context
// supplies the request sampler, the dispatch rule, and per-pair costs.
template <class Ctx>
struct Engine {
    const Ctx& ctx;
    std::int64_t horizon;
    std::int64_t burn_in;
    const MdpState& initial;

    void check(int k, int n, int num_points) const {
        if (burn_in < 0 || horizon <= burn_in)
            throw Error("simulation needs horizon > burn_in >= 0");
        if (static_cast<int>(initial.positions.size()) != k)
            throw Error("initial state has wrong number of server positions");
        if (static_cast<int>(initial.requests.size()) != n)
            throw Error("initial state has wrong number of requests");
        for (int p : initial.positions)
            if (p < 0 || p >= num_points) throw Error("initial server position out of range");
        for (int r : initial.requests)
            if (r < 0 || r >= num_points) throw Error("initial request out of range");
    }

    // runs one replication; when rows != nullptr, records the trace
    double replication(std::uint64_t rep_seed, std::vector<TraceRow>* rows) const {
        std::mt19937_64 gen(rep_seed);
        std::vector<int> positions = initial.positions;
        std::vector<int> requests = initial.requests;
        std::vector<int> servers(requests.size(), 0);
        Accumulator window;
        for (std::int64_t t = 0; t < horizon; ++t) {
            ctx.dispatch(positions, requests, servers);
            double period_cost = 0.0;
            for (size_t j = 0; j < requests.size(); ++j) {
                double c = ctx.pair_cost(positions, requests, servers, static_cast<int>(j));
                period_cost += c;
                if (rows)
                    rows->push_back({t, static_cast<int>(j), requests[j], servers[j], c});
            }
            if (t >= burn_in) window.add(period_cost);
            for (size_t j = 0; j < requests.size(); ++j) positions[servers[j]] = requests[j];
            ctx.sample_requests(gen, requests);
        }
        return window.value() / static_cast<double>(horizon - burn_in);
    }

    SimStats run(int replications, std::uint64_t seed) const {
        if (replications < 1) throw Error("simulation needs at least one replication");
        std::vector<double> means(replications);
        for (int r = 0; r < replications; ++r)
            means[r] = replication(stream_seed(seed, static_cast<std::uint64_t>(r)), nullptr);

        Accumulator sum;
        for (double m : means) sum.add(m);
        double mean = sum.value() / replications;
        double se = 0.0;
        if (replications > 1) {
            Accumulator sq;
            for (double m : means) sq.add((m - mean) * (m - mean));
            se = std::sqrt(sq.value() / (replications - 1) / replications);
        }
        SimStats stats;
        stats.horizon = horizon;
        stats.burn_in = burn_in;
        stats.replications = replications;
        stats.mean_cost = mean;
        stats.std_error = se;
        stats.ci_lo = mean - 1.96 * se;
        stats.ci_hi = mean + 1.96 * se;
        stats.seed = seed;
        stats.initial = initial;
        return stats;
    }

    std::vector<TraceRow> run_trace(std::uint64_t seed) const {
        std::vector<TraceRow> rows;
        if (horizon > 0) replication(stream_seed(seed, 0), &rows);
        return rows;
    }
};

struct BasePartitionCtx {
    const MetricInstance& inst;
    const PartitionPolicy& policy;
    PmfSampler sampler;

    BasePartitionCtx(const MetricInstance& i, const PartitionPolicy& p)
        : inst(i), policy(p), sampler(i.pmf) {
        if (policy.instance_digest != instance_digest(i))
            throw Error("policy and instance do not match");
    }
    void sample_requests(std::mt19937_64& gen, std::vector<int>& req) const {
        req[0] = sampler.sample(gen);
    }
    void dispatch(const std::vector<int>&, const std::vector<int>& req,
                  std::vector<int>& servers) const {
        servers[0] = policy.owner[req[0]];
    }
    double pair_cost(const std::vector<int>& pos, const std::vector<int>& req,
                     const std::vector<int>& servers, int j) const {
        return inst.dist[pos[servers[j]]][req[j]];
    }
};

struct ServerDepPartitionCtx {
    const ServerDependentInstance& inst;
    const PartitionPolicy& policy;
    PmfSampler sampler;

    ServerDepPartitionCtx(const ServerDependentInstance& i, const PartitionPolicy& p)
        : inst(i), policy(p), sampler(i.pmf) {
        if (policy.instance_digest != instance_digest(i))
            throw Error("policy and instance do not match");
        if (policy.variant != PolicyVariant::server_dependent)
            throw Error("policy variant does not match the instance");
    }
    void sample_requests(std::mt19937_64& gen, std::vector<int>& req) const {
        req[0] = sampler.sample(gen);
    }
    void dispatch(const std::vector<int>&, const std::vector<int>& req,
                  std::vector<int>& servers) const {
        servers[0] = policy.owner[req[0]];
    }
    double pair_cost(const std::vector<int>& pos, const std::vector<int>& req,
                     const std::vector<int>& servers, int j) const {
        int u = servers[j];
        return inst.dists[u][pos[u]][req[j]] + inst.proc_costs[u][req[j]];
    }
};

struct MultiCtx {
    const MultiRequestInstance& inst;
    const MultiDispatchPolicy& policy;
    RequestMode mode;
    PmfSampler base_sampler;          // iid-product: n independent draws
    std::vector<std::vector<int>> tuples;  // explicit table support
    std::unique_ptr<PmfSampler> tuple_sampler;

    MultiCtx(const MultiRequestInstance& i, const MultiDispatchPolicy& p)
        : inst(i), policy(p), mode(i.mode), base_sampler(i.base.pmf) {
        if (policy.instance_digest != instance_digest(i))
            throw Error("policy and instance do not match");
        if (mode == RequestMode::explicit_table) {
            TupleDistribution td = request_distribution(i);
            tuples = td.tuples;
            tuple_sampler = std::make_unique<PmfSampler>(td.probs);
        }
    }
    void sample_requests(std::mt19937_64& gen, std::vector<int>& req) const {
        if (mode == RequestMode::iid_product) {
            for (int j = 0; j < inst.n; ++j) req[j] = base_sampler.sample(gen);
        } else {
            req = tuples[tuple_sampler->sample(gen)];
        }
    }
    void dispatch(const std::vector<int>&, const std::vector<int>& req,
                  std::vector<int>& servers) const {
        servers = dispatch_multi(policy, req);
    }
    double pair_cost(const std::vector<int>& pos, const std::vector<int>& req,
                     const std::vector<int>& servers, int j) const {
        return inst.base.dist[pos[servers[j]]][req[j]];
    }
};

struct TableCtx {
    const MdpModel& model;
    const PolicyTable& table;
    PmfSampler sampler;

    TableCtx(const MdpModel& m, const PolicyTable& t) : model(m), table(t), sampler(m.req_pmf) {
        if (t.digest != m.digest) throw Error("policy table and model do not match");
        if (t.action.size() != m.num_states) throw Error("policy table has wrong size");
    }
    void sample_requests(std::mt19937_64& gen, std::vector<int>& req) const {
        std::uint64_t idx = static_cast<std::uint64_t>(sampler.sample(gen));
        model.decode_requests(idx, req);
    }
    void dispatch(const std::vector<int>& pos, const std::vector<int>& req,
                  std::vector<int>& servers) const {
        std::uint64_t state = model.encode(pos, req);
        int a = table.action[state];
        if (model.variant == ModelVariant::multi_request)
            servers = model.actions[a];
        else
            servers[0] = a;
    }
    double pair_cost(const std::vector<int>& pos, const std::vector<int>& req,
                     const std::vector<int>& servers, int j) const {
        int u = servers[j];
        const Matrix& d =
            model.variant == ModelVariant::server_dependent ? model.dist[u] : model.dist[0];
        double c = d[pos[u]][req[j]];
        if (model.variant == ModelVariant::server_dependent) c += model.proc[u][req[j]];
        return c;
    }
};

template <class Ctx>
SimStats run_sim(const Ctx& ctx, int k, int n, int num_points, const MdpState& initial,
                 std::int64_t horizon, int replications, std::uint64_t seed,
                 std::int64_t burn_in) {
    Engine<Ctx> eng{ctx, horizon, burn_in, initial};
    eng.check(k, n, num_points);
    return eng.run(replications, seed);
}

template <class Ctx>
std::vector<TraceRow> run_trace(const Ctx& ctx, int k, int n, int num_points,
                                const MdpState& initial, std::int64_t horizon,
                                std::uint64_t seed) {
    Engine<Ctx> eng{ctx, std::max<std::int64_t>(horizon, 1), 0, initial};
    eng.check(k, n, num_points);
    eng.horizon = horizon;
    return eng.run_trace(seed);
}

}  // namespace

SimStats simulate(const MetricInstance& inst, const PartitionPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in) {
    BasePartitionCtx ctx(inst, policy);
    return run_sim(ctx, static_cast<int>(policy.cells.size()), 1, inst.size(), initial, horizon,
                   replications, seed, burn_in);
}

SimStats simulate(const ServerDependentInstance& inst, const PartitionPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in) {
    ServerDepPartitionCtx ctx(inst, policy);
    return run_sim(ctx, inst.k(), 1, inst.size(), initial, horizon, replications, seed, burn_in);
}

SimStats simulate(const MultiRequestInstance& inst, const MultiDispatchPolicy& policy,
                  const MdpState& initial, std::int64_t horizon, int replications,
                  std::uint64_t seed, std::int64_t burn_in) {
    MultiCtx ctx(inst, policy);
    return run_sim(ctx, inst.k(), inst.n, inst.size(), initial, horizon, replications, seed,
                   burn_in);
}

SimStats simulate(const MdpModel& model, const PolicyTable& table, const MdpState& initial,
                  std::int64_t horizon, int replications, std::uint64_t seed,
                  std::int64_t burn_in) {
    TableCtx ctx(model, table);
    return run_sim(ctx, model.k, model.n, model.num_points, initial, horizon, replications, seed,
                   burn_in);
}

std::vector<TraceRow> trace(const MetricInstance& inst, const PartitionPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed) {
    BasePartitionCtx ctx(inst, policy);
    return run_trace(ctx, static_cast<int>(policy.cells.size()), 1, inst.size(), initial, horizon,
                     seed);
}

std::vector<TraceRow> trace(const ServerDependentInstance& inst, const PartitionPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed) {
    ServerDepPartitionCtx ctx(inst, policy);
    return run_trace(ctx, inst.k(), 1, inst.size(), initial, horizon, seed);
}

std::vector<TraceRow> trace(const MultiRequestInstance& inst, const MultiDispatchPolicy& policy,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed) {
    MultiCtx ctx(inst, policy);
    return run_trace(ctx, inst.k(), inst.n, inst.size(), initial, horizon, seed);
}

std::vector<TraceRow> trace(const MdpModel& model, const PolicyTable& table,
                            const MdpState& initial, std::int64_t horizon, std::uint64_t seed) {
    TableCtx ctx(model, table);
    return run_trace(ctx, model.k, model.n, model.num_points, initial, horizon, seed);
}

std::string trace_csv(const std::vector<TraceRow>& rows, bool multi) {
    std::ostringstream os;
    os << (multi ? "t,j,request,server,cost\n" : "t,request,server,cost\n");
    for (const auto& r : rows) {
        os << r.t << ",";
        if (multi) os << r.j << ",";
        os << r.request << "," << r.server << "," << format12(r.cost) << "\n";
    }
    return os.str();
}

}  // namespace kserver

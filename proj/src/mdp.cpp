#include "mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matching.hpp"

namespace kserver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMaxDenseSolve = 4096;

std::uint64_t checked_power(int base, int exp, std::uint64_t cap) {
    std::uint64_t p = 1;
    for (int i = 0; i < exp; ++i) {
        if (p > cap / static_cast<std::uint64_t>(base)) return cap + 1;
        p *= static_cast<std::uint64_t>(base);
    }
    return p;
}

void fill_powers(int base, int len, std::vector<std::uint64_t>& out) {
    out.assign(len, 1);
    for (int i = len - 2; i >= 0; --i) out[i] = out[i + 1] * static_cast<std::uint64_t>(base);
}

std::vector<double> normalized_pmf(const std::vector<double>& pmf) {
    Accumulator total;
    for (double p : pmf) total.add(p);
    double t = total.value();
    if (!(t > 0.0)) throw Error("request pmf has no positive mass");
    std::vector<double> norm(pmf);
    for (double& p : norm) p /= t;
    return norm;
}

void finish_request_dist(MdpModel& m) {
    m.req_support.clear();
    for (size_t r = 0; r < m.req_pmf.size(); ++r)
        if (m.req_pmf[r] > 0.0) m.req_support.push_back(static_cast<int>(r));
    if (m.req_support.empty()) throw Error("request distribution has empty support");
}

void check_state_guard(int num_points, int k, int n) {
    std::uint64_t count = checked_power(num_points, k + n, kStateLimit);
    if (count > kStateLimit)
        throw TooLargeError("MDP state space has " + std::to_string(num_points) + "^" +
                                std::to_string(k + n) + " states, above the limit of " +
                                std::to_string(kStateLimit),
                            count, kStateLimit);
}

void init_shape(MdpModel& m) {
    m.num_positions = checked_power(m.num_points, m.k, kStateLimit);
    m.num_requests = checked_power(m.num_points, m.n, kStateLimit);
    m.num_states = m.num_positions * m.num_requests;
    fill_powers(m.num_points, m.k, m.pos_pow);
    fill_powers(m.num_points, m.n, m.req_pow);
}

void enumerate_injective_tuples(int k, int n, std::vector<std::vector<int>>& out) {
    std::vector<int> tuple;
    std::vector<char> used(k, 0);
    auto rec = [&](auto&& self) -> void {
        if (static_cast<int>(tuple.size()) == n) {
            out.push_back(tuple);
            return;
        }
        for (int u = 0; u < k; ++u) {
            if (used[u]) continue;
            used[u] = 1;
            tuple.push_back(u);
            self(self);
            tuple.pop_back();
            used[u] = 0;
        }
    };
    rec(rec);
}

// Iterates all states in id order, keeping position/request digits
// incrementally decoded. fn(state, pos_idx, pos_digits, req_digits).
template <class F>
void for_each_state(const MdpModel& m, F&& fn) {
    std::vector<int> pos(m.k, 0);
    std::vector<int> req(m.n, 0);
    std::uint64_t state = 0;
    for (std::uint64_t p = 0; p < m.num_positions; ++p) {
        std::fill(req.begin(), req.end(), 0);
        for (std::uint64_t r = 0; r < m.num_requests; ++r) {
            fn(state, p, pos, req);
            ++state;
            int d = m.n - 1;
            while (d >= 0 && req[d] == m.num_points - 1) req[d--] = 0;
            if (d >= 0) ++req[d];
        }
        int d = m.k - 1;
        while (d >= 0 && pos[d] == m.num_points - 1) pos[d--] = 0;
        if (d >= 0) ++pos[d];
    }
}

// Solves A x = b with partial pivoting; A is consumed.
std::vector<double> lu_solve(std::vector<std::vector<double>>& A, std::vector<double> b) {
    const int n = static_cast<int>(A.size());
    double scale = 0.0;
    for (const auto& row : A)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) throw Error("singular linear system");
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        if (std::abs(A[pivot][col]) < 1e-14 * scale)
            throw Error("singular linear system in exact evaluation");
        if (pivot != col) {
            std::swap(A[pivot], A[col]);
            std::swap(b[pivot], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = A[r][col] / A[col][col];
            if (f == 0.0) continue;
            A[r][col] = 0.0;
            for (int c = col + 1; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

}  // namespace

std::uint64_t MdpModel::encode(std::span<const int> positions,
                               std::span<const int> requests) const {
    if (static_cast<int>(positions.size()) != k || static_cast<int>(requests.size()) != n)
        throw Error("state has wrong arity for this model");
    std::uint64_t pos_idx = 0;
    for (int i = 0; i < k; ++i) {
        if (positions[i] < 0 || positions[i] >= num_points)
            throw Error("server position out of range");
        pos_idx += static_cast<std::uint64_t>(positions[i]) * pos_pow[i];
    }
    std::uint64_t req_idx = 0;
    for (int j = 0; j < n; ++j) {
        if (requests[j] < 0 || requests[j] >= num_points)
            throw Error("request point out of range");
        req_idx += static_cast<std::uint64_t>(requests[j]) * req_pow[j];
    }
    return pos_idx * num_requests + req_idx;
}

void MdpModel::decode_positions(std::uint64_t pos_idx, std::vector<int>& out) const {
    out.resize(k);
    for (int i = k - 1; i >= 0; --i) {
        out[i] = static_cast<int>(pos_idx % num_points);
        pos_idx /= num_points;
    }
}

void MdpModel::decode_requests(std::uint64_t req_idx, std::vector<int>& out) const {
    out.resize(n);
    for (int j = n - 1; j >= 0; --j) {
        out[j] = static_cast<int>(req_idx % num_points);
        req_idx /= num_points;
    }
}

double MdpModel::cost_digits(const std::vector<int>& pos, const std::vector<int>& req,
                             int action) const {
    switch (variant) {
        case ModelVariant::base:
            return dist[0][pos[action]][req[0]];
        case ModelVariant::server_dependent:
            return dist[action][pos[action]][req[0]] + proc[action][req[0]];
        case ModelVariant::multi_request: {
            const auto& u = actions[action];
            double c = 0.0;
            for (int j = 0; j < n; ++j) c += dist[0][pos[u[j]]][req[j]];
            return c;
        }
    }
    return 0.0;
}

std::uint64_t MdpModel::next_pos_digits(const std::vector<int>& pos, std::uint64_t pos_idx,
                                        const std::vector<int>& req, int action) const {
    std::int64_t idx = static_cast<std::int64_t>(pos_idx);
    if (variant == ModelVariant::multi_request) {
        const auto& u = actions[action];
        for (int j = 0; j < n; ++j)
            idx += static_cast<std::int64_t>(req[j] - pos[u[j]]) *
                   static_cast<std::int64_t>(pos_pow[u[j]]);
    } else {
        idx += static_cast<std::int64_t>(req[0] - pos[action]) *
               static_cast<std::int64_t>(pos_pow[action]);
    }
    return static_cast<std::uint64_t>(idx);
}

double MdpModel::cost(std::uint64_t state, int action) const {
    std::vector<int> pos, req;
    decode_positions(state / num_requests, pos);
    decode_requests(state % num_requests, req);
    return cost_digits(pos, req, action);
}

std::uint64_t MdpModel::next_position_index(std::uint64_t state, int action) const {
    std::vector<int> pos, req;
    std::uint64_t pos_idx = state / num_requests;
    decode_positions(pos_idx, pos);
    decode_requests(state % num_requests, req);
    return next_pos_digits(pos, pos_idx, req, action);
}

MdpModel build_mdp(const MetricInstance& inst) {
    check_state_guard(inst.size(), inst.k, 1);
    MdpModel m;
    m.variant = ModelVariant::base;
    m.num_points = inst.size();
    m.k = inst.k;
    m.n = 1;
    m.digest = instance_digest(inst);
    m.dist.push_back(inst.dist);
    m.req_pmf = normalized_pmf(inst.pmf);
    finish_request_dist(m);
    m.num_actions = m.k;
    init_shape(m);
    return m;
}

MdpModel build_mdp(const ServerDependentInstance& inst) {
    check_state_guard(inst.size(), inst.k(), 1);
    MdpModel m;
    m.variant = ModelVariant::server_dependent;
    m.num_points = inst.size();
    m.k = inst.k();
    m.n = 1;
    m.digest = instance_digest(inst);
    m.dist = inst.dists;
    m.proc = inst.proc_costs;
    m.req_pmf = normalized_pmf(inst.pmf);
    finish_request_dist(m);
    m.num_actions = m.k;
    init_shape(m);
    return m;
}

MdpModel build_mdp(const MultiRequestInstance& inst) {
    check_state_guard(inst.size(), inst.k(), inst.n);
    MdpModel m;
    m.variant = ModelVariant::multi_request;
    m.num_points = inst.size();
    m.k = inst.k();
    m.n = inst.n;
    m.digest = instance_digest(inst);
    m.dist.push_back(inst.base.dist);
    init_shape(m);
    // dense joint pmf over request tuple indices
    TupleDistribution td = request_distribution(inst);
    m.req_pmf.assign(m.num_requests, 0.0);
    for (size_t t = 0; t < td.tuples.size(); ++t) {
        std::uint64_t idx = 0;
        for (int j = 0; j < m.n; ++j)
            idx += static_cast<std::uint64_t>(td.tuples[t][j]) * m.req_pow[j];
        m.req_pmf[idx] = td.probs[t];
    }
    finish_request_dist(m);
    enumerate_injective_tuples(m.k, m.n, m.actions);
    m.num_actions = static_cast<int>(m.actions.size());
    return m;
}

MdpModel build_mdp(const Instance& inst) {
    return std::visit([](const auto& v) { return build_mdp(v); }, inst);
}

PolicyTable policy_from_partition(const MdpModel& model, const PartitionPolicy& policy) {
    if (model.variant == ModelVariant::multi_request)
        throw Error("partition policy does not apply to a multi-request model");
    if ((model.variant == ModelVariant::server_dependent) !=
        (policy.variant == PolicyVariant::server_dependent))
        throw Error("policy variant does not match the model variant");
    if (policy.instance_digest != model.digest)
        throw Error("policy and model were built from different instances");
    if (static_cast<int>(policy.owner.size()) != model.num_points ||
        static_cast<int>(policy.cells.size()) != model.k)
        throw Error("policy shape does not match the model");
    PolicyTable table;
    table.digest = model.digest;
    table.action.resize(model.num_states);
    for_each_state(model, [&](std::uint64_t s, std::uint64_t, const std::vector<int>&,
                              const std::vector<int>& req) {
        table.action[s] = policy.owner[req[0]];
    });
    return table;
}

PolicyTable policy_from_partition(const MdpModel& model, const MultiDispatchPolicy& policy) {
    if (model.variant != ModelVariant::multi_request)
        throw Error("multi-dispatch policy needs a multi-request model");
    if (policy.instance_digest != model.digest)
        throw Error("policy and model were built from different instances");
    if (policy.k() != model.k || policy.n != model.n)
        throw Error("policy shape does not match the model");
    // dispatch depends only on the request tuple; resolve once per tuple
    std::vector<int> per_request(model.num_requests);
    std::vector<int> req;
    for (std::uint64_t r = 0; r < model.num_requests; ++r) {
        model.decode_requests(r, req);
        std::vector<int> assign = dispatch_multi(policy, req);
        auto it = std::lower_bound(model.actions.begin(), model.actions.end(), assign);
        if (it == model.actions.end() || *it != assign)
            throw Error("dispatch produced an unknown action tuple");
        per_request[r] = static_cast<int>(it - model.actions.begin());
    }
    PolicyTable table;
    table.digest = model.digest;
    table.action.resize(model.num_states);
    for (std::uint64_t s = 0; s < model.num_states; ++s)
        table.action[s] = per_request[s % model.num_requests];
    return table;
}

PolicyTable greedy_policy(const MdpModel& model) {
    PolicyTable table;
    table.digest = model.digest;
    table.action.resize(model.num_states);
    for_each_state(model, [&](std::uint64_t s, std::uint64_t, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        int best = 0;
        double best_cost = model.cost_digits(pos, req, 0);
        for (int a = 1; a < model.num_actions; ++a) {
            double c = model.cost_digits(pos, req, a);
            if (c < best_cost) {
                best_cost = c;
                best = a;
            }
        }
        table.action[s] = best;
    });
    return table;
}

double EvalResult::gain_min() const {
    double g = kInf;
    for (double v : gain) g = std::min(g, v);
    return g;
}

double EvalResult::gain_max() const {
    double g = -kInf;
    for (double v : gain) g = std::max(g, v);
    return g;
}

namespace {

void check_table(const MdpModel& model, const PolicyTable& table) {
    if (table.digest != model.digest)
        throw Error("policy table and model were built from different instances");
    if (table.action.size() != model.num_states)
        throw Error("policy table has wrong size");
    for (int a : table.action)
        if (a < 0 || a >= model.num_actions) throw Error("policy table contains invalid action");
}

// Iterative Tarjan SCC on the chain induced by np (next position per state)
// with successors np[s]*R + r over the request support.
struct SccResult {
    std::vector<std::int32_t> comp;  // component id per state, ids in reverse topological order
    int num_comps = 0;
};

SccResult strongly_connected_components(const MdpModel& m,
                                        const std::vector<std::uint32_t>& np) {
    const std::uint64_t n = m.num_states;
    const auto& support = m.req_support;
    const std::uint64_t deg = support.size();

    SccResult res;
    res.comp.assign(n, -1);
    std::vector<std::int32_t> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    // DFS frames: state and next child position
    std::vector<std::pair<std::uint32_t, std::uint32_t>> frames;
    std::int32_t next_index = 0;

    auto successor = [&](std::uint32_t v, std::uint32_t child) -> std::uint32_t {
        return static_cast<std::uint32_t>(static_cast<std::uint64_t>(np[v]) * m.num_requests +
                                          static_cast<std::uint64_t>(support[child]));
    };

    for (std::uint64_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        frames.emplace_back(static_cast<std::uint32_t>(root), 0);
        while (!frames.empty()) {
            auto& [v, child] = frames.back();
            if (child == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            if (child < deg) {
                std::uint32_t w = successor(v, child);
                ++child;
                if (index[w] == -1) {
                    frames.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            } else {
                if (low[v] == index[v]) {
                    while (true) {
                        std::uint32_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        res.comp[w] = res.num_comps;
                        if (w == v) break;
                    }
                    ++res.num_comps;
                }
                std::uint32_t finished = v;
                frames.pop_back();
                if (!frames.empty()) {
                    std::uint32_t parent = frames.back().first;
                    low[parent] = std::min(low[parent], low[finished]);
                }
            }
        }
    }
    return res;
}

}  // namespace

EvalResult evaluate_exact(const MdpModel& model, const PolicyTable& table) {
    check_table(model, table);
    const std::uint64_t n_states = model.num_states;
    const auto& support = model.req_support;

    // induced chain: per state, the successor position block and one-step cost
    std::vector<std::uint32_t> np(n_states);
    std::vector<double> step_cost(n_states);
    for_each_state(model, [&](std::uint64_t s, std::uint64_t pos_idx, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        int a = table.action[s];
        np[s] = static_cast<std::uint32_t>(model.next_pos_digits(pos, pos_idx, req, a));
        step_cost[s] = model.cost_digits(pos, req, a);
    });

    SccResult scc = strongly_connected_components(model, np);

    // a component is recurrent iff it has no edge leaving it
    std::vector<char> closed(scc.num_comps, 1);
    for (std::uint64_t s = 0; s < n_states; ++s) {
        for (int r : support) {
            std::uint64_t t = static_cast<std::uint64_t>(np[s]) * model.num_requests +
                              static_cast<std::uint64_t>(r);
            if (scc.comp[t] != scc.comp[s]) {
                closed[scc.comp[s]] = 0;
                break;
            }
        }
    }

    EvalResult result;
    std::vector<std::int32_t> class_of_comp(scc.num_comps, -1);
    for (int c = 0; c < scc.num_comps; ++c) {
        if (!closed[c]) continue;
        class_of_comp[c] = static_cast<std::int32_t>(result.classes.size());
        result.classes.emplace_back();
    }
    for (std::uint64_t s = 0; s < n_states; ++s) {
        std::int32_t cls = class_of_comp[scc.comp[s]];
        if (cls >= 0) result.classes[cls].states.push_back(static_cast<std::uint32_t>(s));
    }
    if (result.classes.empty()) throw Error("induced chain has no recurrent class");

    // stationary distribution and gain per recurrent class
    for (auto& cls : result.classes) {
        const std::uint64_t c_size = cls.states.size();
        if (c_size == 1) {
            cls.gain = step_cost[cls.states[0]];
            continue;
        }
        if (c_size > kMaxDenseSolve)
            throw Error("recurrent class too large for a direct stationary solve (" +
                        std::to_string(c_size) + " states)");
        std::vector<std::uint32_t> local(cls.states.begin(), cls.states.end());
        std::vector<std::int64_t> local_id(n_states, -1);  // sparse map would also do
        for (std::uint64_t i = 0; i < c_size; ++i) local_id[local[i]] = static_cast<std::int64_t>(i);

        std::vector<std::vector<double>> A(c_size, std::vector<double>(c_size, 0.0));
        for (std::uint64_t j = 0; j < c_size; ++j) {
            std::uint32_t s = local[j];
            for (int r : support) {
                std::uint64_t t = static_cast<std::uint64_t>(np[s]) * model.num_requests +
                                  static_cast<std::uint64_t>(r);
                A[static_cast<std::uint64_t>(local_id[t])][j] += model.req_pmf[r];
            }
        }
        for (std::uint64_t i = 0; i < c_size; ++i) A[i][i] -= 1.0;
        for (std::uint64_t j = 0; j < c_size; ++j) A[c_size - 1][j] = 1.0;  // sum(pi) = 1
        std::vector<double> b(c_size, 0.0);
        b[c_size - 1] = 1.0;
        std::vector<double> pi = lu_solve(A, std::move(b));

        Accumulator g;
        for (std::uint64_t i = 0; i < c_size; ++i) g.add(pi[i] * step_cost[local[i]]);
        cls.gain = g.value();
    }

    result.gain.assign(n_states, 0.0);
    if (result.classes.size() == 1) {
        std::fill(result.gain.begin(), result.gain.end(), result.classes[0].gain);
        return result;
    }

    // multichain: recurrent states carry their class gain; transient states
    // get the absorption-weighted mix through (I - P_TT) g_T = P_TR g_R
    std::vector<std::int32_t> state_class(n_states, -1);
    for (size_t c = 0; c < result.classes.size(); ++c)
        for (std::uint32_t s : result.classes[c].states)
            state_class[s] = static_cast<std::int32_t>(c);

    std::vector<std::uint32_t> transient;
    std::vector<std::int64_t> t_id(n_states, -1);
    for (std::uint64_t s = 0; s < n_states; ++s) {
        if (state_class[s] >= 0) {
            result.gain[s] = result.classes[state_class[s]].gain;
        } else {
            t_id[s] = static_cast<std::int64_t>(transient.size());
            transient.push_back(static_cast<std::uint32_t>(s));
        }
    }
    if (transient.empty()) return result;
    if (transient.size() > kMaxDenseSolve)
        throw Error("transient block too large for a direct absorption solve (" +
                    std::to_string(transient.size()) + " states)");

    const std::uint64_t nt = transient.size();
    std::vector<std::vector<double>> A(nt, std::vector<double>(nt, 0.0));
    std::vector<double> b(nt, 0.0);
    for (std::uint64_t i = 0; i < nt; ++i) {
        std::uint32_t s = transient[i];
        A[i][i] = 1.0;
        for (int r : support) {
            std::uint64_t t = static_cast<std::uint64_t>(np[s]) * model.num_requests +
                              static_cast<std::uint64_t>(r);
            if (t_id[t] >= 0)
                A[i][static_cast<std::uint64_t>(t_id[t])] -= model.req_pmf[r];
            else
                b[i] += model.req_pmf[r] * result.gain[t];
        }
    }
    std::vector<double> g_t = lu_solve(A, std::move(b));
    for (std::uint64_t i = 0; i < nt; ++i) result.gain[transient[i]] = g_t[i];
    return result;
}

SolveResult solve_optimal(const MdpModel& model, double span_tol, long max_iterations,
                          double alpha) {
    const std::uint64_t n_states = model.num_states;
    const std::uint64_t n_pos = model.num_positions;
    std::vector<double> v(n_states, 0.0), w(n_states, 0.0), ev(n_pos, 0.0);

    long iter = 0;
    double span = kInf;
    for (; iter < max_iterations; ++iter) {
        // expected next-step value per successor position block
        for (std::uint64_t p = 0; p < n_pos; ++p) {
            double e = 0.0;
            std::uint64_t base = p * model.num_requests;
            for (int r : model.req_support) e += model.req_pmf[r] * v[base + r];
            ev[p] = e;
        }
        double dmax = -kInf, dmin = kInf;
        for_each_state(model, [&](std::uint64_t s, std::uint64_t pos_idx,
                                  const std::vector<int>& pos, const std::vector<int>& req) {
            double best = kInf;
            for (int a = 0; a < model.num_actions; ++a) {
                double q = model.cost_digits(pos, req, a) + (1.0 - alpha) * v[s] +
                           alpha * ev[model.next_pos_digits(pos, pos_idx, req, a)];
                if (q < best) best = q;
            }
            w[s] = best;
            double d = best - v[s];
            if (d > dmax) dmax = d;
            if (d < dmin) dmin = d;
        });
        span = dmax - dmin;
        if (span < span_tol) break;
        double ref = w[0];
        for (std::uint64_t s = 0; s < n_states; ++s) v[s] = w[s] - ref;
    }
    if (span >= span_tol)
        throw ConvergenceError("relative value iteration did not converge: span " +
                                   std::to_string(span) + " after " + std::to_string(iter) +
                                   " iterations",
                               span, iter);

    SolveResult result;
    result.iterations = iter + 1;
    result.final_span = span;
    result.policy.digest = model.digest;
    result.policy.action.resize(n_states);
    for (std::uint64_t p = 0; p < n_pos; ++p) {
        double e = 0.0;
        std::uint64_t base = p * model.num_requests;
        for (int r : model.req_support) e += model.req_pmf[r] * v[base + r];
        ev[p] = e;
    }
    for_each_state(model, [&](std::uint64_t s, std::uint64_t pos_idx, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        int best_a = 0;
        double best = kInf;
        for (int a = 0; a < model.num_actions; ++a) {
            double q = model.cost_digits(pos, req, a) + (1.0 - alpha) * v[s] +
                       alpha * ev[model.next_pos_digits(pos, pos_idx, req, a)];
            if (q < best) {
                best = q;
                best_a = a;
            }
        }
        result.policy.action[s] = best_a;
    });
    result.eval = evaluate_exact(model, result.policy);
    return result;
}

namespace {

// E[h(next) | position block] for every successor position index.
std::vector<double> expected_h_per_position(const MdpModel& model, const PotentialTable& h) {
    std::vector<double> eh(model.num_positions, 0.0);
    for (std::uint64_t p = 0; p < model.num_positions; ++p) {
        double e = 0.0;
        std::uint64_t base = p * model.num_requests;
        for (int r : model.req_support) e += model.req_pmf[r] * h[base + r];
        eh[p] = e;
    }
    return eh;
}

void check_potential(const MdpModel& model, const PotentialTable& h) {
    if (h.size() != model.num_states) throw Error("potential table has wrong size");
}

}  // namespace

double drift_upper_bound(const MdpModel& model, const PolicyTable& table, const PotentialTable& h) {
    check_table(model, table);
    check_potential(model, h);
    std::vector<double> eh = expected_h_per_position(model, h);
    double sup = -kInf;
    for_each_state(model, [&](std::uint64_t s, std::uint64_t pos_idx, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        int a = table.action[s];
        double val = model.cost_digits(pos, req, a) +
                     eh[model.next_pos_digits(pos, pos_idx, req, a)] - h[s];
        if (val > sup) sup = val;
    });
    return sup;
}

double drift_lower_bound(const MdpModel& model, const PotentialTable& h) {
    check_potential(model, h);
    std::vector<double> eh = expected_h_per_position(model, h);
    double inf = kInf;
    for_each_state(model, [&](std::uint64_t s, std::uint64_t pos_idx, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        for (int a = 0; a < model.num_actions; ++a) {
            double val = model.cost_digits(pos, req, a) +
                         eh[model.next_pos_digits(pos, pos_idx, req, a)] - h[s];
            if (val < inf) inf = val;
        }
    });
    return inf;
}

PotentialTable canonical_h_lower(const MdpModel& model) {
    PotentialTable h(model.num_states, 0.0);
    if (model.variant == ModelVariant::multi_request) {
        std::vector<std::vector<double>> cost(model.n, std::vector<double>(model.k));
        for_each_state(model, [&](std::uint64_t s, std::uint64_t, const std::vector<int>& pos,
                                  const std::vector<int>& req) {
            for (int j = 0; j < model.n; ++j)
                for (int i = 0; i < model.k; ++i) cost[j][i] = model.dist[0][pos[i]][req[j]];
            h[s] = assignment_value(cost);
        });
        return h;
    }
    for_each_state(model, [&](std::uint64_t s, std::uint64_t, const std::vector<int>& pos,
                              const std::vector<int>& req) {
        double best = kInf;
        for (int i = 0; i < model.k; ++i) {
            double c = model.variant == ModelVariant::base
                           ? model.dist[0][pos[i]][req[0]]
                           : model.dist[i][pos[i]][req[0]] + model.proc[i][req[0]];
            best = std::min(best, c);
        }
        h[s] = best;
    });
    return h;
}

PotentialTable canonical_h_upper(const MdpModel& model, std::span<const int> medians) {
    if (static_cast<int>(medians.size()) != model.k)
        throw Error("canonical upper potential needs exactly one median per server");
    for (int m : medians)
        if (m < 0 || m >= model.num_points) throw Error("median index out of range");

    // request part: twice the cheapest service from the medians
    std::vector<double> req_part(model.num_requests, 0.0);
    std::vector<int> req;
    if (model.variant == ModelVariant::multi_request) {
        std::vector<std::vector<double>> cost(model.n, std::vector<double>(model.k));
        for (std::uint64_t r = 0; r < model.num_requests; ++r) {
            model.decode_requests(r, req);
            for (int j = 0; j < model.n; ++j)
                for (int i = 0; i < model.k; ++i)
                    cost[j][i] = model.dist[0][medians[i]][req[j]];
            req_part[r] = 2.0 * assignment_value(cost);
        }
    } else {
        for (std::uint64_t r = 0; r < model.num_requests; ++r) {
            double best = kInf;
            for (int i = 0; i < model.k; ++i) {
                double c = model.variant == ModelVariant::base
                               ? model.dist[0][medians[i]][static_cast<int>(r)]
                               : model.dist[i][medians[i]][static_cast<int>(r)] +
                                     model.proc[i][static_cast<int>(r)];
                best = std::min(best, c);
            }
            req_part[r] = 2.0 * best;
        }
    }

    // position part: displacement of each server from its median
    std::vector<double> pos_part(model.num_positions, 0.0);
    std::vector<int> pos;
    for (std::uint64_t p = 0; p < model.num_positions; ++p) {
        model.decode_positions(p, pos);
        double sum = 0.0;
        for (int i = 0; i < model.k; ++i) {
            const Matrix& d = model.variant == ModelVariant::server_dependent ? model.dist[i]
                                                                              : model.dist[0];
            sum += d[pos[i]][medians[i]];
        }
        pos_part[p] = sum;
    }

    PotentialTable h(model.num_states, 0.0);
    for (std::uint64_t p = 0; p < model.num_positions; ++p) {
        std::uint64_t base = p * model.num_requests;
        for (std::uint64_t r = 0; r < model.num_requests; ++r)
            h[base + r] = req_part[r] + pos_part[p];
    }
    return h;
}

}  // namespace kserver

#include "kserver.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <variant>

#include "certify.hpp"
#include "instance.hpp"
#include "json_io.hpp"
#include "kmedian.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "sim.hpp"

using namespace kserver;

struct ks_instance {
    Instance v;
};
struct ks_medians {
    MedianSet set;
    std::optional<ApproxReport> report;
};
struct ks_policy {
    std::variant<PartitionPolicy, MultiDispatchPolicy> v;
};
struct ks_model {
    MdpModel v;
};
struct ks_table {
    PolicyTable v;
};
struct ks_eval {
    EvalResult v;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class F>
ks_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return KS_OK;
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return KS_ERR_PARSE;
    } catch (const ValidationError& e) {
        g_last_error = e.what();
        return KS_ERR_VALIDATION;
    } catch (const TooLargeError& e) {
        g_last_error = e.what();
        return KS_ERR_TOO_LARGE;
    } catch (const ConvergenceError& e) {
        g_last_error = e.what();
        return KS_ERR_NO_CONVERGENCE;
    } catch (const Error& e) {
        g_last_error = e.what();
        return KS_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return KS_ERR_INTERNAL;
    }
}

ks_status fail_arg(const char* msg) {
    g_last_error = msg;
    return KS_ERR_INVALID_ARGUMENT;
}

std::vector<int> span_to_vector(const int* data, size_t len) {
    return std::vector<int>(data, data + len);
}

const MetricInstance* as_metric(const ks_instance* inst) {
    return std::get_if<MetricInstance>(&inst->v);
}

}  // namespace

extern "C" {

const char* ks_version(void) { return kVersion; }

const char* ks_status_name(ks_status status) {
    switch (status) {
        case KS_OK: return "ok";
        case KS_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case KS_ERR_PARSE: return "parse-error";
        case KS_ERR_VALIDATION: return "validation-error";
        case KS_ERR_TOO_LARGE: return "too-large";
        case KS_ERR_NO_CONVERGENCE: return "no-convergence";
        case KS_ERR_INTERNAL: return "internal-error";
    }
    return "unknown";
}

const char* ks_last_error(void) { return g_last_error.c_str(); }

void ks_string_free(char* s) { std::free(s); }

/* ------------------------------------------------------------------ */

ks_status ks_instance_parse(const char* json_utf8, ks_instance** out) {
    if (!json_utf8 || !out) return fail_arg("null argument");
    return guarded([&] { *out = new ks_instance{load_instance(json_utf8)}; });
}

ks_status ks_instance_parse_raw(const char* json_utf8, ks_instance** out) {
    if (!json_utf8 || !out) return fail_arg("null argument");
    return guarded([&] { *out = new ks_instance{parse_instance(json_utf8)}; });
}

ks_status ks_instance_to_json(const ks_instance* inst, char** out) {
    if (!inst || !out) return fail_arg("null argument");
    return guarded([&] { *out = dup_string(save_instance(inst->v)); });
}

ks_status ks_instance_validate(const ks_instance* inst, int* num_violations,
                               char** report_json) {
    if (!inst) return fail_arg("null argument");
    return guarded([&] {
        ValidationReport report = validate(inst->v);
        if (num_violations) *num_violations = static_cast<int>(report.entries.size());
        if (report_json) *report_json = dup_string(kserver::report_json(report).dump());
    });
}

ks_status ks_instance_random_euclidean(uint64_t seed, int num_points, int k, double skew,
                                       ks_instance** out) {
    if (!out) return fail_arg("null argument");
    return guarded(
        [&] { *out = new ks_instance{random_euclidean_instance(seed, num_points, k, skew)}; });
}

ks_status ks_instance_random_server_dependent(uint64_t seed, int num_points, int k, double skew,
                                              ks_instance** out) {
    if (!out) return fail_arg("null argument");
    return guarded([&] {
        *out = new ks_instance{random_server_dependent_instance(seed, num_points, k, skew)};
    });
}

ks_status ks_instance_random_multi_request(uint64_t seed, int num_points, int k, double skew,
                                           int n, ks_instance** out) {
    if (!out) return fail_arg("null argument");
    return guarded([&] {
        *out = new ks_instance{random_multi_request_instance(seed, num_points, k, skew, n)};
    });
}

ks_status ks_instance_variant(const ks_instance* inst, ks_variant* out) {
    if (!inst || !out) return fail_arg("null argument");
    if (std::holds_alternative<MetricInstance>(inst->v))
        *out = KS_VARIANT_BASE;
    else if (std::holds_alternative<ServerDependentInstance>(inst->v))
        *out = KS_VARIANT_SERVER_DEP;
    else
        *out = KS_VARIANT_MULTI;
    return KS_OK;
}

ks_status ks_instance_num_points(const ks_instance* inst, int* out) {
    if (!inst || !out) return fail_arg("null argument");
    *out = instance_num_points(inst->v);
    return KS_OK;
}

ks_status ks_instance_k(const ks_instance* inst, int* out) {
    if (!inst || !out) return fail_arg("null argument");
    *out = instance_k(inst->v);
    return KS_OK;
}

ks_status ks_instance_digest(const ks_instance* inst, char** out) {
    if (!inst || !out) return fail_arg("null argument");
    return guarded([&] { *out = dup_string(hex64(instance_digest(inst->v))); });
}

void ks_instance_free(ks_instance* inst) { delete inst; }

/* ------------------------------------------------------------------ */

ks_status ks_kmedian_objective(const ks_instance* inst, const int* medians, size_t len,
                               double* out) {
    if (!inst || !medians || !out) return fail_arg("null argument");
    return guarded([&] {
        std::vector<int> m = span_to_vector(medians, len);
        if (const auto* b = std::get_if<MetricInstance>(&inst->v))
            *out = kmedian_objective(*b, m);
        else if (const auto* s = std::get_if<ServerDependentInstance>(&inst->v))
            *out = generalized_kmedian_objective(*s, m);
        else
            *out = multi_kmedian_objective(std::get<MultiRequestInstance>(inst->v), m);
    });
}

ks_status ks_kmedian_exact(const ks_instance* inst, ks_medians** out) {
    if (!inst || !out) return fail_arg("null argument");
    return guarded([&] {
        MedianSet set;
        if (const auto* b = std::get_if<MetricInstance>(&inst->v))
            set = kmedian_exact(*b);
        else if (const auto* s = std::get_if<ServerDependentInstance>(&inst->v))
            set = generalized_kmedian_exact(*s);
        else
            set = multi_kmedian_exact(std::get<MultiRequestInstance>(inst->v));
        *out = new ks_medians{std::move(set), std::nullopt};
    });
}

ks_status ks_kmedian_local_search(const ks_instance* inst, int swap_size, double delta,
                                  uint64_t seed, ks_medians** out) {
    if (!inst || !out) return fail_arg("null argument");
    const MetricInstance* base = as_metric(inst);
    if (!base) return fail_arg("local search applies to the base variant only");
    return guarded([&] {
        auto [set, report] = kmedian_local_search(*base, swap_size, delta, seed);
        *out = new ks_medians{std::move(set), std::move(report)};
    });
}

ks_status ks_medians_count(const ks_medians* m, size_t* out) {
    if (!m || !out) return fail_arg("null argument");
    *out = m->set.medians.size();
    return KS_OK;
}

ks_status ks_medians_get(const ks_medians* m, int* buf, size_t buf_len) {
    if (!m || !buf) return fail_arg("null argument");
    if (buf_len < m->set.medians.size()) return fail_arg("buffer too small");
    std::copy(m->set.medians.begin(), m->set.medians.end(), buf);
    return KS_OK;
}

ks_status ks_medians_objective(const ks_medians* m, double* out) {
    if (!m || !out) return fail_arg("null argument");
    *out = m->set.objective;
    return KS_OK;
}

ks_status ks_medians_to_json(const ks_medians* m, char** out) {
    if (!m || !out) return fail_arg("null argument");
    return guarded([&] {
        nlohmann::ordered_json j = median_set_json(m->set);
        if (m->report) j["search"] = approx_report_json(*m->report);
        *out = dup_string(j.dump());
    });
}

void ks_medians_free(ks_medians* m) { delete m; }

/* ------------------------------------------------------------------ */

ks_status ks_policy_build(const ks_instance* inst, const int* medians, size_t len,
                          ks_policy** out) {
    if (!inst || !medians || !out) return fail_arg("null argument");
    return guarded([&] {
        std::vector<int> m = span_to_vector(medians, len);
        if (const auto* b = std::get_if<MetricInstance>(&inst->v))
            *out = new ks_policy{build_partition(*b, m)};
        else if (const auto* s = std::get_if<ServerDependentInstance>(&inst->v))
            *out = new ks_policy{build_partition(*s, m)};
        else
            *out = new ks_policy{
                build_multi_dispatch(std::get<MultiRequestInstance>(inst->v), m)};
    });
}

ks_status ks_policy_to_json(const ks_policy* policy, char** out) {
    if (!policy || !out) return fail_arg("null argument");
    return guarded([&] {
        if (const auto* p = std::get_if<PartitionPolicy>(&policy->v))
            *out = dup_string(partition_json(*p).dump());
        else
            *out = dup_string(multi_policy_json(std::get<MultiDispatchPolicy>(policy->v)).dump());
    });
}

ks_status ks_policy_dispatch(const ks_policy* policy, int request, int* server) {
    if (!policy || !server) return fail_arg("null argument");
    const auto* p = std::get_if<PartitionPolicy>(&policy->v);
    if (!p) return fail_arg("dispatch needs a partition policy");
    return guarded([&] { *server = dispatch(*p, request); });
}

ks_status ks_policy_dispatch_multi(const ks_policy* policy, const int* requests, size_t n,
                                   int* servers_out) {
    if (!policy || !requests || !servers_out) return fail_arg("null argument");
    const auto* p = std::get_if<MultiDispatchPolicy>(&policy->v);
    if (!p) return fail_arg("dispatch_multi needs a multi-request policy");
    return guarded([&] {
        std::vector<int> req = span_to_vector(requests, n);
        std::vector<int> assignment = dispatch_multi(*p, req);
        std::copy(assignment.begin(), assignment.end(), servers_out);
    });
}

void ks_policy_free(ks_policy* policy) { delete policy; }

/* ------------------------------------------------------------------ */

ks_status ks_model_build(const ks_instance* inst, ks_model** out) {
    if (!inst || !out) return fail_arg("null argument");
    return guarded([&] { *out = new ks_model{build_mdp(inst->v)}; });
}

ks_status ks_model_num_states(const ks_model* model, uint64_t* out) {
    if (!model || !out) return fail_arg("null argument");
    *out = model->v.num_states;
    return KS_OK;
}

ks_status ks_model_num_actions(const ks_model* model, int* out) {
    if (!model || !out) return fail_arg("null argument");
    *out = model->v.num_actions;
    return KS_OK;
}

void ks_model_free(ks_model* model) { delete model; }

ks_status ks_table_from_policy(const ks_model* model, const ks_policy* policy, ks_table** out) {
    if (!model || !policy || !out) return fail_arg("null argument");
    return guarded([&] {
        if (const auto* p = std::get_if<PartitionPolicy>(&policy->v))
            *out = new ks_table{policy_from_partition(model->v, *p)};
        else
            *out = new ks_table{
                policy_from_partition(model->v, std::get<MultiDispatchPolicy>(policy->v))};
    });
}

ks_status ks_table_greedy(const ks_model* model, ks_table** out) {
    if (!model || !out) return fail_arg("null argument");
    return guarded([&] { *out = new ks_table{greedy_policy(model->v)}; });
}

void ks_table_free(ks_table* table) { delete table; }

ks_status ks_eval_exact(const ks_model* model, const ks_table* table, ks_eval** out) {
    if (!model || !table || !out) return fail_arg("null argument");
    return guarded([&] { *out = new ks_eval{evaluate_exact(model->v, table->v)}; });
}

ks_status ks_solve_optimal(const ks_model* model, ks_table** table_out, ks_eval** eval_out) {
    if (!model) return fail_arg("null argument");
    return guarded([&] {
        SolveResult res = solve_optimal(model->v);
        if (table_out) *table_out = new ks_table{std::move(res.policy)};
        if (eval_out) *eval_out = new ks_eval{std::move(res.eval)};
    });
}

ks_status ks_eval_gain_range(const ks_eval* eval, double* min_out, double* max_out) {
    if (!eval) return fail_arg("null argument");
    if (min_out) *min_out = eval->v.gain_min();
    if (max_out) *max_out = eval->v.gain_max();
    return KS_OK;
}

ks_status ks_eval_unichain(const ks_eval* eval, int* out) {
    if (!eval || !out) return fail_arg("null argument");
    *out = eval->v.unichain() ? 1 : 0;
    return KS_OK;
}

ks_status ks_eval_gain_at(const ks_eval* eval, const ks_model* model, const int* positions,
                          size_t k, const int* requests, size_t n, double* out) {
    if (!eval || !model || !positions || !requests || !out) return fail_arg("null argument");
    return guarded([&] {
        std::vector<int> pos = span_to_vector(positions, k);
        std::vector<int> req = span_to_vector(requests, n);
        std::uint64_t state = model->v.encode(pos, req);
        if (state >= eval->v.gain.size()) throw Error("state out of range for this evaluation");
        *out = eval->v.gain[state];
    });
}

ks_status ks_eval_to_json(const ks_eval* eval, char** out) {
    if (!eval || !out) return fail_arg("null argument");
    return guarded([&] { *out = dup_string(eval_json(eval->v).dump()); });
}

void ks_eval_free(ks_eval* eval) { delete eval; }

/* ------------------------------------------------------------------ */

ks_status ks_drift_upper(const ks_model* model, const ks_table* table, const double* h,
                          size_t len, double* out) {
    if (!model || !table || !h || !out) return fail_arg("null argument");
    return guarded([&] {
        PotentialTable pot(h, h + len);
        *out = drift_upper_bound(model->v, table->v, pot);
    });
}

ks_status ks_drift_lower(const ks_model* model, const double* h, size_t len, double* out) {
    if (!model || !h || !out) return fail_arg("null argument");
    return guarded([&] {
        PotentialTable pot(h, h + len);
        *out = drift_lower_bound(model->v, pot);
    });
}

ks_status ks_canonical_h_lower(const ks_model* model, double* buf, size_t len) {
    if (!model || !buf) return fail_arg("null argument");
    if (len < model->v.num_states) return fail_arg("buffer too small");
    return guarded([&] {
        PotentialTable h = canonical_h_lower(model->v);
        std::copy(h.begin(), h.end(), buf);
    });
}

ks_status ks_canonical_h_upper(const ks_model* model, const int* medians, size_t medians_len,
                               double* buf, size_t len) {
    if (!model || !medians || !buf) return fail_arg("null argument");
    if (len < model->v.num_states) return fail_arg("buffer too small");
    return guarded([&] {
        std::vector<int> m = span_to_vector(medians, medians_len);
        PotentialTable h = canonical_h_upper(model->v, m);
        std::copy(h.begin(), h.end(), buf);
    });
}

ks_status ks_bound_lower_canonical(const ks_model* model, double* out) {
    if (!model || !out) return fail_arg("null argument");
    return guarded([&] { *out = drift_lower_bound(model->v, canonical_h_lower(model->v)); });
}

ks_status ks_bound_upper_canonical(const ks_model* model, const ks_table* table,
                                   const int* medians, size_t medians_len, double* out) {
    if (!model || !table || !medians || !out) return fail_arg("null argument");
    return guarded([&] {
        std::vector<int> m = span_to_vector(medians, medians_len);
        *out = drift_upper_bound(model->v, table->v, canonical_h_upper(model->v, m));
    });
}

/* ------------------------------------------------------------------ */

namespace {

MdpState make_state(const ks_instance* inst, const int* positions, const int* requests) {
    MdpState state;
    int k = instance_k(inst->v);
    int n = 1;
    if (const auto* m = std::get_if<MultiRequestInstance>(&inst->v)) n = m->n;
    state.positions.assign(positions, positions + k);
    state.requests.assign(requests, requests + n);
    return state;
}

SimStats simulate_dispatch(const ks_instance* inst, const ks_policy* policy,
                           const MdpState& init, int64_t horizon, int replications,
                           uint64_t seed, int64_t burn_in) {
    if (const auto* b = std::get_if<MetricInstance>(&inst->v)) {
        const auto* p = std::get_if<PartitionPolicy>(&policy->v);
        if (!p) throw Error("policy does not match the instance variant");
        return simulate(*b, *p, init, horizon, replications, seed, burn_in);
    }
    if (const auto* s = std::get_if<ServerDependentInstance>(&inst->v)) {
        const auto* p = std::get_if<PartitionPolicy>(&policy->v);
        if (!p) throw Error("policy does not match the instance variant");
        return simulate(*s, *p, init, horizon, replications, seed, burn_in);
    }
    const auto& mi = std::get<MultiRequestInstance>(inst->v);
    const auto* p = std::get_if<MultiDispatchPolicy>(&policy->v);
    if (!p) throw Error("policy does not match the instance variant");
    return simulate(mi, *p, init, horizon, replications, seed, burn_in);
}

std::vector<TraceRow> trace_dispatch(const ks_instance* inst, const ks_policy* policy,
                                     const MdpState& init, int64_t horizon, uint64_t seed) {
    if (const auto* b = std::get_if<MetricInstance>(&inst->v)) {
        const auto* p = std::get_if<PartitionPolicy>(&policy->v);
        if (!p) throw Error("policy does not match the instance variant");
        return trace(*b, *p, init, horizon, seed);
    }
    if (const auto* s = std::get_if<ServerDependentInstance>(&inst->v)) {
        const auto* p = std::get_if<PartitionPolicy>(&policy->v);
        if (!p) throw Error("policy does not match the instance variant");
        return trace(*s, *p, init, horizon, seed);
    }
    const auto& mi = std::get<MultiRequestInstance>(inst->v);
    const auto* p = std::get_if<MultiDispatchPolicy>(&policy->v);
    if (!p) throw Error("policy does not match the instance variant");
    return trace(mi, *p, init, horizon, seed);
}

void fill_sim_out(const SimStats& stats, ks_sim_stats* out, char** stats_json) {
    if (out) {
        out->mean_cost = stats.mean_cost;
        out->std_error = stats.std_error;
        out->ci_lo = stats.ci_lo;
        out->ci_hi = stats.ci_hi;
    }
    if (stats_json) *stats_json = dup_string(sim_stats_json(stats).dump());
}

}  // namespace

ks_status ks_simulate(const ks_instance* inst, const ks_policy* policy,
                      const int* initial_positions, const int* initial_requests,
                      int64_t horizon, int replications, uint64_t seed, int64_t burn_in,
                      ks_sim_stats* out, char** stats_json) {
    if (!inst || !policy || !initial_positions || !initial_requests)
        return fail_arg("null argument");
    return guarded([&] {
        MdpState init = make_state(inst, initial_positions, initial_requests);
        SimStats stats = simulate_dispatch(inst, policy, init, horizon, replications, seed,
                                           burn_in);
        fill_sim_out(stats, out, stats_json);
    });
}

ks_status ks_simulate_table(const ks_model* model, const ks_table* table,
                            const int* initial_positions, const int* initial_requests,
                            int64_t horizon, int replications, uint64_t seed, int64_t burn_in,
                            ks_sim_stats* out, char** stats_json) {
    if (!model || !table || !initial_positions || !initial_requests)
        return fail_arg("null argument");
    return guarded([&] {
        MdpState init;
        init.positions.assign(initial_positions, initial_positions + model->v.k);
        init.requests.assign(initial_requests, initial_requests + model->v.n);
        SimStats stats =
            simulate(model->v, table->v, init, horizon, replications, seed, burn_in);
        fill_sim_out(stats, out, stats_json);
    });
}

ks_status ks_trace_csv(const ks_instance* inst, const ks_policy* policy,
                       const int* initial_positions, const int* initial_requests,
                       int64_t horizon, uint64_t seed, char** csv_out) {
    if (!inst || !policy || !initial_positions || !initial_requests || !csv_out)
        return fail_arg("null argument");
    return guarded([&] {
        MdpState init = make_state(inst, initial_positions, initial_requests);
        std::vector<TraceRow> rows = trace_dispatch(inst, policy, init, horizon, seed);
        bool multi = std::holds_alternative<MultiRequestInstance>(inst->v);
        *csv_out = dup_string(trace_csv(rows, multi));
    });
}

ks_status ks_trace_table_csv(const ks_model* model, const ks_table* table,
                             const int* initial_positions, const int* initial_requests,
                             int64_t horizon, uint64_t seed, char** csv_out) {
    if (!model || !table || !initial_positions || !initial_requests || !csv_out)
        return fail_arg("null argument");
    return guarded([&] {
        MdpState init;
        init.positions.assign(initial_positions, initial_positions + model->v.k);
        init.requests.assign(initial_requests, initial_requests + model->v.n);
        std::vector<TraceRow> rows = trace(model->v, table->v, init, horizon, seed);
        *csv_out = dup_string(
            trace_csv(rows, model->v.variant == ModelVariant::multi_request));
    });
}

/* ------------------------------------------------------------------ */

ks_status ks_certify_run(const ks_certify_opts* opts, char** csv_out, char** summary_json_out,
                         int* all_ok) {
    if (!opts) return fail_arg("null argument");
    return guarded([&] {
        CertifyOptions o;
        o.trials = static_cast<long>(opts->trials);
        o.seed = opts->seed;
        o.points = opts->points;
        o.k = opts->k;
        switch (opts->variant) {
            case KS_VARIANT_BASE: o.variant = CertifyVariant::base; break;
            case KS_VARIANT_SERVER_DEP: o.variant = CertifyVariant::server_dep; break;
            case KS_VARIANT_MULTI: o.variant = CertifyVariant::multi; break;
            default: throw Error("unknown certification variant");
        }
        o.n = opts->n;
        CertifyReport report = run_certify(o);
        if (csv_out) *csv_out = dup_string(report.csv());
        if (summary_json_out) *summary_json_out = dup_string(report.summary().dump());
        if (all_ok) *all_ok = report.all_ok ? 1 : 0;
    });
}

}  // extern "C"

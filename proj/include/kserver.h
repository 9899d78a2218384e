/* kserver: solver and simulator for the stochastic k-server dispatch problem.
 *
 * C API over the C++ core. All functions return ks_status; on failure,
 * ks_last_error() holds a thread-local description of what went wrong.
 * Objects are opaque handles released with their ks_*_free function; strings
 * returned through char** are released with ks_string_free.
 */

#ifndef KSERVER_H
#define KSERVER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ks_status {
    KS_OK = 0,
    KS_ERR_INVALID_ARGUMENT = 1, /* bad inputs, mismatched objects, precondition failures */
    KS_ERR_PARSE = 2,            /* malformed instance document */
    KS_ERR_VALIDATION = 3,       /* instance violates its invariants */
    KS_ERR_TOO_LARGE = 4,        /* enumeration or state-space guard tripped */
    KS_ERR_NO_CONVERGENCE = 5,   /* iterative solver hit its iteration cap */
    KS_ERR_INTERNAL = 6
} ks_status;

typedef enum ks_variant {
    KS_VARIANT_BASE = 0,
    KS_VARIANT_SERVER_DEP = 1,
    KS_VARIANT_MULTI = 2
} ks_variant;

typedef struct ks_instance ks_instance; /* a problem instance of any variant */
typedef struct ks_medians ks_medians;   /* a median tuple with its objective */
typedef struct ks_policy ks_policy;     /* a decentralized dispatch policy */
typedef struct ks_model ks_model;       /* an explicit finite MDP */
typedef struct ks_table ks_table;       /* a state -> action map */
typedef struct ks_eval ks_eval;         /* exact average-cost evaluation */

const char* ks_version(void);
const char* ks_status_name(ks_status status);
/* Thread-local message describing the most recent failure in this thread. */
const char* ks_last_error(void);

void ks_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Instances                                                          */

/* Parses and validates a JSON instance document. */
ks_status ks_instance_parse(const char* json_utf8, ks_instance** out);
/* Parses without validating; combine with ks_instance_validate to inspect
 * the violations of an invalid document. */
ks_status ks_instance_parse_raw(const char* json_utf8, ks_instance** out);
ks_status ks_instance_to_json(const ks_instance* inst, char** out);
/* Validation report as JSON; *num_violations = 0 means the instance is valid. */
ks_status ks_instance_validate(const ks_instance* inst, int* num_violations, char** report_json);

ks_status ks_instance_random_euclidean(uint64_t seed, int num_points, int k, double skew,
                                       ks_instance** out);
ks_status ks_instance_random_server_dependent(uint64_t seed, int num_points, int k, double skew,
                                              ks_instance** out);
ks_status ks_instance_random_multi_request(uint64_t seed, int num_points, int k, double skew,
                                           int n, ks_instance** out);

ks_status ks_instance_variant(const ks_instance* inst, ks_variant* out);
ks_status ks_instance_num_points(const ks_instance* inst, int* out);
ks_status ks_instance_k(const ks_instance* inst, int* out);
/* Content hash of the canonical serialized document, as 16 hex digits. */
ks_status ks_instance_digest(const ks_instance* inst, char** out);
void ks_instance_free(ks_instance* inst);

/* ------------------------------------------------------------------ */
/* k-median solvers                                                   */

/* Objective of a given median tuple (variant-dependent formula). */
ks_status ks_kmedian_objective(const ks_instance* inst, const int* medians, size_t len,
                               double* out);
/* Exhaustive optimum; dispatches on the instance variant. */
ks_status ks_kmedian_exact(const ks_instance* inst, ks_medians** out);
/* Swap local search with greedy seeding (base variant only). */
ks_status ks_kmedian_local_search(const ks_instance* inst, int swap_size, double delta,
                                  uint64_t seed, ks_medians** out);

ks_status ks_medians_count(const ks_medians* m, size_t* out);
ks_status ks_medians_get(const ks_medians* m, int* buf, size_t buf_len);
ks_status ks_medians_objective(const ks_medians* m, double* out);
/* {"medians":[...],"objective":...} plus the search report when present. */
ks_status ks_medians_to_json(const ks_medians* m, char** out);
void ks_medians_free(ks_medians* m);

/* ------------------------------------------------------------------ */
/* Decentralized policies                                             */

/* Builds the partition policy (base / server-dependent) or the matching
 * dispatch policy (multi-request) from a median tuple. */
ks_status ks_policy_build(const ks_instance* inst, const int* medians, size_t len,
                          ks_policy** out);
ks_status ks_policy_to_json(const ks_policy* policy, char** out);
/* Which server serves a request point (single-request variants). */
ks_status ks_policy_dispatch(const ks_policy* policy, int request, int* server);
/* Injective assignment of n simultaneous requests (multi-request variant). */
ks_status ks_policy_dispatch_multi(const ks_policy* policy, const int* requests, size_t n,
                                   int* servers_out);
void ks_policy_free(ks_policy* policy);

/* ------------------------------------------------------------------ */
/* Exact MDP machinery                                                */

ks_status ks_model_build(const ks_instance* inst, ks_model** out);
ks_status ks_model_num_states(const ks_model* model, uint64_t* out);
ks_status ks_model_num_actions(const ks_model* model, int* out);
void ks_model_free(ks_model* model);

ks_status ks_table_from_policy(const ks_model* model, const ks_policy* policy, ks_table** out);
ks_status ks_table_greedy(const ks_model* model, ks_table** out);
void ks_table_free(ks_table* table);

/* Exact long-run average cost of a table policy. */
ks_status ks_eval_exact(const ks_model* model, const ks_table* table, ks_eval** out);
/* Average-cost optimal policy via relative value iteration, with its exact
 * evaluation. Either out parameter may be NULL. */
ks_status ks_solve_optimal(const ks_model* model, ks_table** table_out, ks_eval** eval_out);

ks_status ks_eval_gain_range(const ks_eval* eval, double* min_out, double* max_out);
ks_status ks_eval_unichain(const ks_eval* eval, int* out);
ks_status ks_eval_gain_at(const ks_eval* eval, const ks_model* model, const int* positions,
                          size_t k, const int* requests, size_t n, double* out);
ks_status ks_eval_to_json(const ks_eval* eval, char** out);
void ks_eval_free(ks_eval* eval);

/* Drift bounds from a potential h (length = number of states):
 * upper needs the evaluated policy, lower scans all actions. */
ks_status ks_drift_upper(const ks_model* model, const ks_table* table, const double* h,
                          size_t len, double* out);
ks_status ks_drift_lower(const ks_model* model, const double* h, size_t len, double* out);
/* Canonical potentials written into caller-provided buffers. */
ks_status ks_canonical_h_lower(const ks_model* model, double* buf, size_t len);
ks_status ks_canonical_h_upper(const ks_model* model, const int* medians, size_t medians_len,
                               double* buf, size_t len);
/* Bounds with the canonical potentials in one call. */
ks_status ks_bound_lower_canonical(const ks_model* model, double* out);
ks_status ks_bound_upper_canonical(const ks_model* model, const ks_table* table,
                                   const int* medians, size_t medians_len, double* out);

/* ------------------------------------------------------------------ */
/* Simulation                                                         */

typedef struct ks_sim_stats {
    double mean_cost;
    double std_error;
    double ci_lo;
    double ci_hi;
} ks_sim_stats;

/* Monte Carlo estimate under a decentralized policy. initial_positions has
 * one entry per server; initial_requests has one entry (n entries for the
 * multi-request variant). stats_json may be NULL. */
ks_status ks_simulate(const ks_instance* inst, const ks_policy* policy,
                      const int* initial_positions, const int* initial_requests,
                      int64_t horizon, int replications, uint64_t seed, int64_t burn_in,
                      ks_sim_stats* out, char** stats_json);
/* Monte Carlo estimate under a table policy. */
ks_status ks_simulate_table(const ks_model* model, const ks_table* table,
                            const int* initial_positions, const int* initial_requests,
                            int64_t horizon, int replications, uint64_t seed, int64_t burn_in,
                            ks_sim_stats* out, char** stats_json);
/* Deterministic replay of replication 0 as CSV (t,request,server,cost;
 * the multi-request variant adds a j column). */
ks_status ks_trace_csv(const ks_instance* inst, const ks_policy* policy,
                       const int* initial_positions, const int* initial_requests,
                       int64_t horizon, uint64_t seed, char** csv_out);
/* Same replay under a table policy. */
ks_status ks_trace_table_csv(const ks_model* model, const ks_table* table,
                             const int* initial_positions, const int* initial_requests,
                             int64_t horizon, uint64_t seed, char** csv_out);

/* ------------------------------------------------------------------ */
/* Certification harness                                              */

typedef struct ks_certify_opts {
    long long trials;
    uint64_t seed;
    int points;
    int k;
    int variant; /* ks_variant */
    int n;       /* multi-request only */
} ks_certify_opts;

/* Generates seeded instances, runs the full pipeline on each, and checks
 * every certified inequality. all_ok is 1 when every row passed. Any of the
 * out parameters may be NULL. */
ks_status ks_certify_run(const ks_certify_opts* opts, char** csv_out, char** summary_json_out,
                         int* all_ok);

#ifdef __cplusplus
}
#endif

#endif /* KSERVER_H */

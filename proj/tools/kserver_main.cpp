// Command-line front end. Everything numerical goes through the shared
// library's C API (kserver.h); this file only parses flags, moves files
// around, and assembles result documents.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kserver.h"

using nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitCertifyFailed = 3;

struct CliError {
    int code;
    std::string message;
};

void require_ok(ks_status status, int exit_code = kExitError) {
    if (status != KS_OK)
        throw CliError{exit_code, std::string(ks_status_name(status)) + ": " + ks_last_error()};
}

// RAII over the C handles
template <class T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    explicit Handle(T* p) : ptr(p) {}
    ~Handle() { Free(ptr); }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};
using InstanceHandle = Handle<ks_instance, ks_instance_free>;
using MediansHandle = Handle<ks_medians, ks_medians_free>;
using PolicyHandle = Handle<ks_policy, ks_policy_free>;
using ModelHandle = Handle<ks_model, ks_model_free>;
using TableHandle = Handle<ks_table, ks_table_free>;
using EvalHandle = Handle<ks_eval, ks_eval_free>;

std::string take_string(char* s) {
    std::string out = s ? s : "";
    ks_string_free(s);
    return out;
}

// result-document numbers carry 12 significant digits
double round12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::strtod(buf, nullptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{kExitError, "cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError{kExitError, "cannot write " + path};
    out << content;
}

InstanceHandle load_instance_file(const std::string& path) {
    InstanceHandle inst;
    require_ok(ks_instance_parse(read_file(path).c_str(), inst.out()), kExitInvalid);
    return inst;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            size_t used = 0;
            int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CliError{kExitError, "expected a comma-separated integer list, got \"" +
                                           text + "\""};
        }
    }
    return out;
}

// Result document: stable "results" payload; wall clock lives outside it so
// re-runs stay byte-comparable on the numerical fields.
class ResultDocument {
public:
    ResultDocument(std::string command_echo) : start_(clock_t::now()) {
        doc_["command"] = std::move(command_echo);
        doc_["version"] = ks_version();
    }
    void set_instance_digest(const ks_instance* inst) {
        char* digest = nullptr;
        require_ok(ks_instance_digest(inst, &digest));
        doc_["instance_digest"] = take_string(digest);
    }
    ordered_json& results() { return results_; }
    void emit(const std::string& out_path) {
        doc_["results"] = results_;
        doc_["wall_clock_sec"] =
            std::chrono::duration<double>(clock_t::now() - start_).count();
        std::string text = doc_.dump(2) + "\n";
        if (out_path.empty())
            std::cout << text;
        else
            write_file(out_path, text);
    }

private:
    using clock_t = std::chrono::steady_clock;
    clock_t::time_point start_;
    ordered_json doc_;
    ordered_json results_ = ordered_json::object();
};

std::string echo_command(int argc, char** argv) {
    std::string echo;
    for (int i = 0; i < argc; ++i) {
        if (i) echo += ' ';
        echo += argv[i];
    }
    return echo;
}

ordered_json parse_fragment(const std::string& text) { return ordered_json::parse(text); }

// shared flags for commands that need a median tuple
struct MedianChoice {
    std::string medians_csv;
    std::string from_kmedian = "exact";
    int swaps = 1;
    double delta = 1e-6;
    std::uint64_t seed = 1;
};

std::vector<int> resolve_medians(const ks_instance* inst, const MedianChoice& choice,
                                 ordered_json* results) {
    if (!choice.medians_csv.empty()) {
        std::vector<int> medians = parse_int_list(choice.medians_csv);
        if (medians.empty()) throw CliError{kExitError, "empty --medians list"};
        if (results) (*results)["medians_source"] = "explicit";
        return medians;
    }
    MediansHandle med;
    if (choice.from_kmedian == "local-search") {
        require_ok(ks_kmedian_local_search(inst, choice.swaps, choice.delta, choice.seed,
                                           med.out()));
    } else if (choice.from_kmedian == "exact") {
        require_ok(ks_kmedian_exact(inst, med.out()));
    } else {
        throw CliError{kExitError, "--from-kmedian must be exact or local-search"};
    }
    size_t count = 0;
    require_ok(ks_medians_count(med.get(), &count));
    std::vector<int> medians(count);
    require_ok(ks_medians_get(med.get(), medians.data(), count));
    if (results) {
        (*results)["medians_source"] = "kmedian-" + choice.from_kmedian;
        char* json = nullptr;
        require_ok(ks_medians_to_json(med.get(), &json));
        (*results)["kmedian"] = parse_fragment(take_string(json));
    }
    return medians;
}

struct SimFlags {
    std::int64_t horizon = 100000;
    int replications = 20;
    std::int64_t burn_in = -1;  // default horizon / 10
    std::uint64_t seed = 1;
    std::string init_positions;
    std::string init_requests;
};

void resolve_initial_state(const ks_instance* inst, const SimFlags& flags,
                           std::vector<int>& positions, std::vector<int>& requests) {
    int k = 0, points = 0;
    require_ok(ks_instance_k(inst, &k));
    require_ok(ks_instance_num_points(inst, &points));
    ks_variant variant;
    require_ok(ks_instance_variant(inst, &variant));
    int n = 1;
    if (variant == KS_VARIANT_MULTI) {
        // the instance document carries n; recover it through the JSON view
        char* text = nullptr;
        require_ok(ks_instance_to_json(inst, &text));
        n = parse_fragment(take_string(text)).value("n", 1);
    }
    positions.assign(k, 0);
    requests.assign(n, 0);
    if (!flags.init_positions.empty()) {
        positions = parse_int_list(flags.init_positions);
        if (static_cast<int>(positions.size()) != k)
            throw CliError{kExitError, "--init-positions needs exactly k entries"};
    }
    if (!flags.init_requests.empty()) {
        requests = parse_int_list(flags.init_requests);
        if (static_cast<int>(requests.size()) != n)
            throw CliError{kExitError, "--init-requests needs exactly n entries"};
    }
}

int cmd_validate(const std::string& path, const std::string& out_path, int argc, char** argv) {
    ResultDocument doc(echo_command(argc, argv));
    InstanceHandle inst;
    require_ok(ks_instance_parse_raw(read_file(path).c_str(), inst.out()), kExitInvalid);
    doc.set_instance_digest(inst.get());
    int violations = 0;
    char* report = nullptr;
    require_ok(ks_instance_validate(inst.get(), &violations, &report));
    doc.results()["validation"] = parse_fragment(take_string(report));
    doc.emit(out_path);
    return violations == 0 ? 0 : kExitInvalid;
}

int cmd_gen(std::uint64_t seed, int points, int k, double skew, const std::string& variant,
            int n, const std::string& out_path) {
    InstanceHandle inst;
    if (variant == "base")
        require_ok(ks_instance_random_euclidean(seed, points, k, skew, inst.out()));
    else if (variant == "server-dep")
        require_ok(ks_instance_random_server_dependent(seed, points, k, skew, inst.out()));
    else if (variant == "multi")
        require_ok(ks_instance_random_multi_request(seed, points, k, skew, n, inst.out()));
    else
        throw CliError{kExitError, "--variant must be base, server-dep, or multi"};
    char* text = nullptr;
    require_ok(ks_instance_to_json(inst.get(), &text));
    std::string body = take_string(text) + "\n";
    if (out_path.empty())
        std::cout << body;
    else
        write_file(out_path, body);
    return 0;
}

int cmd_kmedian(const std::string& path, bool exact, bool local_search, int swaps, double delta,
                std::uint64_t seed, const std::string& out_path, int argc, char** argv) {
    if (exact == local_search)
        throw CliError{kExitError, "choose exactly one of --exact or --local-search"};
    ResultDocument doc(echo_command(argc, argv));
    InstanceHandle inst = load_instance_file(path);
    doc.set_instance_digest(inst.get());
    MediansHandle med;
    if (exact)
        require_ok(ks_kmedian_exact(inst.get(), med.out()));
    else
        require_ok(ks_kmedian_local_search(inst.get(), swaps, delta, seed, med.out()));
    char* json = nullptr;
    require_ok(ks_medians_to_json(med.get(), &json));
    doc.results()["kmedian"] = parse_fragment(take_string(json));
    doc.emit(out_path);
    return 0;
}

int cmd_policy(const std::string& path, const MedianChoice& choice, const std::string& out_path,
               int argc, char** argv) {
    ResultDocument doc(echo_command(argc, argv));
    InstanceHandle inst = load_instance_file(path);
    doc.set_instance_digest(inst.get());
    std::vector<int> medians = resolve_medians(inst.get(), choice, &doc.results());
    PolicyHandle policy;
    require_ok(ks_policy_build(inst.get(), medians.data(), medians.size(), policy.out()));
    char* json = nullptr;
    require_ok(ks_policy_to_json(policy.get(), &json));
    doc.results()["policy"] = parse_fragment(take_string(json));
    doc.emit(out_path);
    return 0;
}

int cmd_eval(const std::string& path, const std::string& policy_kind, const std::string& method,
             const MedianChoice& choice, const SimFlags& sim, const std::string& trace_path,
             const std::string& out_path, int argc, char** argv) {
    if (policy_kind != "decentralized" && policy_kind != "optimal" && policy_kind != "greedy")
        throw CliError{kExitError, "--policy must be decentralized, optimal, or greedy"};
    if (method != "exact" && method != "simulate")
        throw CliError{kExitError, "--method must be exact or simulate"};

    ResultDocument doc(echo_command(argc, argv));
    InstanceHandle inst = load_instance_file(path);
    doc.set_instance_digest(inst.get());
    doc.results()["policy_kind"] = policy_kind;
    doc.results()["method"] = method;

    std::int64_t burn_in = sim.burn_in >= 0 ? sim.burn_in : sim.horizon / 10;

    PolicyHandle policy;
    std::vector<int> medians;
    if (policy_kind == "decentralized") {
        medians = resolve_medians(inst.get(), choice, &doc.results());
        doc.results()["medians"] = medians;
        require_ok(ks_policy_build(inst.get(), medians.data(), medians.size(), policy.out()));
    }

    if (method == "simulate") {
        std::vector<int> positions, requests;
        resolve_initial_state(inst.get(), sim, positions, requests);
        char* stats_json = nullptr;
        if (policy_kind == "decentralized") {
            require_ok(ks_simulate(inst.get(), policy.get(), positions.data(), requests.data(),
                                   sim.horizon, sim.replications, sim.seed, burn_in, nullptr,
                                   &stats_json));
            if (!trace_path.empty()) {
                char* csv = nullptr;
                require_ok(ks_trace_csv(inst.get(), policy.get(), positions.data(),
                                        requests.data(), sim.horizon, sim.seed, &csv));
                write_file(trace_path, take_string(csv));
            }
        } else {
            ModelHandle model;
            require_ok(ks_model_build(inst.get(), model.out()));
            TableHandle table;
            if (policy_kind == "optimal")
                require_ok(ks_solve_optimal(model.get(), table.out(), nullptr));
            else
                require_ok(ks_table_greedy(model.get(), table.out()));
            require_ok(ks_simulate_table(model.get(), table.get(), positions.data(),
                                         requests.data(), sim.horizon, sim.replications,
                                         sim.seed, burn_in, nullptr, &stats_json));
            if (!trace_path.empty()) {
                char* csv = nullptr;
                require_ok(ks_trace_table_csv(model.get(), table.get(), positions.data(),
                                              requests.data(), sim.horizon, sim.seed, &csv));
                write_file(trace_path, take_string(csv));
            }
        }
        doc.results()["simulation"] = parse_fragment(take_string(stats_json));
        doc.emit(out_path);
        return 0;
    }

    ModelHandle model;
    require_ok(ks_model_build(inst.get(), model.out()));
    EvalHandle eval;
    if (policy_kind == "optimal") {
        require_ok(ks_solve_optimal(model.get(), nullptr, eval.out()));
    } else {
        TableHandle table;
        if (policy_kind == "decentralized")
            require_ok(ks_table_from_policy(model.get(), policy.get(), table.out()));
        else
            require_ok(ks_table_greedy(model.get(), table.out()));
        require_ok(ks_eval_exact(model.get(), table.get(), eval.out()));
    }
    char* eval_json = nullptr;
    require_ok(ks_eval_to_json(eval.get(), &eval_json));
    doc.results()["evaluation"] = parse_fragment(take_string(eval_json));
    doc.emit(out_path);
    return 0;
}

int cmd_bound(const std::string& path, bool upper, bool lower, const MedianChoice& choice,
              const std::string& out_path, int argc, char** argv) {
    if (upper == lower) throw CliError{kExitError, "choose exactly one of --upper or --lower"};
    ResultDocument doc(echo_command(argc, argv));
    InstanceHandle inst = load_instance_file(path);
    doc.set_instance_digest(inst.get());
    ModelHandle model;
    require_ok(ks_model_build(inst.get(), model.out()));
    if (lower) {
        double bound = 0.0;
        require_ok(ks_bound_lower_canonical(model.get(), &bound));
        doc.results()["bound"] = "lower";
        doc.results()["value"] = round12(bound);
    } else {
        std::vector<int> medians = resolve_medians(inst.get(), choice, &doc.results());
        doc.results()["medians"] = medians;
        PolicyHandle policy;
        require_ok(ks_policy_build(inst.get(), medians.data(), medians.size(), policy.out()));
        TableHandle table;
        require_ok(ks_table_from_policy(model.get(), policy.get(), table.out()));
        double bound = 0.0;
        require_ok(ks_bound_upper_canonical(model.get(), table.get(), medians.data(),
                                            medians.size(), &bound));
        doc.results()["bound"] = "upper";
        doc.results()["value"] = round12(bound);
    }
    doc.emit(out_path);
    return 0;
}

int cmd_certify(long long trials, std::uint64_t seed, int points, int k,
                const std::string& variant, int n, const std::string& csv_path,
                const std::string& out_path, int argc, char** argv) {
    ks_certify_opts opts{};
    opts.trials = trials;
    opts.seed = seed;
    opts.points = points;
    opts.k = k;
    opts.n = n;
    if (variant == "base")
        opts.variant = KS_VARIANT_BASE;
    else if (variant == "server-dep")
        opts.variant = KS_VARIANT_SERVER_DEP;
    else if (variant == "multi")
        opts.variant = KS_VARIANT_MULTI;
    else
        throw CliError{kExitError, "--variant must be base, server-dep, or multi"};

    ResultDocument doc(echo_command(argc, argv));
    char* csv = nullptr;
    char* summary = nullptr;
    int all_ok = 0;
    require_ok(ks_certify_run(&opts, &csv, &summary, &all_ok));
    std::string csv_text = take_string(csv);
    doc.results()["certification"] = parse_fragment(take_string(summary));
    if (!csv_path.empty())
        write_file(csv_path, csv_text);
    else
        doc.results()["csv"] = csv_text;
    doc.emit(out_path);
    return all_ok ? 0 : kExitCertifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic k-server toolkit: decentralized partition policies, exact MDP "
                 "evaluation, drift bounds, and factor-two certification"};
    app.require_subcommand(1);

    std::string instance_path, out_path;

    auto* validate = app.add_subcommand("validate", "check an instance document");
    validate->add_option("instance", instance_path, "instance JSON file")->required();
    validate->add_option("--out", out_path, "write the result document here");

    auto* gen = app.add_subcommand("gen", "generate a random instance");
    std::uint64_t gen_seed = 1;
    int gen_points = 5, gen_k = 2, gen_n = 2;
    double gen_skew = 0.0;
    std::string gen_variant = "base";
    gen->add_option("--seed", gen_seed);
    gen->add_option("--points", gen_points);
    gen->add_option("--k", gen_k);
    gen->add_option("--skew", gen_skew, "pmf skew in [0,1]");
    gen->add_option("--variant", gen_variant, "base | server-dep | multi");
    gen->add_option("--n", gen_n, "requests per period (multi)");
    gen->add_option("--out", out_path);

    auto* kmedian = app.add_subcommand("kmedian", "solve the (generalized) k-median problem");
    bool km_exact = false, km_ls = false;
    int km_swaps = 1;
    double km_delta = 1e-6;
    std::uint64_t km_seed = 1;
    kmedian->add_option("instance", instance_path)->required();
    kmedian->add_flag("--exact", km_exact, "exhaustive enumeration");
    kmedian->add_flag("--local-search", km_ls, "swap heuristic (base variant)");
    kmedian->add_option("--swaps", km_swaps, "swap size p");
    kmedian->add_option("--delta", km_delta, "relative improvement threshold");
    kmedian->add_option("--seed", km_seed, "seeding tie-break stream");
    kmedian->add_option("--out", out_path);

    MedianChoice choice;
    auto add_median_flags = [&choice](CLI::App* cmd) {
        cmd->add_option("--medians", choice.medians_csv, "comma-separated point indices");
        cmd->add_option("--from-kmedian", choice.from_kmedian, "exact | local-search");
        cmd->add_option("--swaps", choice.swaps);
        cmd->add_option("--delta", choice.delta);
        cmd->add_option("--seed", choice.seed);
    };

    auto* policy = app.add_subcommand("policy", "build the decentralized partition policy");
    policy->add_option("instance", instance_path)->required();
    add_median_flags(policy);
    policy->add_option("--out", out_path);

    auto* eval = app.add_subcommand("eval", "evaluate a policy's long-run average cost");
    std::string eval_policy = "decentralized", eval_method = "exact", trace_path;
    SimFlags sim;
    eval->add_option("instance", instance_path)->required();
    eval->add_option("--policy", eval_policy, "decentralized | optimal | greedy");
    eval->add_option("--method", eval_method, "exact | simulate");
    add_median_flags(eval);
    eval->add_option("--horizon", sim.horizon);
    eval->add_option("--replications", sim.replications);
    eval->add_option("--burn-in", sim.burn_in, "default horizon/10");
    eval->add_option("--sim-seed", sim.seed);
    eval->add_option("--init-positions", sim.init_positions, "comma-separated, default all 0");
    eval->add_option("--init-requests", sim.init_requests, "comma-separated, default all 0");
    eval->add_option("--trace", trace_path, "write the replication-0 trace CSV here");
    eval->add_option("--out", out_path);

    auto* bound = app.add_subcommand("bound", "canonical drift bounds on the average cost");
    bool b_upper = false, b_lower = false;
    bound->add_option("instance", instance_path)->required();
    bound->add_flag("--upper", b_upper);
    bound->add_flag("--lower", b_lower);
    add_median_flags(bound);
    bound->add_option("--out", out_path);

    auto* certify = app.add_subcommand(
        "certify", "generate seeded instances and certify the factor-two guarantees");
    long long ct_trials = 50;
    std::uint64_t ct_seed = 42;
    int ct_points = 5, ct_k = 2, ct_n = 2;
    std::string ct_variant = "base", ct_csv;
    certify->add_option("--trials", ct_trials);
    certify->add_option("--seed", ct_seed);
    certify->add_option("--points", ct_points);
    certify->add_option("--k", ct_k);
    certify->add_option("--variant", ct_variant, "base | server-dep | multi");
    certify->add_option("--n", ct_n, "requests per period (multi)");
    certify->add_option("--csv", ct_csv, "write the per-trial CSV table here");
    certify->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (validate->parsed()) return cmd_validate(instance_path, out_path, argc, argv);
        if (gen->parsed())
            return cmd_gen(gen_seed, gen_points, gen_k, gen_skew, gen_variant, gen_n, out_path);
        if (kmedian->parsed())
            return cmd_kmedian(instance_path, km_exact, km_ls, km_swaps, km_delta, km_seed,
                               out_path, argc, argv);
        if (policy->parsed()) return cmd_policy(instance_path, choice, out_path, argc, argv);
        if (eval->parsed())
            return cmd_eval(instance_path, eval_policy, eval_method, choice, sim, trace_path,
                            out_path, argc, argv);
        if (bound->parsed())
            return cmd_bound(instance_path, b_upper, b_lower, choice, out_path, argc, argv);
        if (certify->parsed())
            return cmd_certify(ct_trials, ct_seed, ct_points, ct_k, ct_variant, ct_n, ct_csv,
                               out_path, argc, argv);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

#include "json_io.hpp"

namespace kserver {

using nlohmann::ordered_json;

ordered_json report_json(const ValidationReport& report) {
    ordered_json j;
    j["valid"] = report.ok();
    ordered_json entries = ordered_json::array();
    for (const auto& e : report.entries) {
        ordered_json v;
        v["kind"] = e.kind;
        if (e.server >= 0) v["server"] = e.server;
        v["indices"] = e.indices;
        v["magnitude"] = round12(e.magnitude);
        v["message"] = e.message;
        entries.push_back(std::move(v));
    }
    j["violations"] = std::move(entries);
    return j;
}

ordered_json median_set_json(const MedianSet& set) {
    ordered_json j;
    j["medians"] = set.medians;
    j["objective"] = round12(set.objective);
    return j;
}

ordered_json approx_report_json(const ApproxReport& report) {
    ordered_json j;
    j["heuristic_objective"] = round12(report.heuristic_objective);
    if (report.exact_objective) j["exact_objective"] = round12(*report.exact_objective);
    if (report.ratio) j["ratio"] = round12(*report.ratio);
    j["swaps_used"] = report.swaps_used;
    j["iterations"] = report.iterations;
    return j;
}

ordered_json partition_json(const PartitionPolicy& policy) {
    ordered_json j;
    j["cells"] = policy.cells;
    j["medians"] = policy.medians;
    j["variant"] =
        policy.variant == PolicyVariant::server_dependent ? "server-dependent" : "base";
    j["tie_break"] = "lowest-server-index";
    return j;
}

ordered_json multi_policy_json(const MultiDispatchPolicy& policy) {
    ordered_json j;
    j["medians"] = policy.medians;
    j["n"] = policy.n;
    j["tie_break"] = "lexicographic-assignment";
    return j;
}

ordered_json eval_json(const EvalResult& eval) {
    ordered_json j;
    j["method"] = eval.method;
    j["num_states"] = eval.gain.size();
    j["unichain"] = eval.unichain();
    j["gain_min"] = round12(eval.gain_min());
    j["gain_max"] = round12(eval.gain_max());
    if (eval.unichain()) j["gain"] = round12(eval.classes[0].gain);
    ordered_json classes = ordered_json::array();
    for (const auto& c : eval.classes) {
        ordered_json cj;
        cj["size"] = c.states.size();
        cj["gain"] = round12(c.gain);
        classes.push_back(std::move(cj));
    }
    j["recurrent_classes"] = std::move(classes);
    return j;
}

ordered_json sim_stats_json(const SimStats& stats) {
    ordered_json j;
    j["mean_cost"] = round12(stats.mean_cost);
    j["std_error"] = round12(stats.std_error);
    j["ci95"] = {round12(stats.ci_lo), round12(stats.ci_hi)};
    j["horizon"] = stats.horizon;
    j["burn_in"] = stats.burn_in;
    j["replications"] = stats.replications;
    j["seed"] = stats.seed;
    j["generator"] = stats.generator;
    ordered_json init;
    init["positions"] = stats.initial.positions;
    init["requests"] = stats.initial.requests;
    j["initial_state"] = std::move(init);
    return j;
}

}  // namespace kserver

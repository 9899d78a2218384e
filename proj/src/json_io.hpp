#pragma once

#include "json.hpp"

#include "instance.hpp"
#include "kmedian.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "sim.hpp"

namespace kserver {

// JSON fragments for result documents. All floating-point outputs are
// rounded to 12 significant digits so re-runs serialize identically.
nlohmann::ordered_json report_json(const ValidationReport& report);
nlohmann::ordered_json median_set_json(const MedianSet& set);
nlohmann::ordered_json approx_report_json(const ApproxReport& report);
nlohmann::ordered_json partition_json(const PartitionPolicy& policy);
nlohmann::ordered_json multi_policy_json(const MultiDispatchPolicy& policy);
nlohmann::ordered_json eval_json(const EvalResult& eval);
nlohmann::ordered_json sim_stats_json(const SimStats& stats);

}  // namespace kserver

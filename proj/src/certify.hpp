#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "instance.hpp"

namespace kserver {

enum class CertifyVariant { base, server_dep, multi };

struct CertifyOptions {
    long trials = 50;
    std::uint64_t seed = 42;
    int points = 5;
    int k = 2;
    CertifyVariant variant = CertifyVariant::base;
    int n = 2;  // multi-request only
    double tol = kCertifySlack;
};

// One certified instance: the factor-two sandwich
//   lower_bound <= J(mu*) <= J(mu_d) <= upper_bound = 2 * kmedian_opt
// plus the local-search 2*rho guarantee where a heuristic solution exists.
struct CertifyRow {
    std::uint64_t seed = 0;
    std::string variant;
    double kmedian_opt = 0.0;
    std::optional<double> ls_obj;
    std::optional<double> rho;
    double j_opt = 0.0;     // max over initial states
    double j_mud = 0.0;     // max over initial states
    std::optional<double> j_mud_ls;
    double j_greedy = 0.0;  // max over initial states
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    double factor = 0.0;  // max over initial states of J(mu_d)/J(mu*)
    bool ok = false;
    std::vector<std::string> failures;
};

struct CertifyReport {
    CertifyOptions options;
    std::vector<CertifyRow> rows;
    bool all_ok = false;
    double max_factor = 0.0;
    bool any_factor_above_one = false;  // some row has factor > 1 + 1e-6

    std::string csv() const;
    nlohmann::ordered_json summary() const;
};

std::string certify_csv_header();
std::string certify_csv_line(const CertifyRow& row);

// Full pipeline on one instance: exact medians, heuristic medians (base
// variant), decentralized policies, exact optimal policy, exact evaluations,
// and both canonical drift bounds.
CertifyRow certify_instance(const Instance& inst, std::uint64_t row_seed, double tol);

CertifyReport run_certify(const CertifyOptions& opts);

const char* certify_variant_name(CertifyVariant v);

}  // namespace kserver

#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"

namespace kserver {

using Matrix = std::vector<std::vector<double>>;

// Finite metric space with a request pmf and a server count. The distance
// matrix is the ground truth; coordinates are only a generator convenience
// and are not retained.
struct MetricInstance {
    std::vector<std::string> points;
    Matrix dist;
    std::vector<double> pmf;
    int k = 1;

    int size() const { return static_cast<int>(points.size()); }
    double d(int i, int j) const { return dist[i][j]; }
};

// Variant where each server u has its own travel metric d_u and a
// per-point processing cost c_u(s) added when u serves s.
struct ServerDependentInstance {
    std::vector<std::string> points;
    std::vector<Matrix> dists;                   // one metric per server
    std::vector<std::vector<double>> proc_costs; // one cost vector per server
    std::vector<double> pmf;

    int size() const { return static_cast<int>(points.size()); }
    int k() const { return static_cast<int>(dists.size()); }
    double serve_cost(int u, int from, int to) const {
        return dists[u][from][to] + proc_costs[u][to];
    }
};

enum class RequestMode { explicit_table, iid_product };

// Variant where n <= k requests arrive per period. The joint request
// distribution over S^n is either an explicit table or the n-fold product
// of the base pmf.
struct MultiRequestInstance {
    MetricInstance base;
    int n = 1;
    RequestMode mode = RequestMode::iid_product;
    std::vector<std::pair<std::vector<int>, double>> table; // explicit mode only

    int size() const { return base.size(); }
    int k() const { return base.k; }
};

using Instance = std::variant<MetricInstance, ServerDependentInstance, MultiRequestInstance>;

struct Violation {
    std::string kind;
    int server = -1;          // which per-server matrix, -1 when not applicable
    std::vector<int> indices;
    double magnitude = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> entries;

    bool ok() const { return entries.empty(); }
    int count(std::string_view kind) const;
    std::string to_string() const;
};

class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report)
        : Error("instance failed validation:\n" + report.to_string()),
          report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

ValidationReport validate(const MetricInstance& inst);
ValidationReport validate(const ServerDependentInstance& inst);
ValidationReport validate(const MultiRequestInstance& inst);
ValidationReport validate(const Instance& inst);

// Seeded generators. Identical arguments produce bit-identical instances.
MetricInstance random_euclidean_instance(std::uint64_t seed, int num_points, int k, double skew);
ServerDependentInstance random_server_dependent_instance(std::uint64_t seed, int num_points,
                                                         int k, double skew);
MultiRequestInstance random_multi_request_instance(std::uint64_t seed, int num_points, int k,
                                                   double skew, int n);

// JSON document round trips. load_instance validates and throws
// ValidationError on violations; parse_instance only checks structure.
Instance parse_instance(const std::string& text);
Instance load_instance(const std::string& text);
std::string save_instance(const Instance& inst);
std::string save_instance(const MetricInstance& inst);
std::string save_instance(const ServerDependentInstance& inst);
std::string save_instance(const MultiRequestInstance& inst);

std::uint64_t instance_digest(const Instance& inst);
int instance_num_points(const Instance& inst);
int instance_k(const Instance& inst);

// Positive-probability request tuples of a multi-request instance in
// lexicographic tuple order, with normalized probabilities.
struct TupleDistribution {
    int n = 1;
    int num_points = 0;
    std::vector<std::vector<int>> tuples;
    std::vector<double> probs;
};
TupleDistribution request_distribution(const MultiRequestInstance& inst);

}  // namespace kserver

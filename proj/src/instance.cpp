#include "instance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace kserver {

using nlohmann::json;
using nlohmann::ordered_json;

int ValidationReport::count(std::string_view kind) const {
    int c = 0;
    for (const auto& e : entries)
        if (e.kind == kind) ++c;
    return c;
}

std::string ValidationReport::to_string() const {
    if (entries.empty()) return "valid";
    std::ostringstream os;
    for (const auto& e : entries) os << "  [" << e.kind << "] " << e.message << "\n";
    return os.str();
}

namespace {

std::string idx_list(const std::vector<int>& idx) {
    std::string s = "(";
    for (size_t i = 0; i < idx.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(idx[i]);
    }
    return s + ")";
}

void add(ValidationReport& r, std::string kind, int server, std::vector<int> idx, double mag,
         std::string msg) {
    r.entries.push_back({std::move(kind), server, std::move(idx), mag, std::move(msg)});
}

std::string server_tag(int server) {
    return server < 0 ? std::string() : " [server " + std::to_string(server) + "]";
}

// Checks one distance matrix against the metric axioms. `server` labels the
// matrix in per-server reports (-1 for the base metric).
void check_metric(ValidationReport& r, const Matrix& dist, int n, int server) {
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(dist[i].size()) != n) {
            add(r, "shape", server, {i}, 0.0,
                "dist row " + std::to_string(i) + " has wrong length" + server_tag(server));
            return;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!(dist[i][i] == 0.0))
            add(r, "diagonal", server, {i}, dist[i][i],
                "dist[" + std::to_string(i) + "][" + std::to_string(i) + "] = " +
                    std::to_string(dist[i][i]) + " != 0" + server_tag(server));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!(dist[i][j] == dist[j][i]))
                add(r, "asymmetry", server, {i, j}, dist[i][j] - dist[j][i],
                    "dist not symmetric at " + idx_list({i, j}) + server_tag(server));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            if (!(dist[i][j] >= 0.0))
                add(r, "negative-distance", server, {i, j}, dist[i][j],
                    "dist" + idx_list({i, j}) + " = " + std::to_string(dist[i][j]) +
                        " is negative or non-finite" + server_tag(server));
    // One entry per violating pair, reporting the most violating midpoint.
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int best_l = -1;
            for (int l = 0; l < n; ++l) {
                if (l == i || l == j) continue;
                double via = dist[i][l] + dist[l][j];
                if (via < best) {
                    best = via;
                    best_l = l;
                }
            }
            if (best_l >= 0 && dist[i][j] > best + kMetricSlack)
                add(r, "triangle", server, {i, best_l, j}, dist[i][j] - best,
                    "triangle inequality violated for " + idx_list({i, best_l, j}) + ": d" +
                        idx_list({i, j}) + " = " + std::to_string(dist[i][j]) + " > " +
                        std::to_string(best) + server_tag(server));
        }
    }
}

void check_pmf(ValidationReport& r, const std::vector<double>& pmf) {
    for (size_t i = 0; i < pmf.size(); ++i)
        if (!(pmf[i] >= 0.0))
            add(r, "pmf-negative", -1, {static_cast<int>(i)}, pmf[i],
                "pmf[" + std::to_string(i) + "] = " + std::to_string(pmf[i]) +
                    " is negative or non-finite");
    Accumulator sum;
    for (double p : pmf) sum.add(p);
    double s = sum.value();
    if (!(std::abs(s - 1.0) <= kPmfSlack))
        add(r, "pmf-sum", -1, {}, s, "pmf sums to " + std::to_string(s) + ", expected 1");
}

}  // namespace

ValidationReport validate(const MetricInstance& inst) {
    ValidationReport r;
    int n = inst.size();
    if (n < 1) {
        add(r, "shape", -1, {}, 0.0, "instance has no points");
        return r;
    }
    if (static_cast<int>(inst.dist.size()) != n) {
        add(r, "shape", -1, {}, 0.0, "dist has wrong number of rows");
        return r;
    }
    if (static_cast<int>(inst.pmf.size()) != n) {
        add(r, "shape", -1, {}, 0.0, "pmf has wrong length");
        return r;
    }
    if (inst.k < 1) add(r, "bad-k", -1, {}, inst.k, "k must be a positive integer");
    check_metric(r, inst.dist, n, -1);
    check_pmf(r, inst.pmf);
    return r;
}

ValidationReport validate(const ServerDependentInstance& inst) {
    ValidationReport r;
    int n = inst.size();
    if (n < 1) {
        add(r, "shape", -1, {}, 0.0, "instance has no points");
        return r;
    }
    if (inst.k() < 1) {
        add(r, "bad-k", -1, {}, 0.0, "instance has no per-server metrics");
        return r;
    }
    if (static_cast<int>(inst.proc_costs.size()) != inst.k()) {
        add(r, "shape", -1, {}, 0.0, "proc_costs has wrong number of servers");
        return r;
    }
    if (static_cast<int>(inst.pmf.size()) != n) {
        add(r, "shape", -1, {}, 0.0, "pmf has wrong length");
        return r;
    }
    for (int u = 0; u < inst.k(); ++u) {
        if (static_cast<int>(inst.dists[u].size()) != n) {
            add(r, "shape", u, {}, 0.0, "dists[" + std::to_string(u) + "] has wrong shape");
            continue;
        }
        check_metric(r, inst.dists[u], n, u);
        if (static_cast<int>(inst.proc_costs[u].size()) != n) {
            add(r, "shape", u, {}, 0.0, "proc_costs[" + std::to_string(u) + "] has wrong length");
            continue;
        }
        for (int s = 0; s < n; ++s)
            if (!(inst.proc_costs[u][s] >= 0.0))
                add(r, "negative-processing-cost", u, {s}, inst.proc_costs[u][s],
                    "proc_costs[" + std::to_string(u) + "][" + std::to_string(s) + "] = " +
                        std::to_string(inst.proc_costs[u][s]) + " is negative or non-finite");
    }
    check_pmf(r, inst.pmf);
    return r;
}

ValidationReport validate(const MultiRequestInstance& inst) {
    ValidationReport r = validate(inst.base);
    if (inst.n < 1 || inst.n > inst.k())
        add(r, "bad-n", -1, {inst.n}, inst.n,
            "n = " + std::to_string(inst.n) + " must satisfy 1 <= n <= k = " +
                std::to_string(inst.k()));
    if (inst.mode == RequestMode::explicit_table) {
        std::map<std::vector<int>, int> seen;
        Accumulator sum;
        for (size_t e = 0; e < inst.table.size(); ++e) {
            const auto& [tuple, p] = inst.table[e];
            int ei = static_cast<int>(e);
            if (static_cast<int>(tuple.size()) != inst.n) {
                add(r, "table-arity", -1, {ei}, static_cast<double>(tuple.size()),
                    "request_table entry " + std::to_string(e) + " has arity " +
                        std::to_string(tuple.size()) + ", expected " + std::to_string(inst.n));
                continue;
            }
            for (int x : tuple)
                if (x < 0 || x >= inst.size())
                    add(r, "table-index", -1, {ei, x}, x,
                        "request_table entry " + std::to_string(e) + " references point " +
                            std::to_string(x) + " out of range");
            if (auto [it, fresh] = seen.emplace(tuple, ei); !fresh)
                add(r, "table-duplicate", -1, {it->second, ei}, 0.0,
                    "request_table entries " + std::to_string(it->second) + " and " +
                        std::to_string(e) + " repeat the same tuple");
            if (!(p >= 0.0))
                add(r, "table-negative", -1, {ei}, p,
                    "request_table entry " + std::to_string(e) + " has probability " +
                        std::to_string(p));
            sum.add(p);
        }
        double s = sum.value();
        if (!(std::abs(s - 1.0) <= kPmfSlack))
            add(r, "table-sum", -1, {}, s,
                "request_table probabilities sum to " + std::to_string(s) + ", expected 1");
    }
    return r;
}

ValidationReport validate(const Instance& inst) {
    return std::visit([](const auto& v) { return validate(v); }, inst);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct Coords {
    std::vector<double> x, y;
};

Coords draw_unit_square(std::mt19937_64& gen, int n) {
    Coords c;
    c.x.resize(n);
    c.y.resize(n);
    for (int i = 0; i < n; ++i) {
        c.x[i] = uniform01(gen);
        c.y[i] = uniform01(gen);
    }
    return c;
}

Matrix euclidean_matrix(const Coords& c, double scale) {
    int n = static_cast<int>(c.x.size());
    Matrix d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = scale * std::hypot(c.x[i] - c.x[j], c.y[i] - c.y[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    return d;
}

std::vector<double> skewed_pmf(std::mt19937_64& gen, int n, double skew) {
    std::vector<double> w(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        w[i] = uniform01(gen);
        total += w[i];
    }
    std::vector<double> pmf(n);
    for (int i = 0; i < n; ++i) pmf[i] = (1.0 - skew) / n + skew * (w[i] / total);
    return pmf;
}

std::vector<std::string> default_labels(int n) {
    std::vector<std::string> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = "s" + std::to_string(i);
    return labels;
}

void check_gen_args(int num_points, int k, double skew) {
    if (num_points < 1) throw Error("num_points must be >= 1");
    if (k < 1) throw Error("k must be >= 1");
    if (!(skew >= 0.0 && skew <= 1.0)) throw Error("skew must lie in [0,1]");
}

}  // namespace

MetricInstance random_euclidean_instance(std::uint64_t seed, int num_points, int k, double skew) {
    check_gen_args(num_points, k, skew);
    std::mt19937_64 gen(seed);
    MetricInstance inst;
    inst.points = default_labels(num_points);
    Coords c = draw_unit_square(gen, num_points);
    inst.dist = euclidean_matrix(c, 1.0);
    inst.pmf = skewed_pmf(gen, num_points, skew);
    inst.k = k;
    return inst;
}

ServerDependentInstance random_server_dependent_instance(std::uint64_t seed, int num_points,
                                                         int k, double skew) {
    check_gen_args(num_points, k, skew);
    std::mt19937_64 gen(seed);
    ServerDependentInstance inst;
    inst.points = default_labels(num_points);
    Coords c = draw_unit_square(gen, num_points);
    inst.pmf = skewed_pmf(gen, num_points, skew);
    inst.dists.reserve(k);
    inst.proc_costs.reserve(k);
    for (int u = 0; u < k; ++u) {
        double scale = 0.5 + 1.5 * uniform01(gen);  // per-server speed factor in [0.5, 2]
        inst.dists.push_back(euclidean_matrix(c, scale));
        std::vector<double> costs(num_points);
        for (int s = 0; s < num_points; ++s) costs[s] = uniform01(gen);
        inst.proc_costs.push_back(std::move(costs));
    }
    return inst;
}

MultiRequestInstance random_multi_request_instance(std::uint64_t seed, int num_points, int k,
                                                   double skew, int n) {
    if (n < 1 || n > k) throw Error("n must satisfy 1 <= n <= k");
    MultiRequestInstance inst;
    inst.base = random_euclidean_instance(seed, num_points, k, skew);
    inst.n = n;
    inst.mode = RequestMode::iid_product;
    return inst;
}

// ---------------------------------------------------------------------------
// JSON round trips

namespace {

const json& require(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(std::string("missing field \"") + field + "\"");
    return *it;
}

double finite_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError("field \"" + where + "\" must be a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError("field \"" + where + "\" is not finite");
    return v;
}

std::vector<double> number_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError("field \"" + where + "\" must be an array");
    std::vector<double> v;
    v.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        v.push_back(finite_number(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

Matrix number_matrix(const json& j, const std::string& where, size_t n) {
    if (!j.is_array() || j.size() != n)
        throw ParseError("field \"" + where + "\" must be a " + std::to_string(n) + "x" +
                         std::to_string(n) + " matrix");
    Matrix m;
    m.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        auto row = number_vector(j[i], where + "[" + std::to_string(i) + "]");
        if (row.size() != n)
            throw ParseError("field \"" + where + "[" + std::to_string(i) +
                             "]\" has wrong length");
        m.push_back(std::move(row));
    }
    return m;
}

std::vector<std::string> parse_points(const json& j) {
    const json& pts = require(j, "points");
    if (!pts.is_array() || pts.empty()) throw ParseError("field \"points\" must be a non-empty array");
    std::vector<std::string> points;
    points.reserve(pts.size());
    for (const auto& p : pts) {
        if (!p.is_string()) throw ParseError("field \"points\" must contain strings");
        points.push_back(p.get<std::string>());
    }
    return points;
}

int parse_positive_int(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number_integer())
        throw ParseError(std::string("field \"") + field + "\" must be an integer");
    long long x = v.get<long long>();
    if (x < 1 || x > std::numeric_limits<int>::max())
        throw ParseError(std::string("field \"") + field + "\" must be a positive integer");
    return static_cast<int>(x);
}

MetricInstance parse_metric_fields(const json& j) {
    MetricInstance inst;
    inst.points = parse_points(j);
    size_t n = inst.points.size();
    inst.dist = number_matrix(require(j, "dist"), "dist", n);
    inst.pmf = number_vector(require(j, "pmf"), "pmf");
    if (inst.pmf.size() != n) throw ParseError("field \"pmf\" has wrong length");
    inst.k = parse_positive_int(j, "k");
    return inst;
}

Instance parse_document(const json& j) {
    if (!j.is_object()) throw ParseError("instance document must be a JSON object");
    const json& type = require(j, "type");
    if (!type.is_string()) throw ParseError("field \"type\" must be a string");
    std::string t = type.get<std::string>();

    if (t == "metric") return parse_metric_fields(j);

    if (t == "server-dependent") {
        ServerDependentInstance inst;
        inst.points = parse_points(j);
        size_t n = inst.points.size();
        const json& dists = require(j, "dists");
        if (!dists.is_array() || dists.empty())
            throw ParseError("field \"dists\" must be a non-empty array of matrices");
        for (size_t u = 0; u < dists.size(); ++u)
            inst.dists.push_back(number_matrix(dists[u], "dists[" + std::to_string(u) + "]", n));
        const json& costs = require(j, "proc_costs");
        if (!costs.is_array() || costs.size() != dists.size())
            throw ParseError("field \"proc_costs\" must have one vector per server");
        for (size_t u = 0; u < costs.size(); ++u) {
            auto v = number_vector(costs[u], "proc_costs[" + std::to_string(u) + "]");
            if (v.size() != n)
                throw ParseError("field \"proc_costs[" + std::to_string(u) +
                                 "]\" has wrong length");
            inst.proc_costs.push_back(std::move(v));
        }
        inst.pmf = number_vector(require(j, "pmf"), "pmf");
        if (inst.pmf.size() != n) throw ParseError("field \"pmf\" has wrong length");
        if (auto it = j.find("k"); it != j.end()) {
            if (!it->is_number_integer() ||
                it->get<long long>() != static_cast<long long>(inst.dists.size()))
                throw ParseError("field \"k\" disagrees with the number of per-server metrics");
        }
        return inst;
    }

    if (t == "multi-request") {
        MultiRequestInstance inst;
        inst.base = parse_metric_fields(j);
        inst.n = parse_positive_int(j, "n");
        bool has_table = j.contains("request_table");
        bool has_mode = j.contains("request_mode");
        if (has_table == has_mode)
            throw ParseError(
                "multi-request document needs exactly one of \"request_table\" or "
                "\"request_mode\"");
        if (has_mode) {
            if (!j["request_mode"].is_string() || j["request_mode"] != "iid-product")
                throw ParseError("field \"request_mode\" must be \"iid-product\"");
            inst.mode = RequestMode::iid_product;
        } else {
            inst.mode = RequestMode::explicit_table;
            const json& table = j["request_table"];
            if (!table.is_array()) throw ParseError("field \"request_table\" must be an array");
            for (size_t e = 0; e < table.size(); ++e) {
                const json& entry = table[e];
                std::string where = "request_table[" + std::to_string(e) + "]";
                if (!entry.is_object()) throw ParseError("field \"" + where + "\" must be an object");
                const json& tup = require(entry, "tuple");
                if (!tup.is_array()) throw ParseError("field \"" + where + ".tuple\" must be an array");
                std::vector<int> tuple;
                for (const auto& x : tup) {
                    if (!x.is_number_integer())
                        throw ParseError("field \"" + where + ".tuple\" must contain integers");
                    long long v = x.get<long long>();
                    if (v < 0 || v >= inst.base.size())
                        throw ParseError("field \"" + where + ".tuple\" references point " +
                                         std::to_string(v) + " out of range");
                    tuple.push_back(static_cast<int>(v));
                }
                double p = finite_number(require(entry, "p"), where + ".p");
                inst.table.emplace_back(std::move(tuple), p);
            }
        }
        return inst;
    }

    throw ParseError("unknown instance type \"" + t + "\"");
}

ordered_json dump_metric_fields(const MetricInstance& inst) {
    ordered_json j;
    j["type"] = "metric";
    j["points"] = inst.points;
    j["dist"] = inst.dist;
    j["pmf"] = inst.pmf;
    j["k"] = inst.k;
    return j;
}

}  // namespace

Instance parse_instance(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("JSON syntax error: ") + e.what());
    }
    return parse_document(j);
}

Instance load_instance(const std::string& text) {
    Instance inst = parse_instance(text);
    ValidationReport report = validate(inst);
    if (!report.ok()) throw ValidationError(std::move(report));
    return inst;
}

std::string save_instance(const MetricInstance& inst) {
    return dump_metric_fields(inst).dump();
}

std::string save_instance(const ServerDependentInstance& inst) {
    ordered_json j;
    j["type"] = "server-dependent";
    j["points"] = inst.points;
    j["dists"] = inst.dists;
    j["proc_costs"] = inst.proc_costs;
    j["pmf"] = inst.pmf;
    j["k"] = inst.k();
    return j.dump();
}

std::string save_instance(const MultiRequestInstance& inst) {
    ordered_json j = dump_metric_fields(inst.base);
    j["type"] = "multi-request";
    j["n"] = inst.n;
    if (inst.mode == RequestMode::iid_product) {
        j["request_mode"] = "iid-product";
    } else {
        ordered_json table = ordered_json::array();
        for (const auto& [tuple, p] : inst.table) {
            ordered_json entry;
            entry["tuple"] = tuple;
            entry["p"] = p;
            table.push_back(std::move(entry));
        }
        j["request_table"] = std::move(table);
    }
    return j.dump();
}

std::string save_instance(const Instance& inst) {
    return std::visit([](const auto& v) { return save_instance(v); }, inst);
}

std::uint64_t instance_digest(const Instance& inst) {
    return fnv1a64(save_instance(inst));
}

int instance_num_points(const Instance& inst) {
    return std::visit([](const auto& v) { return v.size(); }, inst);
}

int instance_k(const Instance& inst) {
    if (const auto* m = std::get_if<MetricInstance>(&inst)) return m->k;
    if (const auto* s = std::get_if<ServerDependentInstance>(&inst)) return s->k();
    return std::get<MultiRequestInstance>(inst).k();
}

TupleDistribution request_distribution(const MultiRequestInstance& inst) {
    TupleDistribution d;
    d.n = inst.n;
    d.num_points = inst.size();
    if (inst.mode == RequestMode::explicit_table) {
        std::vector<std::pair<std::vector<int>, double>> table = inst.table;
        std::sort(table.begin(), table.end());
        Accumulator total;
        for (const auto& [tuple, p] : table) total.add(p);
        double t = total.value();
        if (!(t > 0.0)) throw Error("request table has no positive probability");
        for (auto& [tuple, p] : table) {
            if (p <= 0.0) continue;
            d.tuples.push_back(tuple);
            d.probs.push_back(p / t);
        }
        return d;
    }
    // iid product over the base pmf, tuples in lexicographic order
    int n_points = inst.size();
    double count = std::pow(static_cast<double>(n_points), inst.n);
    if (count > 2e6)
        throw TooLargeError("request tuple space has " + std::to_string(count) +
                                " tuples (limit 2000000)",
                            static_cast<std::uint64_t>(count), 2000000);
    Accumulator total;
    for (double p : inst.base.pmf) total.add(p);
    double t = total.value();
    std::vector<double> norm(inst.base.pmf);
    for (double& p : norm) p /= t;
    std::vector<int> tuple(inst.n, 0);
    while (true) {
        double p = 1.0;
        for (int x : tuple) p *= norm[x];
        if (p > 0.0) {
            d.tuples.push_back(tuple);
            d.probs.push_back(p);
        }
        int pos = inst.n - 1;
        while (pos >= 0 && tuple[pos] == n_points - 1) tuple[pos--] = 0;
        if (pos < 0) break;
        ++tuple[pos];
    }
    return d;
}

}  // namespace kserver

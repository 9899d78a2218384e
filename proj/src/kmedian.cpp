#include "kmedian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "matching.hpp"

namespace kserver {

namespace {

void check_median_indices(int num_points, std::span<const int> medians) {
    if (medians.empty()) throw Error("median set is empty");
    for (int m : medians)
        if (m < 0 || m >= num_points)
            throw Error("median index " + std::to_string(m) + " out of range");
}

// C(n, k) capped at `cap` + 1 to avoid overflow.
std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) {
        if (c > cap) return cap + 1;
        c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return std::min<std::uint64_t>(c, cap + 1);
}

std::uint64_t power_capped(int base, int exp, std::uint64_t cap) {
    std::uint64_t p = 1;
    for (int i = 0; i < exp; ++i) {
        if (p > cap / static_cast<std::uint64_t>(base)) return cap + 1;
        p *= static_cast<std::uint64_t>(base);
    }
    return p;
}

std::string approx_count(double c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", c);
    return buf;
}

double binomial_approx(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

template <class F>
void for_each_combination(int n, int k, F&& fn) {
    std::vector<int> c(k);
    std::iota(c.begin(), c.end(), 0);
    while (true) {
        fn(std::span<const int>(c));
        int pos = k - 1;
        while (pos >= 0 && c[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++c[pos];
        for (int i = pos + 1; i < k; ++i) c[i] = c[i - 1] + 1;
    }
}

// sorted k-tuples over 0..n-1 with repetition, lexicographic order
template <class F>
void for_each_multiset(int n, int k, F&& fn) {
    std::vector<int> c(k, 0);
    while (true) {
        fn(std::span<const int>(c));
        int pos = k - 1;
        while (pos >= 0 && c[pos] == n - 1) --pos;
        if (pos < 0) break;
        int v = c[pos] + 1;
        for (int i = pos; i < k; ++i) c[i] = v;
    }
}

}  // namespace

double kmedian_objective(const MetricInstance& inst, std::span<const int> medians) {
    check_median_indices(inst.size(), medians);
    Accumulator obj;
    for (int s = 0; s < inst.size(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (int m : medians) best = std::min(best, inst.dist[m][s]);
        obj.add(inst.pmf[s] * best);
    }
    return obj.value();
}

double generalized_kmedian_objective(const ServerDependentInstance& inst,
                                     std::span<const int> medians) {
    check_median_indices(inst.size(), medians);
    if (static_cast<int>(medians.size()) != inst.k())
        throw Error("generalized objective needs exactly one median per server");
    Accumulator obj;
    for (int s = 0; s < inst.size(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (int u = 0; u < inst.k(); ++u)
            best = std::min(best, inst.dists[u][medians[u]][s] + inst.proc_costs[u][s]);
        obj.add(inst.pmf[s] * best);
    }
    return obj.value();
}

double multi_kmedian_objective(const MultiRequestInstance& inst, std::span<const int> medians) {
    check_median_indices(inst.size(), medians);
    TupleDistribution dist = request_distribution(inst);
    const int k = static_cast<int>(medians.size());
    Accumulator obj;
    std::vector<std::vector<double>> cost(inst.n, std::vector<double>(k, 0.0));
    for (size_t t = 0; t < dist.tuples.size(); ++t) {
        const auto& tuple = dist.tuples[t];
        for (int j = 0; j < inst.n; ++j)
            for (int i = 0; i < k; ++i) cost[j][i] = inst.base.dist[medians[i]][tuple[j]];
        obj.add(dist.probs[t] * assignment_value(cost));
    }
    return obj.value();
}

MedianSet kmedian_exact(const MetricInstance& inst) {
    const int n = inst.size();
    const int k = inst.k;
    MedianSet best;

    if (k >= n) {
        // every point can host a median; pad with repeats of point 0
        best.medians.assign(k - n, 0);
        for (int i = 0; i < n; ++i) best.medians.push_back(i);
        std::sort(best.medians.begin(), best.medians.end());
        best.objective = kmedian_objective(inst, best.medians);
        return best;
    }

    std::uint64_t count = binomial_capped(n, k, kEnumerationLimit);
    if (count > kEnumerationLimit)
        throw TooLargeError("k-median enumeration needs " + approx_count(binomial_approx(n, k)) +
                                " candidate subsets, above the limit of " +
                                std::to_string(kEnumerationLimit),
                            count, kEnumerationLimit);

    double best_obj = std::numeric_limits<double>::infinity();
    for_each_combination(n, k, [&](std::span<const int> medians) {
        double obj = kmedian_objective(inst, medians);
        if (obj < best_obj) {
            best_obj = obj;
            best.medians.assign(medians.begin(), medians.end());
        }
    });
    best.objective = best_obj;
    return best;
}

MedianSet generalized_kmedian_exact(const ServerDependentInstance& inst) {
    const int n = inst.size();
    const int k = inst.k();
    std::uint64_t count = power_capped(n, k, kEnumerationLimit);
    if (count > kEnumerationLimit)
        throw TooLargeError("generalized k-median enumeration needs " +
                                approx_count(std::pow(double(n), k)) +
                                " ordered tuples, above the limit of " +
                                std::to_string(kEnumerationLimit),
                            count, kEnumerationLimit);

    MedianSet best;
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<int> tuple(k, 0);
    while (true) {
        double obj = generalized_kmedian_objective(inst, tuple);
        if (obj < best_obj) {
            best_obj = obj;
            best.medians = tuple;
        }
        int pos = k - 1;
        while (pos >= 0 && tuple[pos] == n - 1) tuple[pos--] = 0;
        if (pos < 0) break;
        ++tuple[pos];
    }
    best.objective = best_obj;
    return best;
}

MedianSet multi_kmedian_exact(const MultiRequestInstance& inst) {
    const int n = inst.size();
    const int k = inst.k();
    TupleDistribution dist = request_distribution(inst);

    // Repeated medians matter here: several requests can land on the same
    // point and want several servers stationed there. The objective is
    // symmetric in the median slots, so sorted tuples with repetition cover
    // the full tuple space.
    std::uint64_t tuples = binomial_capped(n + k - 1, k, kEnumerationLimit);
    std::uint64_t evals = tuples * static_cast<std::uint64_t>(dist.tuples.size());
    if (tuples > kEnumerationLimit || evals > kEnumerationLimit)
        throw TooLargeError("multi-request k-median enumeration needs " +
                                approx_count(binomial_approx(n + k - 1, k) *
                                             static_cast<double>(dist.tuples.size())) +
                                " assignment evaluations, above the limit of " +
                                std::to_string(kEnumerationLimit),
                            evals, kEnumerationLimit);

    MedianSet best;
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(inst.n, std::vector<double>(k, 0.0));
    for_each_multiset(n, k, [&](std::span<const int> medians) {
        Accumulator obj;
        for (size_t t = 0; t < dist.tuples.size(); ++t) {
            const auto& tuple = dist.tuples[t];
            for (int j = 0; j < inst.n; ++j)
                for (int i = 0; i < k; ++i) cost[j][i] = inst.base.dist[medians[i]][tuple[j]];
            obj.add(dist.probs[t] * assignment_value(cost));
        }
        double o = obj.value();
        if (o < best_obj) {
            best_obj = o;
            best.medians.assign(medians.begin(), medians.end());
        }
    });
    best.objective = best_obj;
    return best;
}

std::pair<MedianSet, ApproxReport> kmedian_local_search(const MetricInstance& inst, int swap_size,
                                                        double delta, std::uint64_t seed) {
    const int n = inst.size();
    const int k = inst.k;
    if (k > n) throw Error("local search requires k <= number of points");
    if (swap_size < 1 || swap_size > k) throw Error("swap_size must lie in [1, k]");
    if (!(delta >= 0.0)) throw Error("delta must be >= 0");

    // Greedy seeding: repeatedly add the point that most decreases the
    // objective; a seeded shuffle decides ties.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(stream_seed(seed, 0));
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(gen() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }

    std::vector<int> sel;
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<char> in_sel(n, 0);
    for (int step = 0; step < k; ++step) {
        int best_c = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int c : order) {
            if (in_sel[c]) continue;
            Accumulator obj;
            for (int s = 0; s < n; ++s)
                obj.add(inst.pmf[s] * std::min(nearest[s], inst.dist[c][s]));
            double o = obj.value();
            if (o < best_obj) {
                best_obj = o;
                best_c = c;
            }
        }
        sel.push_back(best_c);
        in_sel[best_c] = 1;
        for (int s = 0; s < n; ++s) nearest[s] = std::min(nearest[s], inst.dist[best_c][s]);
    }
    std::sort(sel.begin(), sel.end());
    double cur_obj = kmedian_objective(inst, sel);

    ApproxReport report;
    // First-improvement swap loop, smallest swaps first, deterministic order.
    bool improved = true;
    while (improved) {
        ++report.iterations;
        improved = false;
        for (int q = 1; q <= swap_size && !improved; ++q) {
            std::vector<int> outside;
            for (int c = 0; c < n; ++c)
                if (!in_sel[c]) outside.push_back(c);
            if (static_cast<int>(outside.size()) < q) continue;

            // enumerate q-subsets of sel and of its complement in lex order
            auto run = [&]() {
                std::vector<int> oi(q);
                std::iota(oi.begin(), oi.end(), 0);
                while (true) {
                    std::vector<int> ii(q);
                    std::iota(ii.begin(), ii.end(), 0);
                    while (true) {
                        std::vector<int> cand;
                        cand.reserve(k);
                        std::vector<char> dropped(k, 0);
                        for (int t = 0; t < q; ++t) dropped[oi[t]] = 1;
                        for (int t = 0; t < k; ++t)
                            if (!dropped[t]) cand.push_back(sel[t]);
                        for (int t = 0; t < q; ++t) cand.push_back(outside[ii[t]]);
                        std::sort(cand.begin(), cand.end());
                        double o = kmedian_objective(inst, cand);
                        if (o < (1.0 - delta) * cur_obj) {
                            sel = cand;
                            cur_obj = o;
                            std::fill(in_sel.begin(), in_sel.end(), 0);
                            for (int c : sel) in_sel[c] = 1;
                            ++report.swaps_used;
                            return true;
                        }
                        int pos = q - 1;
                        int lim = static_cast<int>(outside.size());
                        while (pos >= 0 && ii[pos] == lim - q + pos) --pos;
                        if (pos < 0) break;
                        ++ii[pos];
                        for (int t = pos + 1; t < q; ++t) ii[t] = ii[t - 1] + 1;
                    }
                    int pos = q - 1;
                    while (pos >= 0 && oi[pos] == k - q + pos) --pos;
                    if (pos < 0) break;
                    ++oi[pos];
                    for (int t = pos + 1; t < q; ++t) oi[t] = oi[t - 1] + 1;
                }
                return false;
            };
            improved = run();
        }
    }

    MedianSet result;
    result.medians = sel;
    result.objective = cur_obj;
    report.heuristic_objective = cur_obj;
    try {
        MedianSet exact = kmedian_exact(inst);
        report.exact_objective = exact.objective;
        if (exact.objective > 0.0)
            report.ratio = cur_obj / exact.objective;
        else if (cur_obj <= 0.0)
            report.ratio = 1.0;
    } catch (const TooLargeError&) {
        // exact comparison infeasible; report the heuristic value alone
    }
    return {std::move(result), std::move(report)};
}

}  // namespace kserver

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "policy.hpp"

using namespace kserver;

TEST_CASE("partition on the line instance") {
    MetricInstance inst = oracle::line3(2);
    std::vector<int> medians{0, 2};
    PartitionPolicy p = build_partition(inst, medians);
    // s1 is equidistant from both medians; the tie goes to the first server
    CHECK(p.cells[0] == std::vector<int>{0, 1});
    CHECK(p.cells[1] == std::vector<int>{2});
    CHECK(dispatch(p, 1) == 0);
    CHECK(dispatch(p, 2) == 1);
}

TEST_CASE("single server owns everything") {
    MetricInstance inst = oracle::line3(1);
    std::vector<int> medians{1};
    PartitionPolicy p = build_partition(inst, medians);
    CHECK(p.cells[0] == std::vector<int>{0, 1, 2});
    for (int s = 0; s < 3; ++s) CHECK(dispatch(p, s) == 0);
}

TEST_CASE("expensive server loses its cell") {
    ServerDependentInstance sd;
    sd.points = {"s0", "s1", "s2"};
    sd.dists = {oracle::line3(2).dist, oracle::line3(2).dist};
    sd.proc_costs = {{0, 0, 0}, {10, 10, 10}};
    sd.pmf = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::vector<int> medians{0, 2};
    PartitionPolicy p = build_partition(sd, medians);
    CHECK(p.cells[0] == std::vector<int>{0, 1, 2});
    CHECK(p.cells[1].empty());
}

TEST_CASE("partition invariants on random instances") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        MetricInstance inst = random_euclidean_instance(seed, 7, 3, 0.5);
        std::vector<int> medians{static_cast<int>(seed % 7), static_cast<int>((seed + 2) % 7),
                                 static_cast<int>((seed + 5) % 7)};
        PartitionPolicy p = build_partition(inst, medians);
        CAPTURE(seed);

        // cells are disjoint and exhaustive
        std::set<int> covered;
        size_t total = 0;
        for (const auto& cell : p.cells) {
            covered.insert(cell.begin(), cell.end());
            total += cell.size();
        }
        CHECK(total == 7);
        CHECK(covered.size() == 7);

        // membership only where the median is weakly nearest, lowest index on ties
        for (int s = 0; s < 7; ++s) {
            int owner = dispatch(p, s);
            double own = inst.dist[medians[owner]][s];
            for (int j = 0; j < 3; ++j) {
                CHECK(own <= inst.dist[medians[j]][s] + 1e-15);
                if (j < owner) CHECK(inst.dist[medians[j]][s] > own);
            }
        }
    }
}

TEST_CASE("median owns its own point and duplicates fall to the lower index") {
    MetricInstance inst = random_euclidean_instance(4, 6, 3, 0.0);
    std::vector<int> medians{2, 2, 5};  // duplicate median
    PartitionPolicy p = build_partition(inst, medians);
    CHECK(dispatch(p, 2) == 0);
    CHECK(dispatch(p, 5) == 2);
    CHECK(p.cells[1].empty());
}

TEST_CASE("invalid medians rejected") {
    MetricInstance inst = oracle::line3(2);
    std::vector<int> bad{0, 9};
    CHECK_THROWS_AS(build_partition(inst, bad), Error);
}

TEST_CASE("multi dispatch") {
    MultiRequestInstance mi;
    mi.base = oracle::line3(2);
    mi.n = 2;

    SUBCASE("requests on the medians match identically") {
        MultiDispatchPolicy p = build_multi_dispatch(mi, std::vector<int>{0, 2});
        std::vector<int> req{0, 2};
        CHECK(dispatch_multi(p, req) == std::vector<int>{0, 1});
        std::vector<int> swapped{2, 0};
        CHECK(dispatch_multi(p, swapped) == std::vector<int>{1, 0});
    }
    SUBCASE("tied assignments resolve lexicographically") {
        MultiDispatchPolicy p = build_multi_dispatch(mi, std::vector<int>{0, 2});
        std::vector<int> req{1, 1};  // both assignments cost 2
        CHECK(dispatch_multi(p, req) == std::vector<int>{0, 1});
    }
    SUBCASE("n=1 equals the nearest median with the lowest index on ties") {
        MultiRequestInstance single;
        single.base = oracle::line3(2);
        single.n = 1;
        MultiDispatchPolicy p = build_multi_dispatch(single, std::vector<int>{0, 2});
        PartitionPolicy part = build_partition(single.base, std::vector<int>{0, 2});
        for (int s = 0; s < 3; ++s) {
            std::vector<int> req{s};
            CHECK(dispatch_multi(p, req)[0] == dispatch(part, s));
        }
    }
    SUBCASE("more requests than servers rejected") {
        MultiDispatchPolicy p = build_multi_dispatch(mi, std::vector<int>{0, 2});
        std::vector<int> req{0, 1, 2};
        CHECK_THROWS_AS(dispatch_multi(p, req), Error);
    }
}

TEST_CASE("multi dispatch equals the enumeration oracle") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 500; ++trial) {
        int points = 4 + static_cast<int>(gen() % 4);
        int k = 2 + static_cast<int>(gen() % 4);  // up to 5
        int n = 1 + static_cast<int>(gen() % std::min(3, k));
        MultiRequestInstance mi =
            random_multi_request_instance(gen(), points, k, 0.5, n);
        std::vector<int> medians(k);
        for (int i = 0; i < k; ++i) medians[i] = static_cast<int>(gen() % points);
        MultiDispatchPolicy p = build_multi_dispatch(mi, medians);

        std::vector<int> req(n);
        for (int j = 0; j < n; ++j) req[j] = static_cast<int>(gen() % points);
        std::vector<std::vector<double>> cost(n, std::vector<double>(k));
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < k; ++i) cost[j][i] = mi.base.dist[medians[i]][req[j]];
        auto [bm, bv] = oracle::brute_assignment(cost);
        CAPTURE(trial);
        CHECK(dispatch_multi(p, req) == bm);
    }
}

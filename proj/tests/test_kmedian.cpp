#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "kmedian.hpp"
#include "matching.hpp"
#include "oracles.hpp"

using namespace kserver;

TEST_CASE("objective on the line instance") {
    MetricInstance inst = oracle::line3(2);
    std::vector<int> m02{0, 2};
    CHECK(kmedian_objective(inst, m02) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(kmedian_objective(inst, m02) ==
          doctest::Approx(oracle::objective_of(inst, m02)).epsilon(1e-12));
    std::vector<int> m1{1};
    CHECK(kmedian_objective(inst, m1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
    std::vector<int> all{0, 1, 2};
    CHECK(kmedian_objective(inst, all) == doctest::Approx(0.0));
    std::vector<int> reversed{2, 0};
    CHECK(kmedian_objective(inst, reversed) == kmedian_objective(inst, m02));  // order-free
    std::vector<int> bad{7};
    CHECK_THROWS_AS(kmedian_objective(inst, bad), Error);
}

TEST_CASE("exact solver on the line instance") {
    SUBCASE("k=2 tie-breaks lexicographically") {
        MedianSet s = kmedian_exact(oracle::line3(2));
        CHECK(s.medians == std::vector<int>{0, 1});  // all three pairs score 1/3
        CHECK(s.objective == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    SUBCASE("k=1 picks the middle") {
        MedianSet s = kmedian_exact(oracle::line3(1));
        CHECK(s.medians == std::vector<int>{1});
        CHECK(s.objective == doctest::Approx(2.0 / 3).epsilon(1e-12));
    }
    SUBCASE("k = |S| is free") {
        MedianSet s = kmedian_exact(oracle::line3(3));
        CHECK(s.objective == doctest::Approx(0.0));
    }
    SUBCASE("k above |S| pads with repeats") {
        MedianSet s = kmedian_exact(oracle::line3(5));
        CHECK(s.medians == std::vector<int>{0, 0, 0, 1, 2});
        CHECK(s.objective == doctest::Approx(0.0));
    }
}

TEST_CASE("exact solver agrees with brute enumeration") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        MetricInstance inst = random_euclidean_instance(seed, 7, 1 + static_cast<int>(seed % 3),
                                                        static_cast<double>(seed % 5) / 4.0);
        auto [medians, obj] = oracle::brute_kmedian(inst);
        MedianSet s = kmedian_exact(inst);
        CAPTURE(seed);
        CHECK(s.medians == medians);
        CHECK(s.objective == doctest::Approx(obj).epsilon(1e-12));
    }
}

TEST_CASE("enumeration guard reports the count") {
    MetricInstance inst = random_euclidean_instance(1, 60, 20, 0.0);
    CHECK_THROWS_AS(kmedian_exact(inst), TooLargeError);
}

TEST_CASE("objective monotone in added medians") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        MetricInstance inst = random_euclidean_instance(seed, 8, 2, 0.5);
        std::vector<int> medians{static_cast<int>(seed % 8)};
        double prev = kmedian_objective(inst, medians);
        for (int extra = 0; extra < 8; ++extra) {
            if (std::find(medians.begin(), medians.end(), extra) != medians.end()) continue;
            medians.push_back(extra);
            double next = kmedian_objective(inst, medians);
            CHECK(next <= prev + 1e-12);
            prev = next;
        }
    }
}

TEST_CASE("relabeling points relabels the solution") {
    MetricInstance inst = random_euclidean_instance(3, 6, 2, 0.75);
    // relabel by the reverse permutation
    int n = inst.size();
    MetricInstance rev = inst;
    for (int i = 0; i < n; ++i) {
        rev.pmf[i] = inst.pmf[n - 1 - i];
        for (int j = 0; j < n; ++j) rev.dist[i][j] = inst.dist[n - 1 - i][n - 1 - j];
    }
    MedianSet a = kmedian_exact(inst);
    MedianSet b = kmedian_exact(rev);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
}

TEST_CASE("local search") {
    SUBCASE("line instance reaches the optimum") {
        auto [s, rep] = kmedian_local_search(oracle::line3(2), 1, 0.0, 5);
        CHECK(s.objective == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(rep.exact_objective.has_value());
        CHECK(*rep.ratio == doctest::Approx(1.0));
    }
    SUBCASE("k = |S| is immediately optimal") {
        auto [s, rep] = kmedian_local_search(oracle::line3(3), 1, 0.0, 5);
        CHECK(s.objective == doctest::Approx(0.0));
        CHECK(rep.swaps_used == 0);
    }
    SUBCASE("deterministic for a fixed seed") {
        auto [a, ra] = kmedian_local_search(random_euclidean_instance(9, 8, 3, 0.5), 1, 0.0, 17);
        auto [b, rb] = kmedian_local_search(random_euclidean_instance(9, 8, 3, 0.5), 1, 0.0, 17);
        CHECK(a.medians == b.medians);
        CHECK(a.objective == b.objective);
        CHECK(ra.iterations == rb.iterations);
    }
    SUBCASE("single-swap ratio within the 3+2/p guarantee on a batch") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            MetricInstance inst =
                random_euclidean_instance(seed, 8, 3, static_cast<double>(seed % 5) / 4.0);
            auto [s, rep] = kmedian_local_search(inst, 1, 0.0, seed);
            REQUIRE(rep.exact_objective.has_value());
            CHECK(s.objective >= *rep.exact_objective - 1e-12);
            REQUIRE(rep.ratio.has_value());
            CAPTURE(seed);
            CHECK(*rep.ratio >= 1.0 - 1e-12);
            CHECK(*rep.ratio <= 5.0 + 1e-9);
        }
    }
    SUBCASE("argument checks") {
        CHECK_THROWS_AS(kmedian_local_search(oracle::line3(2), 0, 0.0, 1), Error);
        CHECK_THROWS_AS(kmedian_local_search(oracle::line3(2), 3, 0.0, 1), Error);
        CHECK_THROWS_AS(kmedian_local_search(oracle::line3(4), 1, 0.0, 1), Error);
    }
}

TEST_CASE("generalized solver") {
    SUBCASE("identical metrics and zero costs reduce to the base problem") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            MetricInstance base = random_euclidean_instance(seed, 5, 2, 0.5);
            ServerDependentInstance sd;
            sd.points = base.points;
            sd.dists = {base.dist, base.dist};
            sd.proc_costs = {std::vector<double>(5, 0.0), std::vector<double>(5, 0.0)};
            sd.pmf = base.pmf;
            MedianSet g = generalized_kmedian_exact(sd);
            MedianSet b = kmedian_exact(base);
            CAPTURE(seed);
            CHECK(g.objective == b.objective);  // identical arithmetic, bitwise equal
            std::vector<int> sorted = g.medians;
            std::sort(sorted.begin(), sorted.end());
            CHECK(sorted == b.medians);
        }
    }
    SUBCASE("constant processing cost shifts the k=1 objective") {
        MetricInstance base = oracle::line3(1);
        ServerDependentInstance sd;
        sd.points = base.points;
        sd.dists = {base.dist};
        sd.proc_costs = {{0.25, 0.25, 0.25}};
        sd.pmf = base.pmf;
        MedianSet g = generalized_kmedian_exact(sd);
        CHECK(g.objective == doctest::Approx(2.0 / 3 + 0.25).epsilon(1e-12));
    }
    SUBCASE("expensive server is priced out") {
        MetricInstance base = oracle::line3(2);
        ServerDependentInstance sd;
        sd.points = base.points;
        sd.dists = {base.dist, base.dist};
        sd.proc_costs = {{0, 0, 0}, {10, 10, 10}};
        sd.pmf = base.pmf;
        MedianSet g = generalized_kmedian_exact(sd);
        CHECK(g.objective == doctest::Approx(2.0 / 3).epsilon(1e-12));
        CHECK(g.medians[0] == 1);  // server 1 sits at the middle, server 2 never used
        auto [bm, bo] = oracle::brute_generalized_kmedian(sd);
        CHECK(g.medians == bm);
        CHECK(g.objective == doctest::Approx(bo).epsilon(1e-12));
    }
    SUBCASE("agrees with brute enumeration on random instances") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            ServerDependentInstance sd = random_server_dependent_instance(seed, 5, 2, 0.5);
            auto [bm, bo] = oracle::brute_generalized_kmedian(sd);
            MedianSet g = generalized_kmedian_exact(sd);
            CAPTURE(seed);
            CHECK(g.medians == bm);
            CHECK(g.objective == doctest::Approx(bo).epsilon(1e-12));
        }
    }
}

TEST_CASE("multi-request solver") {
    SUBCASE("n=1 reduces to the base problem") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            MultiRequestInstance mi = random_multi_request_instance(seed, 5, 2, 0.5, 1);
            MedianSet m = multi_kmedian_exact(mi);
            MedianSet b = kmedian_exact(mi.base);
            CAPTURE(seed);
            CHECK(m.medians == b.medians);
            CHECK(m.objective == doctest::Approx(b.objective).epsilon(1e-12));
        }
    }
    SUBCASE("point-mass tuple on the medians costs nothing") {
        MultiRequestInstance mi;
        mi.base = oracle::line3(2);
        mi.n = 2;
        mi.mode = RequestMode::explicit_table;
        mi.table = {{{0, 2}, 1.0}};
        MedianSet m = multi_kmedian_exact(mi);
        CHECK(m.objective == doctest::Approx(0.0));
        CHECK(m.medians == std::vector<int>{0, 2});
    }
    SUBCASE("uniform iid pair requests on the line") {
        MultiRequestInstance mi;
        mi.base = oracle::line3(2);
        mi.n = 2;
        MedianSet m = multi_kmedian_exact(mi);
        auto [bm, bo] = oracle::brute_multi_kmedian(mi);
        CHECK(m.medians == bm);
        CHECK(m.medians == std::vector<int>{0, 2});
        CHECK(m.objective == doctest::Approx(bo).epsilon(1e-12));
        CHECK(m.objective == doctest::Approx(10.0 / 9).epsilon(1e-12));
    }
    SUBCASE("agrees with brute enumeration on random instances") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            MultiRequestInstance mi = random_multi_request_instance(seed, 4, 3, 0.5, 2);
            auto [bm, bo] = oracle::brute_multi_kmedian(mi);
            MedianSet m = multi_kmedian_exact(mi);
            CAPTURE(seed);
            CHECK(m.medians == bm);
            CHECK(m.objective == doctest::Approx(bo).epsilon(1e-12));
        }
    }
}

TEST_CASE("assignment solver equals brute enumeration") {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 1 + static_cast<int>(gen() % 4);
        int k = n + static_cast<int>(gen() % 3);
        std::vector<std::vector<double>> cost(n, std::vector<double>(k));
        for (auto& row : cost)
            for (double& c : row)
                c = (gen() % 8 == 0) ? 1.0 : uniform01(gen);  // sprinkle exact ties
        auto [bm, bv] = oracle::brute_assignment(cost);
        AssignmentResult lex = min_cost_assignment_lex(cost);
        AssignmentResult any = min_cost_assignment(cost);
        CAPTURE(trial);
        CHECK(lex.row_to_col == bm);
        CHECK(lex.cost == doctest::Approx(bv).epsilon(1e-12));
        CHECK(any.cost == doctest::Approx(bv).epsilon(1e-12));
    }
}

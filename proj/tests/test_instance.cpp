#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "instance.hpp"
#include "oracles.hpp"

using namespace kserver;

TEST_CASE("line metric validates clean") {
    MetricInstance inst = oracle::line3(2);
    CHECK(validate(inst).ok());
}

TEST_CASE("each invariant has a targeted mutation") {
    SUBCASE("nonzero diagonal") {
        MetricInstance inst = oracle::line3(2);
        inst.dist[1][1] = 0.5;
        ValidationReport r = validate(inst);
        CHECK(r.count("diagonal") == 1);
        CHECK(!r.ok());
    }
    SUBCASE("asymmetry") {
        MetricInstance inst = oracle::line3(2);
        inst.dist[0][1] = 1.25;
        ValidationReport r = validate(inst);
        CHECK(r.count("asymmetry") == 1);
    }
    SUBCASE("triangle inequality") {
        MetricInstance inst = oracle::line3(2);
        inst.dist[0][2] = 5.0;
        inst.dist[2][0] = 5.0;
        ValidationReport r = validate(inst);
        REQUIRE(r.count("triangle") == 1);
        CHECK(r.entries.size() == 1);
        const Violation* v = nullptr;
        for (const auto& e : r.entries)
            if (e.kind == "triangle") v = &e;
        REQUIRE(v != nullptr);
        CHECK(v->indices == std::vector<int>{0, 1, 2});
        CHECK(v->magnitude == doctest::Approx(3.0));
    }
    SUBCASE("negative distance") {
        MetricInstance inst = oracle::line3(2);
        inst.dist[0][1] = -0.5;
        inst.dist[1][0] = -0.5;
        ValidationReport r = validate(inst);
        CHECK(r.count("negative-distance") == 1);
    }
    SUBCASE("negative pmf entry") {
        MetricInstance inst = oracle::line3(2);
        inst.pmf = {0.7, 0.5, -0.2};
        ValidationReport r = validate(inst);
        CHECK(r.count("pmf-negative") == 1);
    }
    SUBCASE("pmf sum off") {
        MetricInstance inst = oracle::line3(2);
        inst.pmf = {0.5, 0.5, 0.1};
        ValidationReport r = validate(inst);
        REQUIRE(r.count("pmf-sum") == 1);
        CHECK(r.entries.size() == 1);
        CHECK(r.entries[0].magnitude == doctest::Approx(1.1));
    }
    SUBCASE("bad k") {
        MetricInstance inst = oracle::line3(2);
        inst.k = 0;
        CHECK(validate(inst).count("bad-k") == 1);
    }
}

TEST_CASE("server-dependent validation covers per-server matrices") {
    ServerDependentInstance inst;
    inst.points = {"s0", "s1", "s2"};
    inst.dists = {oracle::line3(2).dist, oracle::line3(2).dist};
    inst.proc_costs = {{0, 0, 0}, {1, 1, 1}};
    inst.pmf = {0.25, 0.5, 0.25};
    CHECK(validate(inst).ok());

    SUBCASE("violation names the server") {
        inst.dists[1][0][2] = 9.0;
        inst.dists[1][2][0] = 9.0;
        ValidationReport r = validate(inst);
        REQUIRE(r.count("triangle") == 1);
        CHECK(r.entries[0].server == 1);
    }
    SUBCASE("negative processing cost") {
        inst.proc_costs[0][1] = -0.25;
        ValidationReport r = validate(inst);
        CHECK(r.count("negative-processing-cost") == 1);
    }
}

TEST_CASE("multi-request validation") {
    MultiRequestInstance inst;
    inst.base = oracle::line3(2);
    inst.n = 2;
    inst.mode = RequestMode::explicit_table;
    inst.table = {{{0, 1}, 0.5}, {{1, 2}, 0.5}};
    CHECK(validate(inst).ok());

    SUBCASE("n above k") {
        inst.n = 3;
        inst.table = {{{0, 1, 2}, 1.0}};
        CHECK(validate(inst).count("bad-n") == 1);
    }
    SUBCASE("table sum off") {
        inst.table = {{{0, 1}, 0.5}, {{1, 2}, 0.6}};
        CHECK(validate(inst).count("table-sum") == 1);
    }
    SUBCASE("negative table entry") {
        inst.table = {{{0, 1}, 1.2}, {{1, 2}, -0.2}};
        CHECK(validate(inst).count("table-negative") == 1);
    }
    SUBCASE("wrong arity") {
        inst.table = {{{0, 1, 2}, 1.0}};
        CHECK(validate(inst).count("table-arity") == 1);
    }
    SUBCASE("duplicate tuple") {
        inst.table = {{{0, 1}, 0.5}, {{0, 1}, 0.5}};
        CHECK(validate(inst).count("table-duplicate") == 1);
    }
    SUBCASE("index out of range") {
        inst.table = {{{0, 7}, 1.0}};
        CHECK(validate(inst).count("table-index") == 1);
    }
}

TEST_CASE("random euclidean generator") {
    SUBCASE("degenerate single point") {
        MetricInstance inst = random_euclidean_instance(1, 1, 1, 0.0);
        CHECK(inst.size() == 1);
        CHECK(inst.dist == Matrix{{0.0}});
        CHECK(inst.pmf == std::vector<double>{1.0});
    }
    SUBCASE("always valid") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            double skew = static_cast<double>(seed % 5) / 4.0;
            MetricInstance inst = random_euclidean_instance(seed, 6, 2, skew);
            CAPTURE(seed);
            CHECK(validate(inst).ok());
        }
    }
    SUBCASE("deterministic") {
        MetricInstance a = random_euclidean_instance(7, 6, 2, 0.0);
        MetricInstance b = random_euclidean_instance(7, 6, 2, 0.0);
        CHECK(save_instance(a) == save_instance(b));
    }
    SUBCASE("rejects zero points") {
        CHECK_THROWS_AS(random_euclidean_instance(1, 0, 1, 0.0), Error);
    }
    SUBCASE("uniform pmf at zero skew") {
        MetricInstance inst = random_euclidean_instance(3, 4, 2, 0.0);
        for (double p : inst.pmf) CHECK(p == doctest::Approx(0.25));
    }
}

TEST_CASE("variant generators validate clean") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(validate(random_server_dependent_instance(seed, 5, 2, 0.5)).ok());
        CHECK(validate(random_multi_request_instance(seed, 4, 3, 0.5, 2)).ok());
    }
}

TEST_CASE("save and load are inverse") {
    SUBCASE("base") {
        MetricInstance inst = random_euclidean_instance(11, 5, 2, 0.6);
        Instance back = load_instance(save_instance(inst));
        const auto& m = std::get<MetricInstance>(back);
        CHECK(m.points == inst.points);
        CHECK(m.dist == inst.dist);
        CHECK(m.pmf == inst.pmf);
        CHECK(m.k == inst.k);
        CHECK(save_instance(back) == save_instance(inst));
    }
    SUBCASE("server-dependent") {
        ServerDependentInstance inst = random_server_dependent_instance(12, 4, 2, 0.3);
        Instance back = load_instance(save_instance(inst));
        const auto& s = std::get<ServerDependentInstance>(back);
        CHECK(s.dists == inst.dists);
        CHECK(s.proc_costs == inst.proc_costs);
        CHECK(save_instance(back) == save_instance(inst));
    }
    SUBCASE("multi-request iid") {
        MultiRequestInstance inst = random_multi_request_instance(13, 4, 3, 0.2, 2);
        Instance back = load_instance(save_instance(inst));
        const auto& m = std::get<MultiRequestInstance>(back);
        CHECK(m.n == 2);
        CHECK(m.mode == RequestMode::iid_product);
        CHECK(save_instance(back) == save_instance(inst));
    }
    SUBCASE("multi-request explicit table") {
        MultiRequestInstance inst;
        inst.base = oracle::line3(2);
        inst.n = 2;
        inst.mode = RequestMode::explicit_table;
        inst.table = {{{0, 1}, 0.25}, {{2, 2}, 0.75}};
        Instance back = load_instance(save_instance(inst));
        const auto& m = std::get<MultiRequestInstance>(back);
        CHECK(m.table == inst.table);
        CHECK(save_instance(back) == save_instance(inst));
    }
    SUBCASE("document round trip is canonical") {
        std::string doc = save_instance(oracle::line3(2));
        CHECK(save_instance(load_instance(doc)) == doc);
    }
}

TEST_CASE("parse diagnostics") {
    SUBCASE("missing pmf names the field") {
        std::string doc = R"({"type":"metric","points":["a","b"],"dist":[[0,1],[1,0]],"k":1})";
        CHECK_THROWS_WITH_AS(load_instance(doc), doctest::Contains("pmf"), ParseError);
    }
    SUBCASE("syntax error") {
        CHECK_THROWS_AS(load_instance("{not json"), ParseError);
    }
    SUBCASE("unknown type") {
        CHECK_THROWS_AS(load_instance(R"({"type":"nope"})"), ParseError);
    }
    SUBCASE("asymmetric dist is a validation failure with a report") {
        std::string doc =
            R"({"type":"metric","points":["a","b"],"dist":[[0,1],[2,0]],"pmf":[0.5,0.5],"k":1})";
        try {
            load_instance(doc);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.report().count("asymmetry") == 1);
        }
    }
    SUBCASE("non-finite numbers rejected") {
        std::string doc =
            R"({"type":"metric","points":["a","b"],"dist":[[0,1e999],[1e999,0]],"pmf":[0.5,0.5],"k":1})";
        CHECK_THROWS_AS(load_instance(doc), ParseError);
    }
    SUBCASE("schema example parses") {
        std::string doc =
            R"({"type":"metric","points":["s0","s1","s2"],"dist":[[0,1,2],[1,0,1],[2,1,0]],)"
            R"("pmf":[0.3333333333,0.3333333333,0.3333333334],"k":2})";
        Instance inst = load_instance(doc);
        CHECK(instance_num_points(inst) == 3);
        CHECK(instance_k(inst) == 2);
    }
}

TEST_CASE("request distribution") {
    SUBCASE("iid product over line3") {
        MultiRequestInstance inst;
        inst.base = oracle::line3(2);
        inst.n = 2;
        TupleDistribution d = request_distribution(inst);
        REQUIRE(d.tuples.size() == 9);
        double total = 0.0;
        for (double p : d.probs) total += p;
        CHECK(total == doctest::Approx(1.0));
        CHECK(d.tuples.front() == std::vector<int>{0, 0});
        CHECK(d.tuples.back() == std::vector<int>{2, 2});
    }
    SUBCASE("explicit table drops zero entries and normalizes") {
        MultiRequestInstance inst;
        inst.base = oracle::line3(2);
        inst.n = 2;
        inst.mode = RequestMode::explicit_table;
        inst.table = {{{1, 2}, 0.5}, {{0, 1}, 0.5}, {{2, 2}, 0.0}};
        TupleDistribution d = request_distribution(inst);
        REQUIRE(d.tuples.size() == 2);
        CHECK(d.tuples[0] == std::vector<int>{0, 1});  // sorted lexicographically
        CHECK(d.probs[0] == doctest::Approx(0.5));
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "kmedian.hpp"
#include "mdp.hpp"
#include "oracles.hpp"
#include "policy.hpp"

using namespace kserver;

namespace {

// dense transition matrix of the chain induced by a table policy
std::vector<std::vector<double>> induced_chain(const MdpModel& m, const PolicyTable& t,
                                               std::vector<double>& step_cost) {
    const int n = static_cast<int>(m.num_states);
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    step_cost.assign(n, 0.0);
    for (std::uint64_t s = 0; s < m.num_states; ++s) {
        int a = t.action[s];
        step_cost[s] = m.cost(s, a);
        std::uint64_t np = m.next_position_index(s, a);
        for (int r : m.req_support) P[s][np * m.num_requests + r] += m.req_pmf[r];
    }
    return P;
}

ServerDependentInstance scaled_line_pair() {
    // server 0 travels the line at unit cost, server 1 at double cost;
    // requests never hit the right end
    ServerDependentInstance sd;
    sd.points = {"s0", "s1", "s2"};
    sd.dists = {oracle::line3(2).dist, {{0, 2, 4}, {2, 0, 2}, {4, 2, 0}}};
    sd.proc_costs = {{0, 0, 0}, {0, 0, 0}};
    sd.pmf = {0.5, 0.5, 0.0};
    return sd;
}

}  // namespace

TEST_CASE("model shape and transitions on the line instance") {
    MdpModel m = build_mdp(oracle::line3(2));
    CHECK(m.num_states == 27);
    CHECK(m.num_actions == 2);

    double row_sum = 0.0;
    for (int r : m.req_support) row_sum += m.req_pmf[r];
    CHECK(std::abs(row_sum - 1.0) <= 1e-12);

    std::vector<int> pos{0, 2}, req{1};
    std::uint64_t s = m.encode(pos, req);
    CHECK(s == 7);
    CHECK(m.cost(s, 0) == doctest::Approx(1.0));
    CHECK(m.cost(s, 1) == doctest::Approx(1.0));
    std::uint64_t np = m.next_position_index(s, 0);
    std::vector<int> decoded;
    m.decode_positions(np, decoded);
    CHECK(decoded == std::vector<int>{1, 2});

    // dispatching the server already on the request is free
    std::vector<int> req2{2};
    CHECK(m.cost(m.encode(pos, req2), 1) == doctest::Approx(0.0));
}

TEST_CASE("single-server model is deterministic in positions") {
    MdpModel m = build_mdp(oracle::line3(1));
    CHECK(m.num_states == 9);
    std::vector<int> pos{2}, req{0};
    std::uint64_t s = m.encode(pos, req);
    CHECK(m.cost(s, 0) == doctest::Approx(2.0));
    CHECK(m.next_position_index(s, 0) == 0);
}

TEST_CASE("state space guard") {
    MetricInstance big = random_euclidean_instance(1, 40, 4, 0.0);
    CHECK_THROWS_AS(build_mdp(big), TooLargeError);
}

TEST_CASE("tables from policies") {
    MetricInstance inst = oracle::line3(2);
    MdpModel m = build_mdp(inst);
    PartitionPolicy part = build_partition(inst, std::vector<int>{0, 2});
    PolicyTable t = policy_from_partition(m, part);
    // every state with request s2 routes to server 1, everything else to 0
    std::vector<int> pos, req;
    for (std::uint64_t s = 0; s < m.num_states; ++s) {
        m.decode_positions(s / m.num_requests, pos);
        m.decode_requests(s % m.num_requests, req);
        CHECK(t.action[s] == (req[0] == 2 ? 1 : 0));
    }

    SUBCASE("mismatched instance rejected") {
        MetricInstance other = oracle::line3(2);
        other.pmf = {0.5, 0.25, 0.25};
        PartitionPolicy p2 = build_partition(other, std::vector<int>{0, 2});
        CHECK_THROWS_AS(policy_from_partition(m, p2), Error);
    }
}

TEST_CASE("greedy table picks the cheapest server, lowest index on ties") {
    MdpModel m = build_mdp(oracle::line3(2));
    PolicyTable g = greedy_policy(m);
    std::vector<int> pos{0, 2};
    std::vector<int> req_mid{1}, req_right{2};
    CHECK(g.action[m.encode(pos, req_mid)] == 0);    // tie at distance 1
    CHECK(g.action[m.encode(pos, req_right)] == 1);  // cost 0 beats cost 2
}

TEST_CASE("exact evaluation on the line instance") {
    MetricInstance inst = oracle::line3(2);
    MdpModel m = build_mdp(inst);
    PolicyTable t = policy_from_partition(m, build_partition(inst, std::vector<int>{0, 2}));
    EvalResult e = evaluate_exact(m, t);
    CHECK(e.unichain());
    for (double g : e.gain) CHECK(g == doctest::Approx(1.0 / 3).epsilon(1e-10));
}

TEST_CASE("single server gain equals the expected distance of two draws") {
    SUBCASE("uniform line") {
        MetricInstance inst = oracle::line3(1);
        MdpModel m = build_mdp(inst);
        PolicyTable t = policy_from_partition(m, build_partition(inst, std::vector<int>{1}));
        EvalResult e = evaluate_exact(m, t);
        for (double g : e.gain) CHECK(g == doctest::Approx(8.0 / 9).epsilon(1e-10));
    }
    SUBCASE("random instance closed form") {
        MetricInstance inst = random_euclidean_instance(21, 6, 1, 0.8);
        double total = 0.0, norm = 0.0;
        for (double p : inst.pmf) norm += p;
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                total += (inst.pmf[a] / norm) * (inst.pmf[b] / norm) * inst.dist[a][b];
        MdpModel m = build_mdp(inst);
        PolicyTable t = policy_from_partition(m, build_partition(inst, std::vector<int>{0}));
        EvalResult e = evaluate_exact(m, t);
        for (double g : e.gain) CHECK(g == doctest::Approx(total).epsilon(1e-9));
    }
}

TEST_CASE("point-mass requests cost nothing under the partition policy") {
    MetricInstance inst = oracle::line3(2);
    inst.pmf = {0.0, 1.0, 0.0};
    MdpModel m = build_mdp(inst);
    PolicyTable t = policy_from_partition(m, build_partition(inst, std::vector<int>{1, 2}));
    EvalResult e = evaluate_exact(m, t);
    for (double g : e.gain) CHECK(g == doctest::Approx(0.0));
}

TEST_CASE("multichain evaluation with distinct class gains") {
    ServerDependentInstance sd = scaled_line_pair();
    MdpModel m = build_mdp(sd);
    // hand-built table: server 1 does the work unless it sits at the right
    // end, which freezes it there
    PolicyTable t;
    t.digest = m.digest;
    t.action.resize(m.num_states);
    std::vector<int> pos;
    for (std::uint64_t s = 0; s < m.num_states; ++s) {
        m.decode_positions(s / m.num_requests, pos);
        t.action[s] = (pos[1] == 2) ? 0 : 1;
    }
    EvalResult e = evaluate_exact(m, t);
    CHECK(e.classes.size() == 4);
    std::vector<double> gains;
    for (const auto& c : e.classes) gains.push_back(c.gain);
    std::sort(gains.begin(), gains.end());
    CHECK(gains.front() == doctest::Approx(0.5).epsilon(1e-10));  // cheap server walks
    CHECK(gains.back() == doctest::Approx(1.0).epsilon(1e-10));   // costly server walks

    // recurrent states carry their class gain; transient states stay inside
    // the recurrent gain envelope
    for (const auto& c : e.classes)
        for (std::uint32_t s : c.states) CHECK(e.gain[s] == doctest::Approx(c.gain));
    for (double g : e.gain) {
        CHECK(g >= gains.front() - 1e-9);
        CHECK(g <= gains.back() + 1e-9);
    }

    // independent matrix-power oracle over the whole multichain
    std::vector<double> step_cost;
    auto P = induced_chain(m, t, step_cost);
    std::vector<double> cesaro = oracle::cesaro_gain(P, step_cost);
    for (std::uint64_t s = 0; s < m.num_states; ++s)
        CHECK(e.gain[s] == doctest::Approx(cesaro[s]).epsilon(1e-7));
}

TEST_CASE("evaluation matches the matrix-power oracle on random instances") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        MetricInstance inst =
            random_euclidean_instance(seed, 4, 2, static_cast<double>(seed % 5) / 4.0);
        MdpModel m = build_mdp(inst);  // 64 states
        MedianSet med = kmedian_exact(inst);
        PolicyTable t = policy_from_partition(m, build_partition(inst, med.medians));
        EvalResult e = evaluate_exact(m, t);
        std::vector<double> step_cost;
        auto P = induced_chain(m, t, step_cost);
        std::vector<double> cesaro = oracle::cesaro_gain(P, step_cost);
        CAPTURE(seed);
        for (std::uint64_t s = 0; s < m.num_states; ++s)
            CHECK(e.gain[s] == doctest::Approx(cesaro[s]).epsilon(1e-7));
    }
}

TEST_CASE("optimal policy on the line instance") {
    MetricInstance inst = oracle::line3(2);
    MdpModel m = build_mdp(inst);
    SolveResult opt = solve_optimal(m);
    for (double g : opt.eval.gain) CHECK(g == doctest::Approx(1.0 / 3).epsilon(1e-8));
}

TEST_CASE("optimal gain is zero when it can be") {
    SUBCASE("point-mass requests") {
        MetricInstance inst = oracle::line3(2);
        inst.pmf = {0.0, 0.0, 1.0};
        SolveResult opt = solve_optimal(build_mdp(inst));
        CHECK(opt.eval.gain_max() == doctest::Approx(0.0));
    }
    SUBCASE("one server per point") {
        MetricInstance inst = oracle::line3(3);
        SolveResult opt = solve_optimal(build_mdp(inst));
        CHECK(opt.eval.gain_max() == doctest::Approx(0.0));
    }
}

TEST_CASE("optimal policy dominates the heuristics") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        MetricInstance inst = random_euclidean_instance(seed, 5, 2, 0.5);
        MdpModel m = build_mdp(inst);
        SolveResult opt = solve_optimal(m);
        MedianSet med = kmedian_exact(inst);
        EvalResult part =
            evaluate_exact(m, policy_from_partition(m, build_partition(inst, med.medians)));
        EvalResult greedy = evaluate_exact(m, greedy_policy(m));
        CAPTURE(seed);
        for (std::uint64_t s = 0; s < m.num_states; ++s) {
            CHECK(opt.eval.gain[s] <= part.gain[s] + 1e-8);
            CHECK(opt.eval.gain[s] <= greedy.gain[s] + 1e-8);
        }
    }
}

TEST_CASE("iteration cap reports the span reached") {
    MdpModel m = build_mdp(oracle::line3(2));
    try {
        solve_optimal(m, 1e-10, 2);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.span > 0.0);
        CHECK(e.iterations == 2);
    }
}

TEST_CASE("optimal gain is symmetric under server relabeling") {
    MetricInstance inst = random_euclidean_instance(31, 4, 2, 0.5);
    MdpModel m = build_mdp(inst);
    SolveResult opt = solve_optimal(m);
    for (int x1 = 0; x1 < 4; ++x1)
        for (int x2 = 0; x2 < 4; ++x2)
            for (int r = 0; r < 4; ++r) {
                std::vector<int> a{x1, x2}, b{x2, x1}, req{r};
                CHECK(opt.eval.gain[m.encode(a, req)] ==
                      doctest::Approx(opt.eval.gain[m.encode(b, req)]).epsilon(1e-8));
            }
}

TEST_CASE("drift bounds") {
    MetricInstance inst = oracle::line3(2);
    MdpModel m = build_mdp(inst);
    MedianSet med = kmedian_exact(inst);  // medians (0,1)
    PolicyTable t = policy_from_partition(m, build_partition(inst, med.medians));

    SUBCASE("zero potential collapses to one-step costs") {
        PotentialTable h(m.num_states, 0.0);
        double worst = 0.0;
        for (std::uint64_t s = 0; s < m.num_states; ++s)
            worst = std::max(worst, m.cost(s, t.action[s]));
        CHECK(drift_upper_bound(m, t, h) == doctest::Approx(worst));
        CHECK(drift_lower_bound(m, h) == doctest::Approx(0.0));
    }
    SUBCASE("canonical bounds bracket the line instance") {
        double lower = drift_lower_bound(m, canonical_h_lower(m));
        double upper = drift_upper_bound(m, t, canonical_h_upper(m, med.medians));
        CHECK(lower == doctest::Approx(1.0 / 3).epsilon(1e-10));
        CHECK(upper == doctest::Approx(2.0 / 3).epsilon(1e-10));
    }
    SUBCASE("constant shifts do not move the bounds") {
        PotentialTable h = canonical_h_upper(m, med.medians);
        double before = drift_upper_bound(m, t, h);
        for (double& v : h) v += 17.5;
        CHECK(drift_upper_bound(m, t, h) == doctest::Approx(before).epsilon(1e-9));
        PotentialTable hl = canonical_h_lower(m);
        double lo_before = drift_lower_bound(m, hl);
        for (double& v : hl) v -= 3.25;
        CHECK(drift_lower_bound(m, hl) == doctest::Approx(lo_before).epsilon(1e-9));
    }
}

TEST_CASE("canonical potential values") {
    MetricInstance inst = oracle::line3(2);
    MdpModel m = build_mdp(inst);

    PotentialTable hl = canonical_h_lower(m);
    std::vector<int> pos{0, 2}, req{1};
    CHECK(hl[m.encode(pos, req)] == doctest::Approx(1.0));
    std::vector<int> req0{0};
    CHECK(hl[m.encode(pos, req0)] == doctest::Approx(0.0));  // a server sits on the request

    std::vector<int> medians{0, 2};
    PotentialTable hu = canonical_h_upper(m, medians);
    std::vector<int> pos_med{0, 2};
    CHECK(hu[m.encode(pos_med, req0)] == doctest::Approx(0.0));
    std::vector<int> displaced{1, 2};
    CHECK(hu[m.encode(displaced, req0)] == doctest::Approx(1.0));

    SUBCASE("scaling the metric scales the potentials") {
        MetricInstance scaled = inst;
        for (auto& row : scaled.dist)
            for (double& d : row) d *= 2.5;
        MdpModel ms = build_mdp(scaled);
        PotentialTable hu2 = canonical_h_upper(ms, medians);
        for (std::uint64_t s = 0; s < ms.num_states; ++s)
            CHECK(hu2[s] == doctest::Approx(2.5 * hu[s]).epsilon(1e-12));
    }
}

TEST_CASE("sandwich property on a random batch") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        MetricInstance inst =
            random_euclidean_instance(seed, 5, 2, static_cast<double>(seed % 5) / 4.0);
        MdpModel m = build_mdp(inst);
        MedianSet med = kmedian_exact(inst);
        PolicyTable t = policy_from_partition(m, build_partition(inst, med.medians));
        SolveResult opt = solve_optimal(m);
        EvalResult e_mud = evaluate_exact(m, t);
        double lower = drift_lower_bound(m, canonical_h_lower(m));
        double upper = drift_upper_bound(m, t, canonical_h_upper(m, med.medians));
        CAPTURE(seed);
        CHECK(lower == doctest::Approx(med.objective).epsilon(1e-9));
        CHECK(upper == doctest::Approx(2.0 * med.objective).epsilon(1e-9));
        for (std::uint64_t s = 0; s < m.num_states; ++s) {
            CHECK(lower <= opt.eval.gain[s] + 1e-9);
            CHECK(opt.eval.gain[s] <= e_mud.gain[s] + 1e-9);
            CHECK(e_mud.gain[s] <= upper + 1e-9);
            CHECK(opt.eval.gain[s] >= med.objective - 1e-9);  // k-median lower bound
        }
    }
}

TEST_CASE("multi-request model end to end") {
    MultiRequestInstance mi;
    mi.base = oracle::line3(2);
    mi.n = 2;
    MdpModel m = build_mdp(mi);
    CHECK(m.num_states == 81);  // 3^2 positions x 3^2 request pairs
    CHECK(m.num_actions == 2);  // (0,1) and (1,0)
    double row_sum = 0.0;
    for (int r : m.req_support) row_sum += m.req_pmf[r];
    CHECK(std::abs(row_sum - 1.0) <= 1e-12);

    MedianSet med = multi_kmedian_exact(mi);
    MultiDispatchPolicy mp = build_multi_dispatch(mi, med.medians);
    PolicyTable t = policy_from_partition(m, mp);

    SUBCASE("requests at the medians use the identity matching at zero cost") {
        std::vector<int> pos{0, 2}, req{0, 2};
        std::uint64_t s = m.encode(pos, req);
        CHECK(m.cost(s, t.action[s]) == doctest::Approx(0.0));
        PotentialTable hl = canonical_h_lower(m);
        CHECK(hl[s] == doctest::Approx(0.0));
    }
    SUBCASE("factor-two sandwich holds") {
        SolveResult opt = solve_optimal(m);
        EvalResult e_mud = evaluate_exact(m, t);
        double lower = drift_lower_bound(m, canonical_h_lower(m));
        double upper = drift_upper_bound(m, t, canonical_h_upper(m, med.medians));
        CHECK(lower == doctest::Approx(med.objective).epsilon(1e-9));
        CHECK(upper == doctest::Approx(2.0 * med.objective).epsilon(1e-9));
        for (std::uint64_t s = 0; s < m.num_states; ++s) {
            CHECK(lower <= opt.eval.gain[s] + 1e-9);
            CHECK(opt.eval.gain[s] <= e_mud.gain[s] + 1e-9);
            CHECK(e_mud.gain[s] <= upper + 1e-9);
        }
    }
    SUBCASE("evaluation matches the matrix-power oracle") {
        EvalResult e = evaluate_exact(m, t);
        std::vector<double> step_cost;
        auto P = induced_chain(m, t, step_cost);
        std::vector<double> cesaro = oracle::cesaro_gain(P, step_cost);
        for (std::uint64_t s = 0; s < m.num_states; ++s)
            CHECK(e.gain[s] == doctest::Approx(cesaro[s]).epsilon(1e-7));
    }
}

TEST_CASE("evaluation matches the oracle on random tables, restricted supports included") {
    std::mt19937_64 gen(555);
    for (int trial = 0; trial < 60; ++trial) {
        int points = 3 + static_cast<int>(gen() % 2);
        int k = 1 + static_cast<int>(gen() % 3);
        MetricInstance inst =
            random_euclidean_instance(gen(), points, k, static_cast<double>(gen() % 5) / 4.0);
        if (gen() % 3 == 0 && points > 1) {
            int kill = static_cast<int>(gen() % points);
            double rest = 1.0 - inst.pmf[kill];
            if (rest > 0.1) {
                inst.pmf[kill] = 0.0;
                for (double& p : inst.pmf) p /= rest;
            }
        }
        MdpModel m = build_mdp(inst);
        PolicyTable t;
        t.digest = m.digest;
        t.action.resize(m.num_states);
        for (auto& a : t.action) a = static_cast<int>(gen() % m.num_actions);
        EvalResult e = evaluate_exact(m, t);
        std::vector<double> step_cost;
        auto P = induced_chain(m, t, step_cost);
        std::vector<double> cesaro = oracle::cesaro_gain(P, step_cost);
        CAPTURE(trial);
        for (std::uint64_t s = 0; s < m.num_states; ++s)
            CHECK(e.gain[s] == doctest::Approx(cesaro[s]).epsilon(1e-7));
    }
}

TEST_CASE("optimal gain lower-bounds random tables") {
    std::mt19937_64 gen(777);
    for (int trial = 0; trial < 10; ++trial) {
        MetricInstance inst = random_euclidean_instance(gen(), 4, 2, 0.5);
        MdpModel m = build_mdp(inst);
        SolveResult opt = solve_optimal(m);
        for (int probe = 0; probe < 4; ++probe) {
            PolicyTable t;
            t.digest = m.digest;
            t.action.resize(m.num_states);
            for (auto& a : t.action) a = static_cast<int>(gen() % m.num_actions);
            EvalResult e = evaluate_exact(m, t);
            CAPTURE(trial);
            for (std::uint64_t s = 0; s < m.num_states; ++s)
                CHECK(opt.eval.gain[s] <= e.gain[s] + 1e-8);
        }
    }
}

TEST_CASE("explicit request table drives the multi-request model") {
    MultiRequestInstance mi;
    mi.base = oracle::line3(2);
    mi.n = 2;
    mi.mode = RequestMode::explicit_table;
    mi.table = {{{0, 2}, 0.75}, {{2, 0}, 0.25}};
    MedianSet med = multi_kmedian_exact(mi);
    CHECK(med.medians == std::vector<int>{0, 2});
    CHECK(med.objective == doctest::Approx(0.0));
    MdpModel m = build_mdp(mi);
    CHECK(m.req_support.size() == 2);
    PolicyTable t = policy_from_partition(m, build_multi_dispatch(mi, med.medians));
    EvalResult e = evaluate_exact(m, t);
    CHECK(e.gain_max() == doctest::Approx(0.0));  // servers settle on the two atoms
    SolveResult opt = solve_optimal(m);
    CHECK(opt.eval.gain_max() == doctest::Approx(0.0));
}

TEST_CASE("single point, single server") {
    MetricInstance inst;
    inst.points = {"s0"};
    inst.dist = {{0.0}};
    inst.pmf = {1.0};
    inst.k = 1;
    MdpModel m = build_mdp(inst);
    CHECK(m.num_states == 1);
    MedianSet med = kmedian_exact(inst);
    PolicyTable t = policy_from_partition(m, build_partition(inst, med.medians));
    CHECK(evaluate_exact(m, t).gain_max() == doctest::Approx(0.0));
    CHECK(solve_optimal(m).eval.gain_max() == doctest::Approx(0.0));
}

TEST_CASE("server-dependent model bounds stay valid with processing costs") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ServerDependentInstance sd = random_server_dependent_instance(seed, 4, 2, 0.5);
        MdpModel m = build_mdp(sd);
        MedianSet med = generalized_kmedian_exact(sd);
        PolicyTable t = policy_from_partition(m, build_partition(sd, med.medians));
        SolveResult opt = solve_optimal(m);
        EvalResult e_mud = evaluate_exact(m, t);
        double lower = drift_lower_bound(m, canonical_h_lower(m));
        double upper = drift_upper_bound(m, t, canonical_h_upper(m, med.medians));
        CAPTURE(seed);
        CHECK(lower >= med.objective - 1e-9);
        CHECK(upper <= 2.0 * med.objective + 1e-9);
        for (std::uint64_t s = 0; s < m.num_states; ++s) {
            CHECK(lower <= opt.eval.gain[s] + 1e-9);
            CHECK(opt.eval.gain[s] <= e_mud.gain[s] + 1e-9);
            CHECK(e_mud.gain[s] <= upper + 1e-9);
            CHECK(e_mud.gain[s] <= 2.0 * opt.eval.gain[s] + 1e-9);
            CHECK(opt.eval.gain[s] >= med.objective - 1e-9);
        }
    }
}

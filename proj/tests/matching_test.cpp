#include <doctest.h>

#include <sstream>

#include "noisymatch/errors.hpp"
#include "noisymatch/matching.hpp"
#include "oracle.hpp"

using namespace noisymatch;

namespace {

std::vector<int> to_vector(const Eigen::VectorXi& v) { return {v.begin(), v.end()}; }

SampledMarket market_from(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<int>>& prefs) {
    const int n = static_cast<int>(scores.size());
    const int k = static_cast<int>(scores[0].size());
    auto m = oracle::blank_market(n, k);
    for (int s = 0; s < n; ++s) {
        for (int c = 0; c < k; ++c) {
            m.scores(s, c) = scores[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
            m.prefs(s, c) = prefs[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
        }
    }
    return m;
}

EconomyConfig random_economy(Rng& rng, std::uint64_t seed) {
    EconomyConfig e;
    e.n_students = 20 + static_cast<std::int64_t>(rng.below(181));
    const int colleges = 1 + static_cast<int>(rng.below(10));
    const int coalitions = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(colleges, 3))));
    const std::array<NoiseSpec, 4> noises{UniformNoise{}, GaussianNoise{}, ExponentialNoise{}, ParetoNoise{}};
    for (int g = 0; g < coalitions; ++g) e.coalitions.push_back({g, UniformValues{}, noises[rng.below(4)]});
    for (int c = 0; c < colleges; ++c) {
        const auto cap = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(e.n_students / colleges / 2 + 1)));
        e.colleges.push_back({c, cap, c % coalitions});
    }
    e.master_seed = seed;
    e.alpha = 1e9;
    return e;
}

} // namespace

TEST_CASE("deferred_acceptance: single college admits the top scorer") {
    const auto m = market_from({{0.9}, {0.5}}, {{0}, {0}});
    const auto mt = deferred_acceptance(m, Eigen::VectorXi::Constant(1, 1));
    CHECK(mt.assignment[0] == 0);
    CHECK(mt.assignment[1] == kUnmatched);
}

TEST_CASE("deferred_acceptance: three students, two unit colleges") {
    // Everyone prefers college 0 (the example's "college 1").
    const auto m = market_from({{0.9, 0.2}, {0.8, 0.9}, {0.1, 0.8}}, {{0, 1}, {0, 1}, {0, 1}});
    const Eigen::VectorXi caps = Eigen::VectorXi::Ones(2);
    const auto mt = deferred_acceptance(m, caps);
    CHECK(to_vector(mt.assignment) == std::vector<int>{0, 1, kUnmatched});

    // Brute force agrees and finds it to be the only stable matching.
    const auto feasible = oracle::feasible_assignments(3, caps);
    const auto verdict = oracle::judge(m, caps, feasible, to_vector(mt.assignment));
    CHECK(verdict.stable);
    CHECK(verdict.student_optimal);
    CHECK(verdict.stable_count == 1);
}

TEST_CASE("deferred_acceptance: common ranking gives serial dictatorship") {
    // Both colleges order students 3, 0, 4, 1, 2; college 0 carries the higher scores.
    const std::vector<double> v{0.8, 0.4, 0.3, 0.95, 0.6};
    std::vector<std::vector<double>> scores;
    for (const double x : v) scores.push_back({x, x - 0.05});
    const auto m = market_from(scores, std::vector<std::vector<int>>(5, {0, 1}));
    const Eigen::VectorXi caps = (Eigen::VectorXi(2) << 2, 2).finished();
    const auto mt = deferred_acceptance(m, caps);
    CHECK(to_vector(mt.assignment) == std::vector<int>{0, 1, kUnmatched, 0, 1});
    const auto verdict = oracle::judge(m, caps, oracle::feasible_assignments(5, caps), to_vector(mt.assignment));
    CHECK(verdict.stable);
    CHECK(verdict.student_optimal);
    CHECK(verdict.stable_count == 1);
}

TEST_CASE("deferred_acceptance: rosters are sorted, full and consistent") {
    Rng rng(11);
    const auto e = random_economy(rng, 3);
    const auto m = sample_market(e);
    const auto caps = capacities(e);
    const auto mt = deferred_acceptance(m, caps);
    check_consistency(mt, caps);
    for (Eigen::Index c = 0; c < mt.num_colleges(); ++c) {
        const auto& roster = mt.rosters[static_cast<std::size_t>(c)];
        CHECK(static_cast<int>(roster.size()) == caps[c]);
        for (std::size_t i = 1; i < roster.size(); ++i) {
            CHECK(college_prefers(roster[i - 1].score, roster[i - 1].student, roster[i].score, roster[i].student));
        }
    }
    CHECK(mt.matched_count() == caps.sum());
}

TEST_CASE("deferred_acceptance: 100 random markets are stable") {
    Rng rng(2024);
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto e = random_economy(rng, i);
        const auto m = sample_market(e);
        const auto caps = capacities(e);
        const auto mt = deferred_acceptance(m, caps);
        CHECK(find_blocking_pairs(mt, m, caps).empty());
        CHECK(mt.matched_count() == caps.sum());
    }
}

TEST_CASE("find_blocking_pairs: agrees with the naive oracle on every feasible matching") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto m = oracle::blank_market(4, 2);
        for (int s = 0; s < 4; ++s) {
            const bool flip = rng.below(2) == 1;
            m.prefs(s, 0) = flip ? 1 : 0;
            m.prefs(s, 1) = flip ? 0 : 1;
            for (int c = 0; c < 2; ++c) m.scores(s, c) = oracle::kGrid[rng.below(5)];
        }
        const Eigen::VectorXi caps = (Eigen::VectorXi(2) << 1, 2).finished();
        for (const auto& a : oracle::feasible_assignments(4, caps)) {
            const Eigen::VectorXi av = Eigen::Map<const Eigen::VectorXi>(a.data(), 4);
            const auto mt = matching_from_assignment(m, av);
            CHECK(find_blocking_pairs(mt, m, caps).empty() == oracle::is_stable(m, caps, a));
        }
    }
}

TEST_CASE("find_blocking_pairs: swapped pair against score order") {
    // One college, capacity 1, student 0 outscores student 1 but 1 holds the seat.
    const auto m = market_from({{0.9}, {0.4}}, {{0}, {0}});
    const Eigen::VectorXi caps = Eigen::VectorXi::Ones(1);
    const auto mt = matching_from_assignment(m, (Eigen::VectorXi(2) << kUnmatched, 0).finished());
    CHECK(find_blocking_pairs(mt, m, caps) == std::vector<BlockingPair>{{0, 0}});
}

TEST_CASE("find_blocking_pairs: everyone unmatched with free seats") {
    const auto m = market_from({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}, {{0, 1}, {1, 0}, {0, 1}});
    const Eigen::VectorXi caps = Eigen::VectorXi::Ones(2);
    const auto mt = matching_from_assignment(m, Eigen::VectorXi::Constant(3, kUnmatched));
    CHECK(find_blocking_pairs(mt, m, caps).size() == 6);
}

TEST_CASE("deferred_acceptance: ties go to the lower student id") {
    const auto m = market_from({{0.5}, {0.5}, {0.5}}, {{0}, {0}, {0}});
    const auto mt = deferred_acceptance(m, Eigen::VectorXi::Constant(1, 2));
    CHECK(to_vector(mt.assignment) == std::vector<int>{0, 0, kUnmatched});
    CHECK(mt.tie_breaks > 0);
    CHECK(find_blocking_pairs(mt, m, Eigen::VectorXi::Constant(1, 2)).empty());
}

TEST_CASE("deferred_acceptance: invariant to positive affine transforms of one college") {
    Rng rng(77);
    for (std::uint64_t i = 0; i < 10; ++i) {
        const auto e = random_economy(rng, 100 + i);
        auto m = sample_market(e);
        const auto caps = capacities(e);
        const auto before = deferred_acceptance(m, caps);
        const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.num_colleges())));
        m.scores.col(c) = (m.scores.col(c).array() * 3.5 - 2.0).matrix();
        const auto after = deferred_acceptance(m, caps);
        CHECK(before.assignment == after.assignment);
    }
}

TEST_CASE("deferred_acceptance: exhaustive oracle on small grids") {
    // Every score grid for N <= 3, C <= 2 with unit capacities.
    for (int n = 1; n <= 3; ++n) {
        for (int k = 1; k <= 2; ++k) {
            const Eigen::VectorXi caps = Eigen::VectorXi::Ones(k);
            const auto feasible = oracle::feasible_assignments(n, caps);
            const int cells = n * k;
            int score_configs = 1;
            for (int i = 0; i < cells; ++i) score_configs *= 5;
            const int pref_configs = k == 2 ? (1 << n) : 1;
            int failures = 0;
            for (int sc = 0; sc < score_configs; ++sc) {
                for (int pc = 0; pc < pref_configs; ++pc) {
                    auto m = oracle::blank_market(n, k);
                    int code = sc;
                    for (int s = 0; s < n; ++s) {
                        for (int c = 0; c < k; ++c) {
                            m.scores(s, c) = oracle::kGrid[static_cast<std::size_t>(code % 5)];
                            code /= 5;
                        }
                        const bool flip = k == 2 && ((pc >> s) & 1);
                        for (int c = 0; c < k; ++c) m.prefs(s, c) = flip ? k - 1 - c : c;
                    }
                    const auto mt = deferred_acceptance(m, caps);
                    const auto v = oracle::judge(m, caps, feasible, to_vector(mt.assignment));
                    if (!v.stable || !v.student_optimal) ++failures;
                }
            }
            CHECK(failures == 0);
        }
    }
}

TEST_CASE("check_consistency rejects over-capacity rosters") {
    const auto m = market_from({{0.9}, {0.4}}, {{0}, {0}});
    const auto mt = matching_from_assignment(m, Eigen::VectorXi::Zero(2));
    CHECK_THROWS_AS(check_consistency(mt, Eigen::VectorXi::Ones(1)), InvariantError);
}

TEST_CASE("write_matching_csv") {
    const auto m = market_from({{0.9}, {0.4}}, {{0}, {0}});
    const auto mt = deferred_acceptance(m, Eigen::VectorXi::Ones(1));
    std::ostringstream os;
    write_matching_csv(os, mt, m);
    CHECK(os.str() == "student,college,score\n0,0,0.9\n1,-1,\n");
}

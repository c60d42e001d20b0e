#include <doctest.h>

#include <algorithm>
#include <limits>

#include "noisymatch/cutoffs.hpp"
#include "noisymatch/errors.hpp"
#include "oracle.hpp"

using namespace noisymatch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EconomyConfig economy(std::int64_t n, int colleges, NoiseSpec noise, std::uint64_t seed) {
    EconomyConfig e;
    e.n_students = n;
    e.master_seed = seed;
    e.coalitions.push_back({0, UniformValues{}, noise});
    e.coalitions.push_back({1, UniformValues{}, noise});
    for (int c = 0; c < colleges; ++c) e.colleges.push_back({c, n / (2 * colleges), c % 2});
    return e;
}

// O(C^2) scan over every candidate start.
DenseCluster brute_cluster(const std::vector<double>& cutoffs, double delta, std::int64_t m_min) {
    DenseCluster best;
    for (const double p : cutoffs) {
        if (!std::isfinite(p)) continue;
        std::int64_t count = 0;
        for (const double q : cutoffs) {
            if (std::isfinite(q) && q >= p && q <= p + delta) ++count;
        }
        if (count >= m_min && (!best.p_star || p < *best.p_star)) best = {p, count};
    }
    return best;
}

} // namespace

TEST_CASE("extract_cutoffs: minimum admitted score, -inf when underfilled") {
    auto m = oracle::blank_market(4, 2);
    const std::array<double, 4> s0{0.9, 0.7, 0.8, 0.1};
    for (int s = 0; s < 4; ++s) {
        m.scores(s, 0) = s0[static_cast<std::size_t>(s)];
        m.scores(s, 1) = 0.5;
        m.prefs(s, 0) = 0;
        m.prefs(s, 1) = 1;
    }
    const Eigen::VectorXi caps = (Eigen::VectorXi(2) << 3, 5).finished();
    const auto mt = deferred_acceptance(m, caps);
    const auto cut = extract_cutoffs(mt, caps);
    CHECK(cut[0] == 0.7);
    CHECK(cut[1] == -kInf);
}

TEST_CASE("demand: definition cases") {
    auto m = oracle::blank_market(1, 3);
    m.prefs.row(0) << 2, 0, 1;
    m.scores.row(0) << 0.5, 0.6, 0.4;
    CHECK(demand(0, m, CutoffVector::Constant(3, -kInf)) == 2);
    CHECK(demand(0, m, CutoffVector::Constant(3, 1.0)) == kUnmatched);
    // First choice (college 2) too expensive, second (college 0) affordable.
    CHECK(demand(0, m, (CutoffVector(3) << 0.45, 0.0, 0.41).finished()) == 0);
    // Closed boundary: score equal to cutoff affords.
    CHECK(demand(0, m, (CutoffVector(3) << 1.0, 1.0, 0.4).finished()) == 2);
}

TEST_CASE("check_market_clearing: DA cutoffs clear, shifted cutoffs do not") {
    // Three students, one seat each at two colleges: overdemanded.
    auto m = oracle::blank_market(3, 2);
    m.scores << 0.9, 0.2, 0.8, 0.9, 0.1, 0.8;
    m.prefs << 0, 1, 0, 1, 0, 1;
    const Eigen::VectorXi caps = Eigen::VectorXi::Ones(2);
    const auto mt = deferred_acceptance(m, caps);
    const auto cut = extract_cutoffs(mt, caps);
    CHECK(check_market_clearing(m, cut, caps) == Eigen::VectorXi::Zero(2));

    const auto lowered = check_market_clearing(m, (cut.array() - 1.0).matrix(), caps);
    CHECK(lowered.maxCoeff() > 0);

    const auto raised = check_market_clearing(m, CutoffVector::Constant(2, 10.0), caps);
    CHECK(raised == (-caps).eval());
}

TEST_CASE("cutoff characterization and clearing across random markets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const NoiseSpec noise = seed % 2 ? NoiseSpec{ParetoNoise{}} : NoiseSpec{GaussianNoise{}};
        const auto e = economy(300, 6, noise, seed);
        const auto m = sample_market(e);
        const auto caps = capacities(e);
        const auto mt = deferred_acceptance(m, caps);
        const auto cut = extract_cutoffs(mt, caps);
        for (Eigen::Index s = 0; s < m.num_students(); ++s) CHECK(demand(s, m, cut) == mt.assignment[s]);
        CHECK(check_market_clearing(m, cut, caps).isZero());
    }
}

TEST_CASE("demand: raising one cutoff never helps anyone") {
    const auto e = economy(400, 8, UniformNoise{}, 3);
    const auto m = sample_market(e);
    const auto caps = capacities(e);
    const auto cut = extract_cutoffs(deferred_acceptance(m, caps), caps);
    for (Eigen::Index c = 0; c < cut.size(); ++c) {
        for (const double bump : {0.01, 0.1, 1.0}) {
            CutoffVector raised = cut;
            raised[c] += bump;
            for (Eigen::Index s = 0; s < m.num_students(); ++s) {
                const int before = demand(s, m, cut);
                const int after = demand(s, m, raised);
                if (before == kUnmatched) CHECK(after == kUnmatched);
                CHECK(oracle::student_rank(m, static_cast<int>(s), after) >=
                      oracle::student_rank(m, static_cast<int>(s), before));
            }
        }
    }
}

TEST_CASE("dense_cluster: worked cases") {
    const std::vector<double> a{0.0, 0.01, 0.02, 5.0};
    const auto r = dense_cluster(a, 0.05, 3);
    REQUIRE(r.p_star);
    CHECK(*r.p_star == 0.0);
    CHECK(r.member_count == 3);

    const std::vector<double> b{0.0, 1.0, 2.0, 3.0};
    CHECK_FALSE(dense_cluster(b, 0.5, 2).p_star);

    const std::vector<double> c{-kInf, -kInf, 0.3, 0.31};
    const auto rc = dense_cluster(c, 0.1, 2);
    REQUIRE(rc.p_star);
    CHECK(*rc.p_star == 0.3);
    CHECK_FALSE(dense_cluster(c, 0.1, 3).p_star);

    CHECK_THROWS_AS(dense_cluster(a, 0.0, 1), DomainError);
    CHECK_THROWS_AS(dense_cluster(a, 0.1, 0), DomainError);
}

TEST_CASE("dense_cluster: uniform sample finds a low window") {
    Rng rng(99);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = rng.uniform01();
    const auto r = dense_cluster(xs, 0.1, 50);
    REQUIRE(r.p_star);
    CHECK(*r.p_star <= 0.05);
    const auto brute = brute_cluster(xs, 0.1, 50);
    CHECK(*brute.p_star == *r.p_star);
    CHECK(brute.member_count == r.member_count);
}

TEST_CASE("dense_cluster: matches the quadratic scan") {
    Rng rng(123);
    for (int trial = 0; trial < 300; ++trial) {
        const auto size = 1 + static_cast<std::size_t>(rng.below(200));
        std::vector<double> xs(size);
        for (auto& x : xs) {
            // Coarse grid forces duplicates; occasional -inf for underfilled colleges.
            x = rng.below(20) == 0 ? -kInf : static_cast<double>(rng.below(50)) / 50.0;
        }
        const double delta = 0.01 + rng.uniform01() * 0.2;
        const auto m_min = 1 + static_cast<std::int64_t>(rng.below(20));
        const auto fast = dense_cluster(xs, delta, m_min);
        const auto slow = brute_cluster(xs, delta, m_min);
        REQUIRE(fast.p_star.has_value() == slow.p_star.has_value());
        if (fast.p_star) {
            CHECK(*fast.p_star == *slow.p_star);
            CHECK(fast.member_count == slow.member_count);
        }
    }
}

TEST_CASE("rate_exponent") {
    CHECK(rate_exponent(1.0, 1.0) == 0.125);
    CHECK(rate_exponent(2.0, 1.0) == 4.0 / 21.0);
    CHECK(rate_exponent(1e-9, 1.0) < 1e-9);
    CHECK_THROWS_AS(rate_exponent(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(rate_exponent(1.0, -1.0), DomainError);
}

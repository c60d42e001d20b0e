#pragma once

// Brute-force reference implementations used by the matching tests and the
// acceptance suite. Deliberately naive: no heaps, no early exits.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "noisymatch/market.hpp"

namespace oracle {

using noisymatch::SampledMarket;

inline constexpr int kNone = -1;

/// Position of college c in student s's ranking; kNone ranks last.
inline int student_rank(const SampledMarket& m, int s, int c) {
    if (c == kNone) return static_cast<int>(m.num_colleges());
    for (int r = 0; r < m.num_colleges(); ++r) {
        if (m.prefs(s, r) == c) return r;
    }
    return static_cast<int>(m.num_colleges());
}

inline bool college_ranks_higher(const SampledMarket& m, int c, int a, int b) {
    const double sa = m.scores(a, c);
    const double sb = m.scores(b, c);
    if (sa != sb) return sa > sb;
    return a < b;
}

/// True when no (student, college) pair blocks `assignment`.
inline bool is_stable(const SampledMarket& m, const Eigen::VectorXi& caps, const std::vector<int>& assignment) {
    const int n = static_cast<int>(m.num_students());
    const int k = static_cast<int>(m.num_colleges());
    for (int s = 0; s < n; ++s) {
        const int own = student_rank(m, s, assignment[static_cast<std::size_t>(s)]);
        for (int r = 0; r < own; ++r) {
            const int c = m.prefs(s, r);
            int held = 0;
            bool displaces = false;
            for (int t = 0; t < n; ++t) {
                if (assignment[static_cast<std::size_t>(t)] != c) continue;
                ++held;
                if (college_ranks_higher(m, c, s, t)) displaces = true;
            }
            if (held < caps[c] || displaces) return false;
        }
    }
    (void)k;
    return true;
}

/// Every assignment (including unmatched) that respects capacities.
inline std::vector<std::vector<int>> feasible_assignments(int n, const Eigen::VectorXi& caps) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(n), kNone);
    std::vector<int> load(static_cast<std::size_t>(caps.size()), 0);
    std::function<void(int)> rec = [&](int s) {
        if (s == n) {
            out.push_back(cur);
            return;
        }
        cur[static_cast<std::size_t>(s)] = kNone;
        rec(s + 1);
        for (int c = 0; c < caps.size(); ++c) {
            if (load[static_cast<std::size_t>(c)] >= caps[c]) continue;
            ++load[static_cast<std::size_t>(c)];
            cur[static_cast<std::size_t>(s)] = c;
            rec(s + 1);
            --load[static_cast<std::size_t>(c)];
        }
        cur[static_cast<std::size_t>(s)] = kNone;
    };
    rec(0);
    return out;
}

struct OracleVerdict {
    bool stable = false;
    bool student_optimal = false;
    int stable_count = 0;
};

/// Checks `candidate` against every stable matching among `feasible`.
inline OracleVerdict judge(const SampledMarket& m, const Eigen::VectorXi& caps,
                           const std::vector<std::vector<int>>& feasible, const std::vector<int>& candidate) {
    OracleVerdict v;
    v.stable = is_stable(m, caps, candidate);
    v.student_optimal = true;
    const int n = static_cast<int>(m.num_students());
    for (const auto& a : feasible) {
        if (!is_stable(m, caps, a)) continue;
        ++v.stable_count;
        for (int s = 0; s < n; ++s) {
            const auto i = static_cast<std::size_t>(s);
            if (student_rank(m, s, a[i]) < student_rank(m, s, candidate[i])) v.student_optimal = false;
        }
    }
    return v;
}

/// Empty market shell with one coalition and `n` x `k` scores.
inline SampledMarket blank_market(int n, int k) {
    SampledMarket m;
    m.values = Eigen::MatrixXd::Zero(n, 1);
    m.prefs.resize(n, k);
    m.scores.resize(n, k);
    m.coalition_of = Eigen::VectorXi::Zero(k);
    return m;
}

inline constexpr std::array<double, 5> kGrid{0.0, 0.25, 0.5, 0.75, 1.0};

/// Writes grid scores into column c that induce `order` (best first) once
/// ties are broken by lower id. Reuses a grid value whenever the tie-break
/// already yields the wanted order, so ties are exercised.
inline void scores_for_order(SampledMarket& m, int c, const std::vector<int>& order) {
    std::size_t g = kGrid.size() - 1;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && order[i] < order[i - 1]) --g;
        m.scores(order[i], c) = kGrid[g];
    }
}

} // namespace oracle

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "noisymatch/market.hpp"

namespace noisymatch {

inline constexpr int kUnmatched = -1;

struct RosterEntry {
    int student = 0;
    double score = 0.0;
};

struct Matching {
    Eigen::VectorXi assignment;                   ///< student -> college id or kUnmatched
    std::vector<std::vector<RosterEntry>> rosters;  ///< college -> admits, best first
    std::int64_t tie_breaks = 0;  ///< equal-score comparisons resolved by student id

    Eigen::Index num_students() const { return assignment.size(); }
    Eigen::Index num_colleges() const { return static_cast<Eigen::Index>(rosters.size()); }
    std::int64_t matched_count() const;
};

/// Colleges rank by score, higher first; equal scores go to the lower student id.
inline bool college_prefers(double score_a, int a, double score_b, int b) noexcept {
    return score_a > score_b || (score_a == score_b && a < b);
}

/// Student-proposing deferred acceptance with a per-college heap of admits.
/// O(N C log N) time, O(N C) memory (the market itself).
Matching deferred_acceptance(const SampledMarket& market, const Eigen::VectorXi& capacities);

/// Builds a Matching (rosters sorted best first) from a raw assignment vector.
Matching matching_from_assignment(const SampledMarket& market, const Eigen::VectorXi& assignment);

/// Throws InvariantError if assignment/rosters disagree or a roster exceeds capacity.
void check_consistency(const Matching& matching, const Eigen::VectorXi& capacities);

struct BlockingPair {
    int student = 0;
    int college = 0;
    friend bool operator==(const BlockingPair&, const BlockingPair&) = default;
};

/// Every (s, c) with s preferring c to its assignment while c has a free seat or
/// ranks s above its worst admit. Sorted by (student, college).
std::vector<BlockingPair> find_blocking_pairs(const Matching& matching, const SampledMarket& market,
                                              const Eigen::VectorXi& capacities);

/// student,college,score. Unmatched students carry college -1 and an empty score.
void write_matching_csv(std::ostream& os, const Matching& matching, const SampledMarket& market);

} // namespace noisymatch

#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "noisymatch/market.hpp"
#include "noisymatch/matching.hpp"

namespace noisymatch {

/// Per-college admission thresholds; -inf marks an underfilled college.
using CutoffVector = Eigen::VectorXd;

/// Minimum admitted score for full colleges, -inf otherwise.
CutoffVector extract_cutoffs(const Matching& matching, const Eigen::VectorXi& capacities);

/// A student can afford c when their score at c reaches the cutoff. The
/// boundary is closed so the lowest admit affords their own college.
inline bool affords(double score, double cutoff) noexcept { return score >= cutoff; }

/// Most preferred affordable college, or kUnmatched.
int demand(Eigen::Index student, const SampledMarket& market, const CutoffVector& cutoffs);

/// Number of students demanding each college minus its capacity.
Eigen::VectorXi check_market_clearing(const SampledMarket& market, const CutoffVector& cutoffs,
                                      const Eigen::VectorXi& capacities);

struct DenseCluster {
    std::optional<double> p_star;
    std::int64_t member_count = 0;
};

/// Smallest cutoff value P* such that [P*, P* + delta] holds at least m_min
/// finite cutoffs. O(C log C).
DenseCluster dense_cluster(std::span<const double> cutoffs, double delta, std::int64_t m_min);

/// K(beta, gamma) = 2 beta gamma / (3 beta gamma + 2 beta + 5 gamma + 6), the
/// decay exponent of the matched mass below v_S.
double rate_exponent(double beta, double gamma);

} // namespace noisymatch

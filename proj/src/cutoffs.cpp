#include "noisymatch/cutoffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "noisymatch/errors.hpp"

namespace noisymatch {

CutoffVector extract_cutoffs(const Matching& matching, const Eigen::VectorXi& capacities) {
    const Eigen::Index c_count = matching.num_colleges();
    if (capacities.size() != c_count) throw ConfigError("capacities", "one capacity per college required");
    CutoffVector out = CutoffVector::Constant(c_count, -std::numeric_limits<double>::infinity());
    for (Eigen::Index c = 0; c < c_count; ++c) {
        const auto& roster = matching.rosters[static_cast<std::size_t>(c)];
        if (roster.empty() || static_cast<Eigen::Index>(roster.size()) < capacities[c]) continue;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& e : roster) lowest = std::min(lowest, e.score);
        out[c] = lowest;
    }
    return out;
}

int demand(Eigen::Index student, const SampledMarket& market, const CutoffVector& cutoffs) {
    for (Eigen::Index r = 0; r < market.num_colleges(); ++r) {
        const int c = market.prefs(student, r);
        if (affords(market.scores(student, c), cutoffs[c])) return c;
    }
    return kUnmatched;
}

Eigen::VectorXi check_market_clearing(const SampledMarket& market, const CutoffVector& cutoffs,
                                      const Eigen::VectorXi& capacities) {
    Eigen::VectorXi excess = -capacities;
    for (Eigen::Index s = 0; s < market.num_students(); ++s) {
        const int c = demand(s, market, cutoffs);
        if (c != kUnmatched) ++excess[c];
    }
    return excess;
}

DenseCluster dense_cluster(std::span<const double> cutoffs, double delta, std::int64_t m_min) {
    if (!(delta > 0.0)) throw DomainError("dense_cluster: delta must be positive");
    if (m_min < 1) throw DomainError("dense_cluster: m_min must be at least 1");
    std::vector<double> sorted;
    sorted.reserve(cutoffs.size());
    for (const double p : cutoffs) {
        if (std::isfinite(p)) sorted.push_back(p);
    }
    std::sort(sorted.begin(), sorted.end());
    for (auto it = sorted.begin(); it != sorted.end(); ++it) {
        const auto end = std::upper_bound(it, sorted.end(), *it + delta);
        const auto count = static_cast<std::int64_t>(end - it);
        if (count >= m_min) return {*it, count};
    }
    return {};
}

double rate_exponent(double beta, double gamma) {
    if (!(beta > 0.0) || !(gamma > 0.0)) throw DomainError("rate_exponent: beta and gamma must be positive");
    const double bg = beta * gamma;
    return 2.0 * bg / (3.0 * bg + 2.0 * beta + 5.0 * gamma + 6.0);
}

} // namespace noisymatch

#include "noisymatch/matching.hpp"

#include <algorithm>
#include <ostream>
#include <queue>

#include "noisymatch/errors.hpp"
#include "noisymatch/format.hpp"

namespace noisymatch {

std::int64_t Matching::matched_count() const {
    return (assignment.array() != kUnmatched).count();
}

namespace {

void require_shapes(const SampledMarket& market, const Eigen::VectorXi& capacities) {
    if (capacities.size() != market.num_colleges()) {
        throw ConfigError("capacities", "one capacity per college required");
    }
    if ((capacities.array() < 0).any()) throw ConfigError("capacities", "must be non-negative");
    if (market.prefs.rows() != market.num_students() || market.prefs.cols() != market.num_colleges()) {
        throw ConfigError("prefs", "need a full ranking for every student");
    }
}

void sort_roster(std::vector<RosterEntry>& roster) {
    std::sort(roster.begin(), roster.end(), [](const RosterEntry& a, const RosterEntry& b) {
        return college_prefers(a.score, a.student, b.score, b.student);
    });
}

} // namespace

Matching deferred_acceptance(const SampledMarket& market, const Eigen::VectorXi& capacities) {
    require_shapes(market, capacities);
    const Eigen::Index n = market.num_students();
    const Eigen::Index c_count = market.num_colleges();

    std::int64_t ties = 0;
    // Worst admit on top.
    auto worse_on_top = [&ties](const RosterEntry& a, const RosterEntry& b) {
        if (a.score == b.score) ++ties;
        return college_prefers(a.score, a.student, b.score, b.student);
    };
    using Heap = std::priority_queue<RosterEntry, std::vector<RosterEntry>, decltype(worse_on_top)>;
    std::vector<Heap> held;
    held.reserve(static_cast<std::size_t>(c_count));
    for (Eigen::Index c = 0; c < c_count; ++c) {
        std::vector<RosterEntry> storage;
        storage.reserve(static_cast<std::size_t>(capacities[c]) + 1);
        held.emplace_back(worse_on_top, std::move(storage));
    }

    std::vector<Eigen::Index> next_choice(static_cast<std::size_t>(n), 0);
    std::vector<int> free_students(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) free_students[static_cast<std::size_t>(n - 1 - s)] = static_cast<int>(s);

    while (!free_students.empty()) {
        const int s = free_students.back();
        free_students.pop_back();
        auto& cursor = next_choice[static_cast<std::size_t>(s)];
        while (cursor < c_count) {
            const int c = market.prefs(s, cursor++);
            const int cap = capacities[c];
            if (cap == 0) continue;
            auto& heap = held[static_cast<std::size_t>(c)];
            const RosterEntry entry{s, market.scores(s, c)};
            if (static_cast<int>(heap.size()) < cap) {
                heap.push(entry);
                break;
            }
            const RosterEntry worst = heap.top();
            if (college_prefers(entry.score, entry.student, worst.score, worst.student)) {
                if (entry.score == worst.score) ++ties;
                heap.pop();
                heap.push(entry);
                free_students.push_back(worst.student);
                break;
            }
            if (entry.score == worst.score) ++ties;
        }
        // A student whose cursor runs off the list stays unmatched.
    }

    Matching m;
    m.assignment = Eigen::VectorXi::Constant(n, kUnmatched);
    m.rosters.resize(static_cast<std::size_t>(c_count));
    for (Eigen::Index c = 0; c < c_count; ++c) {
        auto& heap = held[static_cast<std::size_t>(c)];
        auto& roster = m.rosters[static_cast<std::size_t>(c)];
        roster.reserve(heap.size());
        while (!heap.empty()) {
            roster.push_back(heap.top());
            m.assignment[roster.back().student] = static_cast<int>(c);
            heap.pop();
        }
        std::reverse(roster.begin(), roster.end());
    }
    m.tie_breaks = ties;
    return m;
}

Matching matching_from_assignment(const SampledMarket& market, const Eigen::VectorXi& assignment) {
    if (assignment.size() != market.num_students()) {
        throw ConfigError("assignment", "one entry per student required");
    }
    Matching m;
    m.assignment = assignment;
    m.rosters.resize(static_cast<std::size_t>(market.num_colleges()));
    for (Eigen::Index s = 0; s < assignment.size(); ++s) {
        const int c = assignment[s];
        if (c == kUnmatched) continue;
        if (c < 0 || c >= market.num_colleges()) throw ConfigError("assignment", "unknown college id");
        m.rosters[static_cast<std::size_t>(c)].push_back({static_cast<int>(s), market.scores(s, c)});
    }
    for (auto& roster : m.rosters) sort_roster(roster);
    return m;
}

void check_consistency(const Matching& matching, const Eigen::VectorXi& capacities) {
    if (capacities.size() != matching.num_colleges()) {
        throw InvariantError("matching", "roster count differs from college count");
    }
    Eigen::Index listed = 0;
    for (Eigen::Index c = 0; c < matching.num_colleges(); ++c) {
        const auto& roster = matching.rosters[static_cast<std::size_t>(c)];
        if (static_cast<Eigen::Index>(roster.size()) > capacities[c]) {
            throw InvariantError("capacity", "college " + std::to_string(c) + " is over capacity");
        }
        for (const auto& e : roster) {
            if (e.student < 0 || e.student >= matching.num_students() || matching.assignment[e.student] != c) {
                throw InvariantError("matching", "roster of college " + std::to_string(c) +
                                                     " disagrees with the assignment");
            }
        }
        listed += static_cast<Eigen::Index>(roster.size());
    }
    if (listed != matching.matched_count()) {
        throw InvariantError("matching", "assignment lists students missing from rosters");
    }
}

std::vector<BlockingPair> find_blocking_pairs(const Matching& matching, const SampledMarket& market,
                                              const Eigen::VectorXi& capacities) {
    const Eigen::Index c_count = market.num_colleges();
    std::vector<bool> has_free_seat(static_cast<std::size_t>(c_count));
    std::vector<RosterEntry> worst(static_cast<std::size_t>(c_count));
    for (Eigen::Index c = 0; c < c_count; ++c) {
        const auto& roster = matching.rosters[static_cast<std::size_t>(c)];
        has_free_seat[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(roster.size()) < capacities[c];
        if (!roster.empty()) {
            // With "prefers" as less-than, the maximum is the least preferred admit.
            worst[static_cast<std::size_t>(c)] = *std::max_element(
                roster.begin(), roster.end(), [](const RosterEntry& a, const RosterEntry& b) {
                    return college_prefers(a.score, a.student, b.score, b.student);
                });
        }
    }

    std::vector<BlockingPair> out;
    for (Eigen::Index s = 0; s < market.num_students(); ++s) {
        const int current = matching.assignment[s];
        for (Eigen::Index r = 0; r < c_count; ++r) {
            const int c = market.prefs(s, r);
            if (c == current) break;
            const auto& w = worst[static_cast<std::size_t>(c)];
            if (has_free_seat[static_cast<std::size_t>(c)] ||
                college_prefers(market.scores(s, c), static_cast<int>(s), w.score, w.student)) {
                out.push_back({static_cast<int>(s), c});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const BlockingPair& a, const BlockingPair& b) {
        return a.student != b.student ? a.student < b.student : a.college < b.college;
    });
    return out;
}

void write_matching_csv(std::ostream& os, const Matching& matching, const SampledMarket& market) {
    os << "student,college,score\n";
    for (Eigen::Index s = 0; s < matching.num_students(); ++s) {
        const int c = matching.assignment[s];
        os << s << ',' << c << ',';
        if (c != kUnmatched) os << format_double(market.scores(s, c));
        os << '\n';
    }
}

} // namespace noisymatch

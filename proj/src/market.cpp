#include "noisymatch/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "noisymatch/errors.hpp"
#include "noisymatch/format.hpp"

namespace noisymatch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

} // namespace

// --- value distributions -------------------------------------------------------

void validate(const ValueDistribution& dist) {
    std::visit(overloaded{
                   [](const UniformValues& u) {
                       if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.hi > u.lo)) {
                           throw ConfigError("values.hi", "uniform value support needs finite lo < hi");
                       }
                   },
                   [](const PiecewiseLinearValues& p) {
                       const auto& k = p.knots;
                       if (k.size() < 2) throw ConfigError("values.knots", "need at least two knots");
                       if (k.front().second != 0.0 || k.back().second != 1.0) {
                           throw ConfigError("values.knots", "CDF must start at 0 and end at 1");
                       }
                       for (std::size_t i = 1; i < k.size(); ++i) {
                           if (!(k[i].first > k[i - 1].first)) {
                               throw ConfigError("values.knots", "knot values must be strictly increasing");
                           }
                           if (k[i].second < k[i - 1].second) {
                               throw ConfigError("values.knots", "CDF must be non-decreasing");
                           }
                       }
                       // Connected support: no flat stretch strictly inside (0, 1).
                       for (std::size_t i = 1; i < k.size(); ++i) {
                           const bool flat = k[i].second == k[i - 1].second;
                           if (flat && k[i].second > 0.0 && k[i].second < 1.0) {
                               throw ConfigError("values.knots", "support must be a single interval");
                           }
                       }
                   },
               },
               dist);
}

double cdf(const ValueDistribution& dist, double v) {
    return std::visit(overloaded{
                          [&](const UniformValues& u) { return std::clamp((v - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                          [&](const PiecewiseLinearValues& p) {
                              const auto& k = p.knots;
                              if (v <= k.front().first) return 0.0;
                              if (v >= k.back().first) return 1.0;
                              const auto it = std::upper_bound(
                                  k.begin(), k.end(), v,
                                  [](double x, const std::pair<double, double>& knot) { return x < knot.first; });
                              const auto& hi = *it;
                              const auto& lo = *(it - 1);
                              const double t = (v - lo.first) / (hi.first - lo.first);
                              return lo.second + t * (hi.second - lo.second);
                          },
                      },
                      dist);
}

double quantile(const ValueDistribution& dist, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must lie in [0, 1]");
    return std::visit(overloaded{
                          [&](const UniformValues& u) { return u.lo + q * (u.hi - u.lo); },
                          [&](const PiecewiseLinearValues& p) {
                              const auto& k = p.knots;
                              // First knot whose cumulative probability reaches q.
                              const auto it = std::lower_bound(
                                  k.begin(), k.end(), q,
                                  [](const std::pair<double, double>& knot, double x) { return knot.second < x; });
                              if (it == k.begin()) return k.front().first;
                              const auto& hi = *it;
                              const auto& lo = *(it - 1);
                              const double t = (q - lo.second) / (hi.second - lo.second);
                              return lo.first + t * (hi.first - lo.first);
                          },
                      },
                      dist);
}

std::pair<double, double> support(const ValueDistribution& dist) {
    return std::visit(overloaded{
                          [](const UniformValues& u) { return std::pair{u.lo, u.hi}; },
                          [](const PiecewiseLinearValues& p) {
                              const auto& k = p.knots;
                              // Leading/trailing flat segments carry no mass.
                              std::size_t first = 0;
                              while (first + 1 < k.size() && k[first + 1].second == 0.0) ++first;
                              std::size_t last = k.size() - 1;
                              while (last > 0 && k[last - 1].second == 1.0) --last;
                              return std::pair{k[first].first, k[last].first};
                          },
                      },
                      dist);
}

double draw(const ValueDistribution& dist, Rng& rng) { return quantile(dist, rng.uniform01()); }

double v_s_threshold(const ValueDistribution& dist, double total_capacity_fraction) {
    if (!(total_capacity_fraction > 0.0 && total_capacity_fraction < 1.0)) {
        throw DomainError("v_s_threshold: S must lie in (0, 1)");
    }
    validate(dist);
    return quantile(dist, 1.0 - total_capacity_fraction);
}

HolderReport holder_exponent_check(const ValueDistribution& dist, double gamma,
                                   std::span<const double> delta_grid, double growth_tolerance) {
    if (!(gamma > 0.0)) throw DomainError("holder_exponent_check: gamma must be positive");
    validate(dist);
    HolderReport report;
    if (delta_grid.empty()) return report;

    const auto [lo, hi] = support(dist);
    constexpr int kSteps = 2000;
    std::vector<double> probes;
    probes.reserve(kSteps + 1);
    for (int i = 0; i <= kSteps; ++i) probes.push_back(lo + (hi - lo) * i / kSteps);
    if (const auto* p = std::get_if<PiecewiseLinearValues>(&dist)) {
        for (const auto& knot : p->knots) probes.push_back(knot.first);
    }

    std::vector<double> deltas(delta_grid.begin(), delta_grid.end());
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    for (const double delta : deltas) {
        if (!(delta > 0.0)) throw DomainError("holder_exponent_check: deltas must be positive");
        double worst_mass = 0.0;
        for (const double v : probes) {
            worst_mass = std::max(worst_mass, cdf(dist, v + delta) - cdf(dist, v));
            worst_mass = std::max(worst_mass, cdf(dist, v) - cdf(dist, v - delta));
        }
        report.ratio_by_delta.emplace_back(delta, worst_mass / std::pow(delta, gamma));
    }
    report.fitted_constant = report.ratio_by_delta.front().second;
    report.worst_ratio = 0.0;
    for (const auto& [delta, ratio] : report.ratio_by_delta) {
        report.worst_ratio = std::max(report.worst_ratio, ratio);
    }
    report.pass = report.worst_ratio <= growth_tolerance * report.fitted_constant;
    return report;
}

// --- preferences -----------------------------------------------------------------

std::string kind_name(const PreferenceModel& model) {
    return std::visit(overloaded{
                          [](const UniformRandomPreferences&) { return std::string("uniform_random"); },
                          [](const CommonRankingPreferences&) { return std::string("common_ranking"); },
                          [](const TieredByCoalitionPreferences&) { return std::string("tiered_by_coalition"); },
                          [](const ExplicitPreferences&) { return std::string("explicit"); },
                      },
                      model);
}

void draw_ranking(const PreferenceModel& model, std::span<const int> coalition_of_college,
                  std::span<int> out, Rng& rng) {
    const auto n = out.size();
    std::visit(overloaded{
                   [&](const UniformRandomPreferences&) {
                       std::iota(out.begin(), out.end(), 0);
                       shuffle(out.begin(), out.end(), rng);
                   },
                   [&](const CommonRankingPreferences& p) {
                       if (p.order.empty()) {
                           std::iota(out.begin(), out.end(), 0);
                       } else {
                           std::copy(p.order.begin(), p.order.end(), out.begin());
                       }
                   },
                   [&](const TieredByCoalitionPreferences&) {
                       std::iota(out.begin(), out.end(), 0);
                       std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
                           return coalition_of_college[static_cast<std::size_t>(a)] <
                                  coalition_of_college[static_cast<std::size_t>(b)];
                       });
                       std::size_t start = 0;
                       while (start < n) {
                           const int tier = coalition_of_college[static_cast<std::size_t>(out[start])];
                           std::size_t end = start;
                           while (end < n && coalition_of_college[static_cast<std::size_t>(out[end])] == tier) ++end;
                           shuffle(out.begin() + static_cast<std::ptrdiff_t>(start),
                                   out.begin() + static_cast<std::ptrdiff_t>(end), rng);
                           start = end;
                       }
                   },
                   [&](const ExplicitPreferences& p) {
                       double u = rng.uniform01();
                       std::size_t pick = p.rankings.size() - 1;
                       for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
                           if (u < p.probabilities[i]) {
                               pick = i;
                               break;
                           }
                           u -= p.probabilities[i];
                       }
                       std::copy(p.rankings[pick].begin(), p.rankings[pick].end(), out.begin());
                   },
               },
               model);
}

namespace {

bool is_permutation_of_ids(const std::vector<int>& order, std::size_t n) {
    if (order.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (const int id : order) {
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[static_cast<std::size_t>(id)]) return false;
        seen[static_cast<std::size_t>(id)] = true;
    }
    return true;
}

void validate_preferences(const PreferenceModel& model, std::size_t n_colleges) {
    std::visit(overloaded{
                   [](const UniformRandomPreferences&) {},
                   [](const TieredByCoalitionPreferences&) {},
                   [&](const CommonRankingPreferences& p) {
                       if (!p.order.empty() && !is_permutation_of_ids(p.order, n_colleges)) {
                           throw ConfigError("preferences.order", "must be a permutation of all college ids");
                       }
                   },
                   [&](const ExplicitPreferences& p) {
                       if (p.rankings.empty() || p.rankings.size() != p.probabilities.size()) {
                           throw ConfigError("preferences.rankings",
                                             "need one probability per ranking and at least one ranking");
                       }
                       double total = 0.0;
                       for (std::size_t i = 0; i < p.rankings.size(); ++i) {
                           if (!is_permutation_of_ids(p.rankings[i], n_colleges)) {
                               throw ConfigError("preferences.rankings",
                                                 "ranking " + std::to_string(i) + " is not a permutation of all colleges");
                           }
                           if (!(p.probabilities[i] >= 0.0)) {
                               throw ConfigError("preferences.probabilities", "must be non-negative");
                           }
                           total += p.probabilities[i];
                       }
                       if (std::abs(total - 1.0) > 1e-9) {
                           throw ConfigError("preferences.probabilities", "must sum to 1");
                       }
                   },
               },
               model);
}

} // namespace

// --- economy ---------------------------------------------------------------------

std::int64_t total_capacity(const EconomyConfig& config) {
    std::int64_t total = 0;
    for (const auto& c : config.colleges) total += c.capacity;
    return total;
}

Eigen::VectorXi capacities(const EconomyConfig& config) {
    Eigen::VectorXi out(config.num_colleges());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out[i] = static_cast<int>(config.colleges[static_cast<std::size_t>(i)].capacity);
    }
    return out;
}

Eigen::VectorXi coalition_of(const EconomyConfig& config) {
    Eigen::VectorXi out(config.num_colleges());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = config.colleges[static_cast<std::size_t>(i)].coalition;
    return out;
}

std::vector<int> coalition_members(const EconomyConfig& config, int coalition) {
    std::vector<int> out;
    for (const auto& c : config.colleges) {
        if (c.coalition == coalition) out.push_back(c.id);
    }
    return out;
}

std::vector<std::string> validate(const EconomyConfig& config) {
    std::vector<std::string> warnings;
    if (config.n_students < 1) throw ConfigError("n_students", "must be positive");
    if (config.colleges.empty()) throw ConfigError("colleges", "need at least one college");
    if (config.coalitions.empty()) throw ConfigError("coalitions", "need at least one coalition");
    if (!(config.alpha > 0.0)) throw ConfigError("alpha", "must be positive");

    for (std::size_t k = 0; k < config.coalitions.size(); ++k) {
        const auto& co = config.coalitions[k];
        if (co.id != static_cast<int>(k)) {
            throw ConfigError("coalitions[" + std::to_string(k) + "].id", "ids must be 0, 1, 2, ... in order");
        }
        validate(co.values);
        validate(co.noise);
    }
    std::vector<int> members(config.coalitions.size(), 0);
    for (std::size_t i = 0; i < config.colleges.size(); ++i) {
        const auto& c = config.colleges[i];
        const std::string where = "colleges[" + std::to_string(i) + "]";
        if (c.id != static_cast<int>(i)) throw ConfigError(where + ".id", "ids must be 0, 1, 2, ... in order");
        if (c.capacity < 0) throw ConfigError(where + ".capacity", "must be non-negative");
        if (c.coalition < 0 || static_cast<std::size_t>(c.coalition) >= config.coalitions.size()) {
            throw ConfigError(where + ".coalition", "references unknown coalition " + std::to_string(c.coalition));
        }
        ++members[static_cast<std::size_t>(c.coalition)];
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (members[k] == 0) {
            throw ConfigError("coalitions[" + std::to_string(k) + "]", "coalition has no colleges");
        }
    }
    validate_preferences(config.preferences, config.colleges.size());

    const std::int64_t seats = total_capacity(config);
    if (seats >= config.n_students) {
        throw InvariantError("overdemand", "total capacity " + std::to_string(seats) +
                                               " must be below the student count " +
                                               std::to_string(config.n_students));
    }
    const double bound = config.alpha * static_cast<double>(config.n_students) /
                         static_cast<double>(config.colleges.size());
    for (const auto& c : config.colleges) {
        if (static_cast<double>(c.capacity) > bound) {
            warnings.push_back("capacity regularity: college " + std::to_string(c.id) + " has " +
                               std::to_string(c.capacity) + " seats, above alpha * N / C = " +
                               std::to_string(bound));
        }
    }
    return warnings;
}

std::vector<std::int64_t> apportion_seats(std::span<const double> fractions, std::int64_t n_students) {
    const double n = static_cast<double>(n_students);
    double sum = 0.0;
    for (const double f : fractions) {
        if (!(f >= 0.0)) throw ConfigError("capacity", "capacity fractions must be non-negative");
        sum += f;
    }
    const auto target = static_cast<std::int64_t>(std::llround(sum * n));
    std::vector<std::int64_t> seats(fractions.size());
    std::vector<double> remainder(fractions.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = fractions[i] * n;
        seats[i] = static_cast<std::int64_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(seats[i]);
        assigned += seats[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t j = 0; assigned < target && j < order.size(); ++j, ++assigned) ++seats[order[j]];
    return seats;
}

std::vector<std::int64_t> split_seats(std::int64_t total, std::int64_t count) {
    if (count < 1) throw ConfigError("colleges", "need at least one college");
    std::vector<std::int64_t> seats(static_cast<std::size_t>(count), total / count);
    for (std::int64_t i = 0; i < total % count; ++i) ++seats[static_cast<std::size_t>(i)];
    return seats;
}

// --- sampling ----------------------------------------------------------------------

SampledMarket sample_market(const EconomyConfig& config, std::uint64_t replication) {
    validate(config);
    const Eigen::Index n = config.n_students;
    const Eigen::Index c_count = config.num_colleges();
    const Eigen::Index k_count = config.num_coalitions();

    SampledMarket m;
    m.coalition_of = coalition_of(config);

    Rng value_rng(derive_seed(config.master_seed, replication, StreamTag::values));
    m.values.resize(n, k_count);
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index k = 0; k < k_count; ++k) {
            m.values(s, k) = draw(config.coalitions[static_cast<std::size_t>(k)].values, value_rng);
        }
    }

    Rng pref_rng(derive_seed(config.master_seed, replication, StreamTag::preferences));
    m.prefs.resize(n, c_count);
    const std::span<const int> coal(m.coalition_of.data(), static_cast<std::size_t>(c_count));
    for (Eigen::Index s = 0; s < n; ++s) {
        draw_ranking(config.preferences, coal,
                     std::span<int>(m.prefs.row(s).data(), static_cast<std::size_t>(c_count)), pref_rng);
    }

    Rng noise_rng(derive_seed(config.master_seed, replication, StreamTag::noise));
    m.scores.resize(n, c_count);
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index c = 0; c < c_count; ++c) {
            const int k = m.coalition_of[c];
            m.scores(s, c) =
                m.values(s, k) + draw(config.coalitions[static_cast<std::size_t>(k)].noise, noise_rng);
        }
    }
    return m;
}

void write_market_csv(std::ostream& os, const SampledMarket& market) {
    os << "student";
    for (Eigen::Index k = 0; k < market.values.cols(); ++k) os << ",value_" << k;
    os << ",ranking";
    for (Eigen::Index c = 0; c < market.scores.cols(); ++c) os << ",score_" << c;
    os << '\n';
    for (Eigen::Index s = 0; s < market.num_students(); ++s) {
        os << s;
        for (Eigen::Index k = 0; k < market.values.cols(); ++k) os << ',' << format_double(market.values(s, k));
        os << ',';
        for (Eigen::Index r = 0; r < market.prefs.cols(); ++r) os << (r ? " " : "") << market.prefs(s, r);
        for (Eigen::Index c = 0; c < market.scores.cols(); ++c) os << ',' << format_double(market.scores(s, c));
        os << '\n';
    }
}

} // namespace noisymatch

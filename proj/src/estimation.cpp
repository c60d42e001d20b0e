#include "noisymatch/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "noisymatch/errors.hpp"
#include "noisymatch/format.hpp"

namespace noisymatch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::vector<AffordCurveRequest> afford_requests_of(const ExperimentPlan& plan) {
    std::vector<AffordCurveRequest> out;
    for (const auto& r : plan.curves) {
        if (const auto* a = std::get_if<AffordCurveRequest>(&r)) out.push_back(*a);
    }
    return out;
}

} // namespace

std::string curve_id(const CurveRequest& request) {
    return std::visit(overloaded{
                          [](const MatchCurveRequest& m) { return "match_v" + std::to_string(m.coalition); },
                          [](const AffordCurveRequest& a) {
                              return "afford_coalition" + std::to_string(a.coalition) + "_trim" +
                                     format_double(a.trim_epsilon);
                          },
                      },
                      request);
}

std::vector<double> equal_width_bins(double lo, double hi, int count) {
    if (count < 1 || !(hi > lo)) throw ConfigError("value_bins", "need hi > lo and at least one bin");
    std::vector<double> edges(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / count;
    edges.back() = hi;
    return edges;
}

void validate(const ExperimentPlan& plan, const EconomyConfig& config) {
    if (plan.replications < 1) throw ConfigError("replications", "must be at least 1");
    if (plan.value_bins.size() < 2) throw ConfigError("value_bins", "need at least two edges");
    for (std::size_t i = 1; i < plan.value_bins.size(); ++i) {
        if (!(plan.value_bins[i] > plan.value_bins[i - 1])) {
            throw ConfigError("value_bins", "edges must be strictly increasing");
        }
    }
    for (const auto& r : plan.curves) {
        const int k = std::visit([](const auto& req) { return req.coalition; }, r);
        if (k < 0 || k >= config.num_coalitions()) {
            throw ConfigError("curves", "unknown coalition " + std::to_string(k));
        }
        if (const auto* a = std::get_if<AffordCurveRequest>(&r)) {
            if (!(a->trim_epsilon >= 0.0 && a->trim_epsilon < 1.0)) {
                throw ConfigError("curves.trim_epsilon", "must lie in [0, 1)");
            }
        }
    }
}

std::vector<int> trim_coalition(const CutoffVector& cutoffs, std::span<const int> coalition, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("trim_coalition: epsilon must lie in [0, 1)");
    std::vector<int> order(coalition.begin(), coalition.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return cutoffs[a] != cutoffs[b] ? cutoffs[a] < cutoffs[b] : a < b;
    });
    const auto drop = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(coalition.size())));
    std::vector<int> kept(order.begin() + static_cast<std::ptrdiff_t>(std::min(drop, order.size())), order.end());
    std::sort(kept.begin(), kept.end());
    return kept;
}

bool affords_any(const SampledMarket& market, Eigen::Index student, const CutoffVector& cutoffs,
                 std::span<const int> colleges) {
    return std::any_of(colleges.begin(), colleges.end(),
                       [&](int c) { return affords(market.scores(student, c), cutoffs[c]); });
}

ReplicationRecord run_replication(const EconomyConfig& config, const ExperimentPlan& plan,
                                  std::uint64_t replication) {
    const SampledMarket market = sample_market(config, replication);
    const Eigen::VectorXi caps = capacities(config);
    Matching matching = deferred_acceptance(market, caps);
    check_consistency(matching, caps);

    ReplicationRecord rec;
    rec.replication = replication;
    rec.values = market.values;
    rec.assignment = matching.assignment;
    rec.cutoffs = extract_cutoffs(matching, caps);
    rec.tie_breaks = matching.tie_breaks;

    const auto requests = afford_requests_of(plan);
    const Eigen::Index n = market.num_students();
    rec.afford.resize(n, static_cast<Eigen::Index>(requests.size()));
    for (std::size_t j = 0; j < requests.size(); ++j) {
        const auto members = coalition_members(config, requests[j].coalition);
        rec.trimmed_sets.push_back(trim_coalition(rec.cutoffs, members, requests[j].trim_epsilon));
        for (Eigen::Index s = 0; s < n; ++s) {
            rec.afford(s, static_cast<Eigen::Index>(j)) =
                affords_any(market, s, rec.cutoffs, rec.trimmed_sets.back()) ? 1 : 0;
        }
    }

    if (plan.verify) {
        ReplicationChecks checks;
        checks.blocking_pairs =
            static_cast<std::int64_t>(find_blocking_pairs(matching, market, caps).size());
        for (Eigen::Index s = 0; s < n; ++s) {
            if (demand(s, market, rec.cutoffs) != rec.assignment[s]) ++checks.demand_mismatches;
        }
        const Eigen::VectorXi excess = check_market_clearing(market, rec.cutoffs, caps);
        checks.clearing_violations = (excess.array() != 0).count();
        rec.checks = checks;
    }
    if (!plan.record_cutoffs) rec.cutoffs.resize(0);
    return rec;
}

ReplicationRecords run_replications(const EconomyConfig& config, const ExperimentPlan& plan) {
    validate(config);
    validate(plan, config);

    ReplicationRecords out;
    out.afford_requests = afford_requests_of(plan);
    out.coalition_of = coalition_of(config);
    out.capacities = capacities(config);
    out.n_students = config.n_students;
    out.total_seats = total_capacity(config);

    const auto reps = static_cast<std::size_t>(plan.replications);
    out.runs.resize(reps);
    std::vector<std::exception_ptr> errors(reps);

    unsigned workers = plan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                out.runs[r] = run_replication(config, plan, r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (std::size_t r = 0; r < reps; ++r) {
        if (!errors[r]) continue;
        try {
            std::rethrow_exception(errors[r]);
        } catch (const std::exception& e) {
            throw ReplicationError(r, e.what());
        }
    }
    return out;
}

// --- curves --------------------------------------------------------------------------

MatchCurve estimate_curve(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                          std::span<const double> edges, std::string id) {
    if (edges.size() < 2) throw ConfigError("value_bins", "need at least two edges");
    if (values.size() != outcomes.size()) throw ConfigError("records", "values and outcomes differ in length");
    const std::size_t nbins = edges.size() - 1;
    std::vector<std::int64_t> hits(nbins, 0);
    std::vector<std::int64_t> counts(nbins, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (v < edges.front() || v > edges.back()) continue;
        auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
        b = std::min(b, nbins) - 1;
        ++counts[b];
        hits[b] += outcomes[i] ? 1 : 0;
    }
    MatchCurve curve;
    curve.id = std::move(id);
    curve.bins.reserve(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        CurveBin bin{edges[b], edges[b + 1], std::nullopt, 0.0, counts[b]};
        if (counts[b] > 0) {
            const double p = static_cast<double>(hits[b]) / static_cast<double>(counts[b]);
            bin.probability = p;
            bin.stderr = std::sqrt(p * (1.0 - p) / static_cast<double>(counts[b]));
        }
        curve.bins.push_back(bin);
    }
    return curve;
}

namespace {

void require_records(const ReplicationRecords& records) {
    if (records.runs.empty()) throw ConfigError("records", "no replications recorded");
}

} // namespace

MatchCurve estimate_match_curve(const ReplicationRecords& records, std::span<const double> edges, int coalition) {
    require_records(records);
    std::vector<double> values;
    std::vector<std::uint8_t> matched;
    values.reserve(records.runs.size() * static_cast<std::size_t>(records.n_students));
    matched.reserve(values.capacity());
    for (const auto& run : records.runs) {
        if (coalition < 0 || coalition >= run.values.cols()) throw ConfigError("coalition", "unknown coalition");
        for (Eigen::Index s = 0; s < run.assignment.size(); ++s) {
            values.push_back(run.values(s, coalition));
            matched.push_back(run.assignment[s] != kUnmatched ? 1 : 0);
        }
    }
    return estimate_curve(values, matched, edges, curve_id(MatchCurveRequest{coalition}));
}

MatchCurve estimate_afford_curve(const ReplicationRecords& records, const AffordCurveRequest& request,
                                 std::span<const double> edges) {
    require_records(records);
    const auto it = std::find_if(records.afford_requests.begin(), records.afford_requests.end(),
                                 [&](const AffordCurveRequest& r) {
                                     return r.coalition == request.coalition &&
                                            r.trim_epsilon == request.trim_epsilon;
                                 });
    if (it == records.afford_requests.end()) {
        throw ConfigError("curves", "affordability was not recorded for " + curve_id(request));
    }
    const auto col = static_cast<Eigen::Index>(it - records.afford_requests.begin());
    std::vector<double> values;
    std::vector<std::uint8_t> afford;
    for (const auto& run : records.runs) {
        for (Eigen::Index s = 0; s < run.assignment.size(); ++s) {
            values.push_back(run.values(s, request.coalition));
            afford.push_back(run.afford(s, col));
        }
    }
    return estimate_curve(values, afford, edges, curve_id(request));
}

namespace {

std::int64_t total_count(const MatchCurve& curve) {
    std::int64_t n = 0;
    for (const auto& b : curve.bins) n += b.count;
    return n;
}

} // namespace

AttenuationMetrics attenuation_metrics(const MatchCurve& curve, double v_s, std::optional<double> margin) {
    AttenuationMetrics m;
    const auto total = static_cast<double>(total_count(curve));
    if (total == 0.0) return m;
    const double width = margin.value_or(curve.bins.empty() ? 0.0 : curve.bins.front().hi - curve.bins.front().lo);
    for (const auto& b : curve.bins) {
        if (!b.probability) continue;
        const double p = *b.probability;
        const double weight = static_cast<double>(b.count) / total;
        if (b.hi <= v_s) {
            m.below_mass += weight * p;
        } else if (b.lo < v_s) {
            m.below_mass += weight * p * (v_s - b.lo) / (b.hi - b.lo);
        }
        if (b.hi <= v_s - width) {
            m.step_deviation = std::max(m.step_deviation, p);
        } else if (b.lo >= v_s + width) {
            m.step_deviation = std::max(m.step_deviation, 1.0 - p);
        }
    }
    return m;
}

double amplification_metrics(const MatchCurve& curve, double s_total, std::int64_t min_count) {
    double sup = 0.0;
    for (const auto& b : curve.bins) {
        if (b.probability && b.count >= min_count) sup = std::max(sup, std::abs(*b.probability - s_total));
    }
    return sup;
}

double curve_mass(const MatchCurve& curve) {
    const auto total = static_cast<double>(total_count(curve));
    if (total == 0.0) return 0.0;
    double mass = 0.0;
    for (const auto& b : curve.bins) {
        if (b.probability) mass += static_cast<double>(b.count) / total * *b.probability;
    }
    return mass;
}

std::int64_t monotonicity_violations(const MatchCurve& curve, double z) {
    std::int64_t violations = 0;
    const CurveBin* prev = nullptr;
    for (const auto& b : curve.bins) {
        if (!b.probability) continue;
        if (prev) {
            const double allowed = z * (prev->stderr + b.stderr);
            if (*prev->probability - *b.probability > allowed) ++violations;
        }
        prev = &b;
    }
    return violations;
}

std::optional<double> steepest_ascent(const MatchCurve& curve) {
    std::optional<double> where;
    double best = -std::numeric_limits<double>::infinity();
    const CurveBin* prev = nullptr;
    for (const auto& b : curve.bins) {
        if (!b.probability) continue;
        if (prev) {
            const double rise = *b.probability - *prev->probability;
            if (rise > best) {
                best = rise;
                where = 0.5 * (prev->mid() + b.mid());
            }
        }
        prev = &b;
    }
    return where;
}

CoalitionSorting coalition_sorting(const ReplicationRecords& records, int coalition, double threshold) {
    require_records(records);
    CoalitionSorting out;
    std::int64_t above = 0;
    double n = 0.0;
    double sum_v = 0.0, sum_m = 0.0, sum_vv = 0.0, sum_mm = 0.0, sum_vm = 0.0;
    for (const auto& run : records.runs) {
        for (Eigen::Index s = 0; s < run.assignment.size(); ++s) {
            const int c = run.assignment[s];
            const bool in_k = c != kUnmatched && records.coalition_of[c] == coalition;
            const double v = run.values(s, coalition);
            const double m = in_k ? 1.0 : 0.0;
            if (in_k) {
                ++out.matched;
                if (v > threshold) ++above;
            }
            n += 1.0;
            sum_v += v;
            sum_m += m;
            sum_vv += v * v;
            sum_mm += m * m;
            sum_vm += v * m;
        }
    }
    out.share_above = out.matched > 0 ? static_cast<double>(above) / static_cast<double>(out.matched) : 0.0;
    const double cov = sum_vm / n - (sum_v / n) * (sum_m / n);
    const double var_v = sum_vv / n - (sum_v / n) * (sum_v / n);
    const double var_m = sum_mm / n - (sum_m / n) * (sum_m / n);
    out.value_correlation = (var_v > 0.0 && var_m > 0.0) ? cov / std::sqrt(var_v * var_m) : 0.0;
    return out;
}

// --- output ----------------------------------------------------------------------------

void write_curve_csv_header(std::ostream& os) {
    os << "curve_id,replication_set,bin_lo,bin_hi,probability,stderr,count\n";
}

void write_curve_csv_rows(std::ostream& os, const MatchCurve& curve, const std::string& replication_set) {
    for (const auto& b : curve.bins) {
        os << curve.id << ',' << replication_set << ',' << format_double(b.lo) << ',' << format_double(b.hi)
           << ',' << (b.probability ? format_double(*b.probability) : std::string("NA")) << ','
           << format_double(b.stderr) << ',' << b.count << '\n';
    }
}

void write_cutoff_csv(std::ostream& os, const ReplicationRecords& records) {
    os << "replication,college,coalition,cutoff\n";
    for (const auto& run : records.runs) {
        for (Eigen::Index c = 0; c < run.cutoffs.size(); ++c) {
            os << run.replication << ',' << c << ',' << records.coalition_of[c] << ','
               << format_double(run.cutoffs[c]) << '\n';
        }
    }
}

} // namespace noisymatch

#include "noisymatch/run.hpp"

#include <chrono>
#include <fstream>

#include "noisymatch/errors.hpp"
#include "noisymatch/format.hpp"

namespace noisymatch {

namespace {

std::int64_t coalition_seats(const EconomyConfig& e, int coalition) {
    std::int64_t seats = 0;
    for (const auto& c : e.colleges) {
        if (c.coalition == coalition) seats += c.capacity;
    }
    return seats;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

} // namespace

std::vector<MetricRow> compute_metrics(const RunSpec& spec, const ReplicationRecords& records,
                                       const std::vector<MatchCurve>& curves) {
    const EconomyConfig& e = spec.economy;
    const double n = static_cast<double>(e.n_students);
    const double s_total = static_cast<double>(records.total_seats) / n;
    std::vector<MetricRow> rows;
    rows.push_back({"s_total", s_total});

    std::int64_t min_matched = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_matched = 0;
    std::int64_t ties = 0;
    for (const auto& run : records.runs) {
        const std::int64_t matched = (run.assignment.array() != kUnmatched).count();
        min_matched = std::min(min_matched, matched);
        max_matched = std::max(max_matched, matched);
        ties += run.tie_breaks;
    }
    rows.push_back({"matched_per_replication_min", static_cast<double>(min_matched)});
    rows.push_back({"matched_per_replication_max", static_cast<double>(max_matched)});
    rows.push_back({"tie_breaks", static_cast<double>(ties)});

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& request = spec.plan.curves[i];
        const auto& curve = curves[i];
        double s = s_total;
        int coalition = 0;
        if (const auto* a = std::get_if<AffordCurveRequest>(&request)) {
            coalition = a->coalition;
            s = static_cast<double>(coalition_seats(e, coalition)) / n;
        } else {
            coalition = std::get<MatchCurveRequest>(request).coalition;
        }
        const double v_s = v_s_threshold(e.coalitions[static_cast<std::size_t>(coalition)].values, s);
        const auto att = attenuation_metrics(curve, v_s);
        const std::string p = curve.id + ".";
        rows.push_back({p + "v_s", v_s});
        rows.push_back({p + "below_mass", att.below_mass});
        rows.push_back({p + "step_deviation", att.step_deviation});
        rows.push_back({p + "sup_deviation", amplification_metrics(curve, s)});
        rows.push_back({p + "mass", curve_mass(curve)});
        rows.push_back({p + "monotonicity_violations", static_cast<double>(monotonicity_violations(curve))});
        if (const auto v = steepest_ascent(curve)) rows.push_back({p + "steepest_ascent", *v});
    }

    for (const auto& co : e.coalitions) {
        const double s = static_cast<double>(coalition_seats(e, co.id)) / n;
        if (!(s > 0.0 && s < 1.0)) continue;
        const double v_s = v_s_threshold(co.values, s);
        const auto sorting = coalition_sorting(records, co.id, v_s);
        const std::string p = "coalition" + std::to_string(co.id) + ".";
        rows.push_back({p + "v_s", v_s});
        rows.push_back({p + "share_matched_above_v_s", sorting.share_above});
        rows.push_back({p + "value_match_correlation", sorting.value_correlation});
        if (spec.plan.record_cutoffs) {
            double sum = 0.0;
            std::int64_t count = 0;
            for (const auto& run : records.runs) {
                for (Eigen::Index c = 0; c < run.cutoffs.size(); ++c) {
                    if (records.coalition_of[c] == co.id && std::isfinite(run.cutoffs[c])) {
                        sum += run.cutoffs[c];
                        ++count;
                    }
                }
            }
            if (count > 0) rows.push_back({p + "mean_cutoff", sum / static_cast<double>(count)});
        }
    }
    return rows;
}

RunOutputs run_experiment(const RunSpec& spec, const std::filesystem::path& out_dir, bool emit_cutoffs) {
    const auto started = std::chrono::steady_clock::now();
    const auto warnings = validate(spec.economy);
    validate(spec.plan, spec.economy);

    RunSpec effective = spec;
    effective.plan.record_cutoffs = spec.plan.record_cutoffs || emit_cutoffs;

    RunOutputs out;
    out.records = run_replications(effective.economy, effective.plan);
    for (const auto& request : effective.plan.curves) {
        if (const auto* m = std::get_if<MatchCurveRequest>(&request)) {
            out.curves.push_back(estimate_match_curve(out.records, effective.plan.value_bins, m->coalition));
        } else {
            out.curves.push_back(estimate_afford_curve(out.records, std::get<AffordCurveRequest>(request),
                                                       effective.plan.value_bins));
        }
    }

    const std::string hash = config_hash(spec);
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;

    {
        auto os = open_output(out_dir / "curves.csv");
        write_curve_csv_header(os);
        const std::string reps = "0-" + std::to_string(effective.plan.replications - 1);
        for (const auto& curve : out.curves) write_curve_csv_rows(os, curve, reps);
        files.push_back("curves.csv");
    }
    {
        auto os = open_output(out_dir / "metrics.csv");
        os << "metric,value,config_hash\n";
        for (const auto& row : compute_metrics(effective, out.records, out.curves)) {
            os << row.metric << ',' << format_double(row.value) << ',' << hash << '\n';
        }
        files.push_back("metrics.csv");
    }
    if (effective.plan.record_cutoffs) {
        auto os = open_output(out_dir / "cutoffs.csv");
        write_cutoff_csv(os, out.records);
        files.push_back("cutoffs.csv");
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.manifest = nlohmann::json{
        {"config_hash", hash},
        {"master_seed", spec.economy.master_seed},
        {"tool_version", kToolVersion},
        {"wall_clock_seconds", seconds},
        {"outputs", files},
        {"warnings", warnings},
        {"tie_break_rule", "equal scores admit the lower student id first"},
        {"effective_config", canonical_json(spec)},
    };
    {
        auto os = open_output(out_dir / "manifest.json");
        os << out.manifest.dump(2) << '\n';
    }
    return out;
}

} // namespace noisymatch

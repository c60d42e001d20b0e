#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisymatch/config.hpp"
#include "noisymatch/estimation.hpp"

namespace noisymatch {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunOutputs {
    ReplicationRecords records;
    std::vector<MatchCurve> curves;
    nlohmann::json manifest;
};

struct MetricRow {
    std::string metric;
    double value = 0.0;
};

/// Summary metrics for every curve and coalition in a finished run.
std::vector<MetricRow> compute_metrics(const RunSpec& spec, const ReplicationRecords& records,
                                       const std::vector<MatchCurve>& curves);

/// Runs the experiment and writes curves.csv, metrics.csv, cutoffs.csv (when
/// `emit_cutoffs`) and manifest.json into out_dir. CSV bytes depend only on the
/// spec, never on plan.threads.
RunOutputs run_experiment(const RunSpec& spec, const std::filesystem::path& out_dir, bool emit_cutoffs);

} // namespace noisymatch

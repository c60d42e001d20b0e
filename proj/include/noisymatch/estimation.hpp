#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "noisymatch/cutoffs.hpp"
#include "noisymatch/market.hpp"
#include "noisymatch/matching.hpp"

namespace noisymatch {

/// p(v): probability of matching anywhere, binned by the true value at `coalition`.
struct MatchCurveRequest {
    int coalition = 0;
};

/// p(v, C'): probability of affording some college of `coalition` after dropping
/// the floor(trim_epsilon * |coalition|) lowest-cutoff colleges.
struct AffordCurveRequest {
    int coalition = 0;
    double trim_epsilon = 0.0;
};

using CurveRequest = std::variant<MatchCurveRequest, AffordCurveRequest>;

std::string curve_id(const CurveRequest& request);

/// `count` equal-width bins over [lo, hi], as count + 1 edges.
std::vector<double> equal_width_bins(double lo, double hi, int count);

struct ExperimentPlan {
    std::int64_t replications = 100;
    std::vector<double> value_bins = equal_width_bins(0.0, 1.0, 50);
    std::vector<CurveRequest> curves{MatchCurveRequest{}};
    bool record_cutoffs = true;
    /// Run stability, cutoff-characterization and clearing checks on every replication.
    bool verify = false;
    unsigned threads = 0;  ///< 0 = hardware concurrency
};

void validate(const ExperimentPlan& plan, const EconomyConfig& config);

struct ReplicationChecks {
    std::int64_t blocking_pairs = 0;
    std::int64_t demand_mismatches = 0;  ///< students whose demand at the cutoffs differs from DA
    std::int64_t clearing_violations = 0;  ///< colleges with nonzero excess demand
};

struct ReplicationRecord {
    std::uint64_t replication = 0;
    Eigen::MatrixXd values;        ///< student x coalition
    Eigen::VectorXi assignment;    ///< student -> college or kUnmatched
    CutoffVector cutoffs;
    /// student x afford-request indicator, in the order the afford requests appear in the plan.
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> afford;
    std::vector<std::vector<int>> trimmed_sets;  ///< C' per afford request
    std::int64_t tie_breaks = 0;
    std::optional<ReplicationChecks> checks;
};

struct ReplicationRecords {
    std::vector<ReplicationRecord> runs;  ///< sorted by replication index
    std::vector<AffordCurveRequest> afford_requests;
    Eigen::VectorXi coalition_of;
    Eigen::VectorXi capacities;
    std::int64_t n_students = 0;
    std::int64_t total_seats = 0;
};

/// A module error raised inside one replication.
class ReplicationError : public std::runtime_error {
public:
    ReplicationError(std::uint64_t replication, const std::string& what)
        : std::runtime_error("replication " + std::to_string(replication) + ": " + what),
          replication_(replication) {}

    std::uint64_t replication() const noexcept { return replication_; }

private:
    std::uint64_t replication_;
};

/// One replication: sample with child seeds for index r, run DA, extract cutoffs,
/// record outcomes. Pure function of (config, plan, r).
ReplicationRecord run_replication(const EconomyConfig& config, const ExperimentPlan& plan,
                                  std::uint64_t replication);

/// All replications, on up to plan.threads workers. Output does not depend on the
/// thread count.
ReplicationRecords run_replications(const EconomyConfig& config, const ExperimentPlan& plan);

/// Drops the floor(epsilon * |coalition|) colleges with the lowest cutoffs
/// (lower id first on ties). Returns the survivors in ascending id order.
std::vector<int> trim_coalition(const CutoffVector& cutoffs, std::span<const int> coalition, double epsilon);

/// 1 if the student affords some college in `colleges`.
bool affords_any(const SampledMarket& market, Eigen::Index student, const CutoffVector& cutoffs,
                 std::span<const int> colleges);

struct CurveBin {
    double lo = 0.0;
    double hi = 0.0;
    std::optional<double> probability;  ///< empty for bins with no observations
    double stderr = 0.0;
    std::int64_t count = 0;

    double mid() const { return 0.5 * (lo + hi); }
};

struct MatchCurve {
    std::string id;
    std::vector<CurveBin> bins;
};

/// Observations with value outside [edges.front(), edges.back()] are dropped;
/// the last bin is closed on the right.
MatchCurve estimate_curve(std::span<const double> values, std::span<const std::uint8_t> outcomes,
                          std::span<const double> edges, std::string id);

/// Fraction matched per bin of the true value at `coalition`.
MatchCurve estimate_match_curve(const ReplicationRecords& records, std::span<const double> edges,
                                int coalition = 0);

/// Fraction able to afford the trimmed coalition per bin. The request must have
/// been recorded by run_replications.
MatchCurve estimate_afford_curve(const ReplicationRecords& records, const AffordCurveRequest& request,
                                 std::span<const double> edges);

struct AttenuationMetrics {
    double below_mass = 0.0;
    double step_deviation = 0.0;
};

/// below_mass: integral of p(v) against the empirical value distribution over
/// v < v_s. step_deviation: max |p - 1{v > v_s}| over bins at least `margin`
/// away from v_s (default one bin width).
AttenuationMetrics attenuation_metrics(const MatchCurve& curve, double v_s,
                                       std::optional<double> margin = std::nullopt);

/// max |p - s_total| over bins with at least `min_count` observations.
double amplification_metrics(const MatchCurve& curve, double s_total, std::int64_t min_count = 1);

/// Integral of p(v) against the empirical value distribution.
double curve_mass(const MatchCurve& curve);

/// Adjacent populated bin pairs where p drops by more than z * (se_a + se_b).
/// Bins drawn from the same replications are correlated, so the plain sum is
/// used rather than the independent-error sqrt(se_a^2 + se_b^2).
std::int64_t monotonicity_violations(const MatchCurve& curve, double z = 2.0);

/// Midpoint between the two populated bins with the largest rise; a point
/// estimate of where the curve steps up.
std::optional<double> steepest_ascent(const MatchCurve& curve);

struct CoalitionSorting {
    std::int64_t matched = 0;          ///< observations matched into the coalition
    double share_above = 0.0;          ///< of those, fraction with value above the threshold
    double value_correlation = 0.0;    ///< Pearson corr(v_k, 1{matched into k}) over all students
};

CoalitionSorting coalition_sorting(const ReplicationRecords& records, int coalition, double threshold);

// --- output -------------------------------------------------------------------------

/// curve_id,replication_set,bin_lo,bin_hi,probability,stderr,count
void write_curve_csv_header(std::ostream& os);
void write_curve_csv_rows(std::ostream& os, const MatchCurve& curve, const std::string& replication_set);

/// replication,college,coalition,cutoff
void write_cutoff_csv(std::ostream& os, const ReplicationRecords& records);

} // namespace noisymatch

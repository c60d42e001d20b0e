#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "noisymatch/noise.hpp"
#include "noisymatch/rng.hpp"

namespace noisymatch {

// --- student values ----------------------------------------------------------

struct UniformValues {
    double lo = 0.0;
    double hi = 1.0;
};

/// CDF interpolated linearly between (value, cumulative probability) knots.
/// Knots start at probability 0 and end at probability 1.
struct PiecewiseLinearValues {
    std::vector<std::pair<double, double>> knots;
};

using ValueDistribution = std::variant<UniformValues, PiecewiseLinearValues>;

void validate(const ValueDistribution& dist);
double cdf(const ValueDistribution& dist, double v);
/// Inverse CDF. For flat CDF segments returns the left end.
double quantile(const ValueDistribution& dist, double q);
std::pair<double, double> support(const ValueDistribution& dist);
double draw(const ValueDistribution& dist, Rng& rng);

/// Value v_S with mass S above it.
double v_s_threshold(const ValueDistribution& dist, double total_capacity_fraction);

struct HolderReport {
    bool pass = false;
    double fitted_constant = 0.0;  ///< sup_v mass((v, v+delta)) / delta^gamma at the largest delta
    double worst_ratio = 0.0;      ///< max over the delta grid of the same quantity
    std::vector<std::pair<double, double>> ratio_by_delta;
};

/// Checks mass((v, v + delta)) <= K delta^gamma over a grid of v for each delta.
/// K is fitted at the largest delta; the check fails when the ratio at smaller
/// deltas grows past `growth_tolerance * K`.
HolderReport holder_exponent_check(const ValueDistribution& dist, double gamma,
                                   std::span<const double> delta_grid,
                                   double growth_tolerance = 2.0);

// --- preferences -------------------------------------------------------------

struct UniformRandomPreferences {};

/// Every student ranks colleges in `order`; empty means ascending id.
struct CommonRankingPreferences {
    std::vector<int> order;
};

/// Lower-indexed coalitions first, uniformly random within each coalition.
struct TieredByCoalitionPreferences {};

struct ExplicitPreferences {
    std::vector<std::vector<int>> rankings;
    std::vector<double> probabilities;
};

using PreferenceModel = std::variant<UniformRandomPreferences, CommonRankingPreferences,
                                     TieredByCoalitionPreferences, ExplicitPreferences>;

std::string kind_name(const PreferenceModel& model);

// --- economy -----------------------------------------------------------------

struct College {
    int id = 0;
    std::int64_t capacity = 0;
    int coalition = 0;
};

struct Coalition {
    int id = 0;
    ValueDistribution values = UniformValues{};
    NoiseSpec noise = UniformNoise{};
};

struct EconomyConfig {
    std::int64_t n_students = 2000;
    std::vector<College> colleges;
    std::vector<Coalition> coalitions;
    PreferenceModel preferences = UniformRandomPreferences{};
    std::uint64_t master_seed = 0;
    double alpha = 2.0;  ///< capacity regularity constant for the warning check

    Eigen::Index num_colleges() const { return static_cast<Eigen::Index>(colleges.size()); }
    Eigen::Index num_coalitions() const { return static_cast<Eigen::Index>(coalitions.size()); }
};

std::int64_t total_capacity(const EconomyConfig& config);
Eigen::VectorXi capacities(const EconomyConfig& config);
Eigen::VectorXi coalition_of(const EconomyConfig& config);
/// College ids belonging to one coalition, ascending.
std::vector<int> coalition_members(const EconomyConfig& config, int coalition);

/// Throws ConfigError for malformed fields and InvariantError("overdemand", ...)
/// when total capacity is not below the student count. Returns warnings for
/// soft violations such as the capacity regularity bound.
std::vector<std::string> validate(const EconomyConfig& config);

/// Integer seat counts round(S_c * n) with largest-remainder correction so the
/// seats sum exactly to round(sum S_c * n). Ties go to the lower index.
std::vector<std::int64_t> apportion_seats(std::span<const double> fractions, std::int64_t n_students);

/// Equal split of `total` seats over `count` colleges.
std::vector<std::int64_t> split_seats(std::int64_t total, std::int64_t count);

// --- sampled market ------------------------------------------------------------

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXi = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SampledMarket {
    Eigen::MatrixXd values;  ///< student x coalition true values
    RowMatrixXi prefs;       ///< student x rank -> college id, best first
    RowMatrixXd scores;      ///< student x college estimated values
    Eigen::VectorXi coalition_of;  ///< college -> coalition

    Eigen::Index num_students() const { return scores.rows(); }
    Eigen::Index num_colleges() const { return scores.cols(); }
};

/// Samples replication `replication` of the economy. Values, preferences and
/// noise use separate streams derived from (master_seed, replication).
SampledMarket sample_market(const EconomyConfig& config, std::uint64_t replication = 0);

/// Draws one ranking from the model.
void draw_ranking(const PreferenceModel& model, std::span<const int> coalition_of_college,
                  std::span<int> out, Rng& rng);

/// Debug dump: student,values...,ranking,scores...
void write_market_csv(std::ostream& os, const SampledMarket& market);

} // namespace noisymatch

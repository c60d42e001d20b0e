#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "noisymatch/rng.hpp"

namespace noisymatch {

// Noise distributions. Parameters are in the distribution's native units.

struct UniformNoise {
    double lo = 0.0;
    double hi = 1.0;
};

struct GaussianNoise {
    double mean = 0.0;
    double sd = 1.0;
};

struct ExponentialNoise {
    double rate = 1.0;
};

struct GumbelNoise {
    double location = 0.0;
    double scale = 1.0;
};

/// Support [scale, inf), survival (scale / x)^shape.
struct ParetoNoise {
    double shape = 2.0;
    double scale = 0.3;
};

/// Point mass at zero. Colleges observe true values exactly.
struct NoNoise {};

using NoiseSpec =
    std::variant<UniformNoise, GaussianNoise, ExponentialNoise, GumbelNoise, ParetoNoise, NoNoise>;

/// Throws ConfigError naming the first invalid parameter (e.g. "noise.sd").
void validate(const NoiseSpec& spec);

/// Short kind tag: "uniform", "gaussian", "exponential", "gumbel", "pareto", "none".
std::string kind_name(const NoiseSpec& spec);

/// Human-readable form, e.g. "Pareto(shape=2, scale=0.3)".
std::string describe(const NoiseSpec& spec);

/// One draw by inverse transform (Box-Muller for the Gaussian).
double draw(const NoiseSpec& spec, Rng& rng);

/// n i.i.d. draws. Validates the spec first.
Eigen::VectorXd sample(const NoiseSpec& spec, Rng& rng, Eigen::Index n);

/// Pr[X > x], closed form.
double survival(const NoiseSpec& spec, double x);

/// Inverse CDF at p in (0, 1).
double quantile(const NoiseSpec& spec, double p);

/// Closed interval containing the support; infinite ends for unbounded tails.
std::pair<double, double> support(const NoiseSpec& spec);

// --- extreme-value diagnostics ----------------------------------------------

struct MaxStat {
    std::int64_t n = 0;
    double mean_max = 0.0;
    double var_max = 0.0;  ///< unbiased sample variance over replications
};

/// Monte Carlo mean and variance of the maximum of n draws, for each n in the grid.
/// Requires replications >= 2 and every n >= 1.
std::vector<MaxStat> max_order_stats(const NoiseSpec& spec, std::span<const std::int64_t> n_grid,
                                     std::int64_t replications, Rng& rng);

struct BetaEstimate {
    double beta_hat = 0.0;
    double beta_stderr = 0.0;
    std::vector<MaxStat> curve;
};

/// Negated least-squares slope of log Var[max] against log n.
/// The grid needs >= 3 distinct sizes spanning >= 2 decades.
BetaEstimate estimate_beta(const NoiseSpec& spec, std::span<const std::int64_t> n_grid,
                           std::int64_t replications, Rng& rng);

/// Same regression on precomputed maxima statistics.
BetaEstimate fit_beta(std::vector<MaxStat> curve);

struct TailRatio {
    double ratio = 0.0;
    double stderr = 0.0;   ///< zero for closed-form evaluations
    bool closed_form = true;
};

/// Pr[X > x + d | X > x] from the closed-form survival function.
/// Requires d > 0 and Pr[X > x] > 0.
TailRatio long_tail_ratio(const NoiseSpec& spec, double x, double d);

/// Monte Carlo estimate of the same ratio with binomial standard error.
/// Throws InsufficientTailMassError if no draw exceeds x.
TailRatio long_tail_ratio_empirical(const NoiseSpec& spec, double x, double d,
                                    std::int64_t samples, Rng& rng);

enum class TailClass { max_concentrating, long_tailed, intermediate };

std::string to_string(TailClass c);

/// Finite-sample stand-ins for the asymptotic regime definitions.
struct TailThresholds {
    double beta_min = 0.25;
    double ratio_min = 0.95;
    double probe_gap = 0.1;  ///< d in Pr[X > x + d | X > x]
    std::vector<double> probe_quantiles{0.9, 0.99, 0.999};
    std::vector<std::int64_t> n_grid{10, 100, 1000, 10000};
    std::int64_t replications = 2000;
    std::int64_t quantile_samples = 100000;
};

struct HazardPoint {
    double x = 0.0;
    double ratio = 0.0;
};

struct TailReport {
    double beta_hat = 0.0;
    double beta_stderr = 0.0;
    std::vector<HazardPoint> hazard_ratios;
    TailClass classification = TailClass::intermediate;
    std::vector<MaxStat> max_mean_curve;
};

/// Heuristic regime label. Pure function of its inputs.
///   max_concentrating: beta_hat > beta_min and ratios non-increasing in x
///   long_tailed: ratios non-decreasing in x and the last one >= ratio_min
TailClass classify_tail(double beta_hat, std::span<const HazardPoint> ratios,
                        const TailThresholds& thresholds);

/// Full diagnostic: beta regression, hazard ratios at empirical quantile probes,
/// classification. Degenerate noise has no defined beta and is reported as
/// max-concentrating with beta_hat = +inf.
TailReport tail_report(const NoiseSpec& spec, const TailThresholds& thresholds, Rng& rng);

} // namespace noisymatch

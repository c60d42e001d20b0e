#include "noisymatch/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>

#include "noisymatch/errors.hpp"

namespace noisymatch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(field, "must be a finite positive number, got " + std::to_string(v));
    }
}

void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) {
        throw ConfigError(field, "must be finite");
    }
}

} // namespace

void validate(const NoiseSpec& spec) {
    std::visit(overloaded{
                   [](const UniformNoise& u) {
                       require_finite(u.lo, "noise.lo");
                       require_finite(u.hi, "noise.hi");
                       if (!(u.hi > u.lo)) throw ConfigError("noise.hi", "must exceed noise.lo");
                   },
                   [](const GaussianNoise& g) {
                       require_finite(g.mean, "noise.mean");
                       require_positive(g.sd, "noise.sd");
                   },
                   [](const ExponentialNoise& e) { require_positive(e.rate, "noise.rate"); },
                   [](const GumbelNoise& g) {
                       require_finite(g.location, "noise.location");
                       require_positive(g.scale, "noise.scale");
                   },
                   [](const ParetoNoise& p) {
                       require_positive(p.shape, "noise.shape");
                       require_positive(p.scale, "noise.scale");
                   },
                   [](const NoNoise&) {},
               },
               spec);
}

std::string kind_name(const NoiseSpec& spec) {
    return std::visit(overloaded{
                          [](const UniformNoise&) { return std::string("uniform"); },
                          [](const GaussianNoise&) { return std::string("gaussian"); },
                          [](const ExponentialNoise&) { return std::string("exponential"); },
                          [](const GumbelNoise&) { return std::string("gumbel"); },
                          [](const ParetoNoise&) { return std::string("pareto"); },
                          [](const NoNoise&) { return std::string("none"); },
                      },
                      spec);
}

std::string describe(const NoiseSpec& spec) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const UniformNoise& u) { os << "Uniform(lo=" << u.lo << ", hi=" << u.hi << ")"; },
                   [&](const GaussianNoise& g) {
                       os << "Gaussian(mean=" << g.mean << ", sd=" << g.sd << ")";
                   },
                   [&](const ExponentialNoise& e) { os << "Exponential(rate=" << e.rate << ")"; },
                   [&](const GumbelNoise& g) {
                       os << "Gumbel(location=" << g.location << ", scale=" << g.scale << ")";
                   },
                   [&](const ParetoNoise& p) {
                       os << "Pareto(shape=" << p.shape << ", scale=" << p.scale << ")";
                   },
                   [&](const NoNoise&) { os << "None"; },
               },
               spec);
    return os.str();
}

double draw(const NoiseSpec& spec, Rng& rng) {
    return std::visit(overloaded{
                          [&](const UniformNoise& u) { return u.lo + (u.hi - u.lo) * rng.uniform01(); },
                          [&](const GaussianNoise& g) { return g.mean + g.sd * rng.standard_normal(); },
                          [&](const ExponentialNoise& e) { return -std::log(rng.uniform01()) / e.rate; },
                          [&](const GumbelNoise& g) {
                              return g.location - g.scale * std::log(-std::log(rng.uniform01()));
                          },
                          [&](const ParetoNoise& p) {
                              return p.scale * std::pow(rng.uniform01(), -1.0 / p.shape);
                          },
                          [](const NoNoise&) { return 0.0; },
                      },
                      spec);
}

Eigen::VectorXd sample(const NoiseSpec& spec, Rng& rng, Eigen::Index n) {
    if (n < 0) throw ConfigError("n", "sample count must be non-negative");
    validate(spec);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = draw(spec, rng);
    return out;
}

double survival(const NoiseSpec& spec, double x) {
    return std::visit(overloaded{
                          [&](const UniformNoise& u) {
                              if (x < u.lo) return 1.0;
                              if (x >= u.hi) return 0.0;
                              return (u.hi - x) / (u.hi - u.lo);
                          },
                          [&](const GaussianNoise& g) {
                              return 0.5 * std::erfc((x - g.mean) / (g.sd * std::numbers::sqrt2));
                          },
                          [&](const ExponentialNoise& e) { return x <= 0.0 ? 1.0 : std::exp(-e.rate * x); },
                          [&](const GumbelNoise& g) {
                              return -std::expm1(-std::exp(-(x - g.location) / g.scale));
                          },
                          [&](const ParetoNoise& p) {
                              return x <= p.scale ? 1.0 : std::pow(p.scale / x, p.shape);
                          },
                          [&](const NoNoise&) { return x < 0.0 ? 1.0 : 0.0; },
                      },
                      spec);
}

double quantile(const NoiseSpec& spec, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
    return std::visit(overloaded{
                          [&](const UniformNoise& u) { return u.lo + p * (u.hi - u.lo); },
                          [&](const GaussianNoise& g) {
                              return boost::math::quantile(boost::math::normal(g.mean, g.sd), p);
                          },
                          [&](const ExponentialNoise& e) { return -std::log1p(-p) / e.rate; },
                          [&](const GumbelNoise& g) { return g.location - g.scale * std::log(-std::log(p)); },
                          [&](const ParetoNoise& q) { return q.scale * std::pow(1.0 - p, -1.0 / q.shape); },
                          [](const NoNoise&) { return 0.0; },
                      },
                      spec);
}

std::pair<double, double> support(const NoiseSpec& spec) {
    return std::visit(overloaded{
                          [](const UniformNoise& u) { return std::pair{u.lo, u.hi}; },
                          [](const GaussianNoise&) { return std::pair{-kInf, kInf}; },
                          [](const ExponentialNoise&) { return std::pair{0.0, kInf}; },
                          [](const GumbelNoise&) { return std::pair{-kInf, kInf}; },
                          [](const ParetoNoise& p) { return std::pair{p.scale, kInf}; },
                          [](const NoNoise&) { return std::pair{0.0, 0.0}; },
                      },
                      spec);
}

std::vector<MaxStat> max_order_stats(const NoiseSpec& spec, std::span<const std::int64_t> n_grid,
                                     std::int64_t replications, Rng& rng) {
    validate(spec);
    if (replications < 2) {
        throw ConfigError("replications", "need at least 2 replications for a variance");
    }
    std::vector<MaxStat> out;
    out.reserve(n_grid.size());
    Eigen::VectorXd maxima(replications);
    for (const std::int64_t n : n_grid) {
        if (n < 1) throw ConfigError("n_grid", "every sample size must be >= 1");
        for (std::int64_t r = 0; r < replications; ++r) {
            double m = -kInf;
            for (std::int64_t i = 0; i < n; ++i) m = std::max(m, draw(spec, rng));
            maxima[r] = m;
        }
        const double mean = maxima.mean();
        const double var =
            (maxima.array() - mean).square().sum() / static_cast<double>(replications - 1);
        out.push_back({n, mean, var});
    }
    return out;
}

BetaEstimate fit_beta(std::vector<MaxStat> curve) {
    std::set<std::int64_t> distinct;
    for (const auto& s : curve) distinct.insert(s.n);
    if (distinct.size() < 3) throw ConfigError("n_grid", "need at least 3 distinct sample sizes");
    if (*distinct.rbegin() < 100 * *distinct.begin()) {
        throw ConfigError("n_grid", "sample sizes must span at least two decades");
    }
    const auto k = static_cast<Eigen::Index>(curve.size());
    Eigen::MatrixXd design(k, 2);
    Eigen::VectorXd response(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& s = curve[static_cast<std::size_t>(i)];
        if (!(s.var_max > 0.0)) {
            throw DegenerateVarianceError("variance of maxima is zero at n = " + std::to_string(s.n));
        }
        design(i, 0) = 1.0;
        design(i, 1) = std::log(static_cast<double>(s.n));
        response[i] = std::log(s.var_max);
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(response);
    const Eigen::VectorXd resid = response - design * coef;
    double stderr = 0.0;
    if (k > 2) {
        const double sigma2 = resid.squaredNorm() / static_cast<double>(k - 2);
        const Eigen::Matrix2d cov = (design.transpose() * design).inverse() * sigma2;
        stderr = std::sqrt(cov(1, 1));
    }
    return {-coef[1], stderr, std::move(curve)};
}

BetaEstimate estimate_beta(const NoiseSpec& spec, std::span<const std::int64_t> n_grid,
                           std::int64_t replications, Rng& rng) {
    return fit_beta(max_order_stats(spec, n_grid, replications, rng));
}

TailRatio long_tail_ratio(const NoiseSpec& spec, double x, double d) {
    validate(spec);
    if (!(d > 0.0)) throw DomainError("long_tail_ratio: d must be positive");
    // Memoryless tail; the survival function would underflow for large x.
    if (const auto* e = std::get_if<ExponentialNoise>(&spec); e && x >= 0.0) {
        return {std::exp(-e->rate * d), 0.0, true};
    }
    const double denom = survival(spec, x);
    if (!(denom > 0.0)) throw DomainError("long_tail_ratio: Pr[X > x] is zero at x = " + std::to_string(x));
    return {std::clamp(survival(spec, x + d) / denom, 0.0, 1.0), 0.0, true};
}

TailRatio long_tail_ratio_empirical(const NoiseSpec& spec, double x, double d,
                                    std::int64_t samples, Rng& rng) {
    validate(spec);
    if (!(d > 0.0)) throw DomainError("long_tail_ratio: d must be positive");
    if (samples < 1) throw ConfigError("samples", "must be positive");
    std::int64_t above_x = 0;
    std::int64_t above_xd = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double v = draw(spec, rng);
        if (v > x) {
            ++above_x;
            if (v > x + d) ++above_xd;
        }
    }
    if (above_x == 0) {
        throw InsufficientTailMassError("no draws exceeded x = " + std::to_string(x));
    }
    const double r = static_cast<double>(above_xd) / static_cast<double>(above_x);
    return {r, std::sqrt(r * (1.0 - r) / static_cast<double>(above_x)), false};
}

std::string to_string(TailClass c) {
    switch (c) {
        case TailClass::max_concentrating: return "MaxConcentrating";
        case TailClass::long_tailed: return "LongTailed";
        case TailClass::intermediate: return "Intermediate";
    }
    return "Intermediate";
}

TailClass classify_tail(double beta_hat, std::span<const HazardPoint> ratios,
                        const TailThresholds& thresholds) {
    constexpr double tol = 1e-12;
    bool non_increasing = true;
    bool non_decreasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        if (ratios[i].ratio > ratios[i - 1].ratio + tol) non_increasing = false;
        if (ratios[i].ratio < ratios[i - 1].ratio - tol) non_decreasing = false;
    }
    if (beta_hat > thresholds.beta_min && non_increasing) return TailClass::max_concentrating;
    if (!ratios.empty() && non_decreasing && ratios.back().ratio >= thresholds.ratio_min) {
        return TailClass::long_tailed;
    }
    return TailClass::intermediate;
}

TailReport tail_report(const NoiseSpec& spec, const TailThresholds& thresholds, Rng& rng) {
    validate(spec);
    TailReport report;
    if (std::holds_alternative<NoNoise>(spec)) {
        report.beta_hat = kInf;
        report.classification = TailClass::max_concentrating;
        return report;
    }

    BetaEstimate beta = estimate_beta(spec, thresholds.n_grid, thresholds.replications, rng);
    report.beta_hat = beta.beta_hat;
    report.beta_stderr = beta.beta_stderr;
    report.max_mean_curve = std::move(beta.curve);

    Eigen::VectorXd draws = sample(spec, rng, thresholds.quantile_samples);
    std::sort(draws.begin(), draws.end());
    for (const double q : thresholds.probe_quantiles) {
        const auto idx = std::clamp<Eigen::Index>(
            static_cast<Eigen::Index>(std::floor(q * static_cast<double>(draws.size()))), 0,
            draws.size() - 1);
        const double x = draws[idx];
        report.hazard_ratios.push_back({x, long_tail_ratio(spec, x, thresholds.probe_gap).ratio});
    }
    report.classification = classify_tail(report.beta_hat, report.hazard_ratios, thresholds);
    return report;
}

} // namespace noisymatch

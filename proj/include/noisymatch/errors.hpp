#pragma once

#include <stdexcept>
#include <string>

namespace noisymatch {

/// Malformed or out-of-range configuration. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A structural market invariant does not hold (e.g. the market is not overdemanded).
class InvariantError : public std::logic_error {
public:
    InvariantError(std::string invariant, const std::string& what)
        : std::logic_error(invariant + ": " + what), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Every observed maximum was identical, so a log-variance regression is undefined.
class DegenerateVarianceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No Monte Carlo draw landed beyond the probe point.
class InsufficientTailMassError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace noisymatch

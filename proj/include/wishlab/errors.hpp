#ifndef WISHLAB_ERRORS_HPP
#define WISHLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wishlab {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Inputs that are individually valid but inconsistent with each other
/// (grid vs regime, alpha vs regime, asymmetric matrix, ...).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Floating point failure: indefinite matrix, failed factorization, bad fit.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double offending = 0.0)
        : std::runtime_error(what), offending_(offending) {}

    /// The value that triggered the failure (e.g. the minimum eigenvalue).
    double offending() const noexcept { return offending_; }

private:
    double offending_;
};

/// alpha >= 2 or a series that does not converge for the requested alpha.
class UnsupportedRegime : public DomainError {
public:
    explicit UnsupportedRegime(const std::string& what) : DomainError(what) {}
};

/// Configuration file problems; carries every validation failure at once.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace wishlab

#endif // WISHLAB_ERRORS_HPP

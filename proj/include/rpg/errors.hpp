#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Table or vector shapes that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Out-of-domain scalar parameter (non-positive temperature, negative α, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// A distribution row with no support (every log-weight is -inf).
class DegenerateDistributionError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

/// Violated calling contract, e.g. selecting from an unexpanded search node.
class ContractError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " at byte " + std::to_string(byte_offset)), byte_offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Carries every problem found while validating an experiment config.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

}  // namespace rpg

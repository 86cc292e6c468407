#pragma once

#include <stdexcept>
#include <string>

namespace rlsac {

/// Shape or dimensionality of an input does not match the operation contract.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Configuration value outside the valid range (e.g. k >= N for a k-NN graph).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A minimal set that cannot produce a hypothesis (coincident points,
/// rank-deficient design matrix). Callers skip the sample.
struct DegenerateSampleError : std::runtime_error {
    explicit DegenerateSampleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An API contract was violated by the caller (e.g. backward on a non-scalar).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; message names the offending line.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File could not be read or written.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// No essential-matrix candidate passed the cheirality vote.
struct PoseRecoveryError : std::runtime_error {
    explicit PoseRecoveryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// NaN appeared in a training loss.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every minimal set of the scene has already been used.
struct ExhaustionError : std::runtime_error {
    explicit ExhaustionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rlsac

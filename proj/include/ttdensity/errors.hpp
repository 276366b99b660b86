#pragma once

#include <stdexcept>
#include <string>

namespace ttdensity {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularJacobian : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    int iterations;
    NoConvergence(const std::string& msg, int iters)
        : std::runtime_error(msg), iterations(iters) {}
};

struct OptimizerFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HessianNotPD : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PrecisionLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfChart : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct OutsideCoveredRegion : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct IllConditionedSolve : std::runtime_error {
    int sweep;
    IllConditionedSolve(const std::string& msg, int sweep_index)
        : std::runtime_error(msg), sweep(sweep_index) {}
};

struct NegativeLayerMass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapExceeded : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveSurrogate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace ttdensity

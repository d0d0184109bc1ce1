// Error taxonomy shared by all modules.
#pragma once

#include <stdexcept>
#include <string>

namespace fit {

// Common base so callers can catch any domain error uniformly.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : FitError {
    using FitError::FitError;
};
struct SingularGeometryError : FitError {
    using FitError::FitError;
};
struct ConfigError : FitError {
    using FitError::FitError;
};
struct CapacityError : FitError {
    using FitError::FitError;
};
struct NumericalInstabilityError : FitError {
    using FitError::FitError;
};
struct NonUniqueSteadyStateError : FitError {
    using FitError::FitError;
};
struct DivisionByZeroError : FitError {
    using FitError::FitError;
};
struct HermiticityError : FitError {
    using FitError::FitError;
};
struct NormalizationError : FitError {
    using FitError::FitError;
};
struct UndefinedStatisticError : FitError {
    using FitError::FitError;
};
struct CalibrationError : FitError {
    using FitError::FitError;
};

} // namespace fit

#pragma once

#include <stdexcept>
#include <string>

namespace kkmoe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV/file content could not be parsed.
struct MalformedInputError : Error {
    using Error::Error;
};

// A value violates a physical or mathematical precondition.
struct DomainError : Error {
    using Error::Error;
};

// Spectrum cannot support the requested statistic (e.g. constant kappa).
struct DegenerateDataError : Error {
    using Error::Error;
};

// Too few points to determine a fit.
struct UnderdeterminedFitError : Error {
    using Error::Error;
};

// Cholesky factorization failed after jitter escalation.
struct IllConditionedError : Error {
    using Error::Error;
};

// A principal-value pole does not coincide with a grid node.
struct AlignmentError : Error {
    using Error::Error;
};

// Sampler could not find a finite-posterior starting point.
struct InitializationError : Error {
    using Error::Error;
};

// Invalid or unsatisfiable run configuration.
struct ConfigurationError : Error {
    using Error::Error;
};

// End-to-end run exceeded its failure tolerance.
struct PipelineError : Error {
    using Error::Error;
};

} // namespace kkmoe

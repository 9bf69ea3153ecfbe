#pragma once

#include <stdexcept>
#include <string>

namespace ccs {

// Input outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Malformed or non-finite data (files, fitted values).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Equilibrium computation failed (no interior solution, non-convergence, non-unique root).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Request exceeds the memory budget.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A post-run invariant or verification gate failed.
struct VerificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ccs

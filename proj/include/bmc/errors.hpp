#ifndef BMC_ERRORS_HPP
#define BMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bmc {

/// Scenario violates a precondition (Assumption 1, Corollary-1 geometry,
/// unsupported configuration). CLI exit code 1.
struct InfeasibleScenario : std::runtime_error {
    explicit InfeasibleScenario(const std::string& what) : std::runtime_error(what) {}
};

/// A junction or oracle solve did not converge. CLI exit code 2.
struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed scenario/result files. CLI exit code 3.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Event detection found no sign change on the bracket.
struct NoEventError : std::runtime_error {
    NoEventError() : std::runtime_error("no event") {}
};

} // namespace bmc

#endif

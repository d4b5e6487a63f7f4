#pragma once

#include <stdexcept>
#include <string>

namespace dsmcbf {

/// The plant left the domain on which the crane model, V and the constraints
/// are defined (|theta| >= pi/2).
class ModelDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid parameters, gains, constraint bounds or scenario settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A guarantee of the DSM-CBF filter did not hold (infeasible QP or an
/// augmented state outside the safe set). Always indicates a bug or a
/// configuration without the control-sharing property.
class SafetyContractViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The QP solver hit its iteration cap or lost numerical consistency.
/// Distinct from a certified infeasible problem.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dsmcbf

#pragma once

#include <stdexcept>
#include <string>

namespace hybridkinetics {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model references something that does not exist or violates a structural invariant.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// A jump would drive a molecule count below zero.
class InfeasibleJumpError : public Error {
public:
    using Error::Error;
};

/// A simulation exceeded its jump budget.
class RunawayError : public Error {
public:
    using Error::Error;
};

/// The ODE integrator could not make progress (step size underflow or persistent negativity).
class StiffnessError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace hybridkinetics

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tomguide {

/// Malformed task file. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed input that breaks a task invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An action that is not among the legal compressed actions of the state.
class InvalidAction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Planner failures: state-space blow-up, non-convergence, resource caps.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StateSpaceTooLarge : public SolverError {
public:
    explicit StateSpaceTooLarge(std::size_t cap)
        : SolverError("state space exceeds cap of " + std::to_string(cap) + " states") {}
};

class NonConvergence : public SolverError {
public:
    NonConvergence(int sweeps, double residual)
        : SolverError("value iteration did not converge in " + std::to_string(sweeps) +
                      " sweeps (residual " + std::to_string(residual) + ")") {}
};

/// Lookup of an observable state the policy was not built for.
class MissingState : public SolverError {
public:
    using SolverError::SolverError;
};

/// Every posterior weight underflowed.
class DegeneratePosterior : public std::runtime_error {
public:
    DegeneratePosterior() : std::runtime_error("degenerate posterior: all weights below 1e-300") {}
};

}  // namespace tomguide

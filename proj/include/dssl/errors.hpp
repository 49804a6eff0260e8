#pragma once

#include <stdexcept>
#include <string>

namespace dssl {

// Invalid numeric structure in user-supplied data (non-stochastic rows,
// tied rate entries, bad thresholds, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A structurally invalid model (reducible or periodic chain, unvisited
// states in a training trace, ...).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Bad run configuration (shape mismatches, infeasible parameters).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario file could not be parsed; message carries the offending field.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A protocol state machine left its legal envelope (allocation did not
// terminate, policy chose an out-of-range channel, ...).
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// The engine's no-allocation watchdog tripped.
class LivelockError : public std::runtime_error {
public:
    explicit LivelockError(const std::string& what) : std::runtime_error(what) {}
};

// An internal numerical routine failed to converge or met a singular system.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dssl

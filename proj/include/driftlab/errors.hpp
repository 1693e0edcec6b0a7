#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A trajectory left the admissible region (|component| > threshold or nonfinite).
struct BlowUpError : Error {
    double time;
    BlowUpError(const std::string& msg, double t) : Error(msg), time(t) {}
};

/// Step budget of an integration exhausted before reaching the target time.
struct StepCapError : Error {
    using Error::Error;
};

/// Adaptive quadrature failed to reach the requested tolerance.
struct QuadratureError : Error {
    double achieved;
    QuadratureError(const std::string& msg, double est) : Error(msg), achieved(est) {}
};

/// Lattice point enumeration exceeded its count cap.
struct EnumerationCapError : Error {
    using Error::Error;
};

/// Invalid configuration or input file.
struct ConfigError : Error {
    using Error::Error;
};
}  // namespace driftlab

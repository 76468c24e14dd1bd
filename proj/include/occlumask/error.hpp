#pragma once

#include <stdexcept>
#include <string>

namespace occlumask {

/// Bad or inconsistent input data (dimension mismatch, malformed file, invalid spec).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation could not produce a meaningful result (degenerate geometry, infeasible curve).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed command line or configuration key.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace occlumask

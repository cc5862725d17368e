#pragma once

#include <stdexcept>
#include <string>

namespace softirl {

/// Tensor or vector shapes that do not line up (e.g. a policy built for a
/// different MDP).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value violates a documented invariant (probability rows not summing to
/// one, non-positive reference measure, beta <= 0 for soft DP, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exact trajectory enumeration was requested on an instance with more than
/// `enumeration_cap` trajectory records.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation on a dataset that needs at least one trajectory.
class EmptyDatasetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file. The message carries the path and offending field.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace softirl

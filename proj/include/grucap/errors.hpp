#pragma once

#include <stdexcept>
#include <string>

namespace grucap {

/// Shape or extent disagreement between tensors / grids.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated an operation's precondition (bad index, malformed caption, ...).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable / malformed input data (files, manifests, configs).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values where finite ones are required (NaN loss etc.).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace grucap

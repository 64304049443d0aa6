#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trits {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Operand shapes do not conform. The message names both shapes.
class ShapeError : public std::invalid_argument {
public:
    ShapeError(const std::string& op, const Shape& lhs, const Shape& rhs);
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A documented precondition was violated by the caller.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid or inconsistent configuration (unknown key, infeasible level count, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file (CSV, checkpoint, config).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values produced during evaluation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace trits

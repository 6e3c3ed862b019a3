#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpreg {

/// Point outside a kernel's domain (e.g. Wiener at x <= 0) or invalid numeric input.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Argument dimensions disagree with the kernel's input dimension.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation requires a structure class the expression does not have
/// (e.g. radial evaluation of a non-isotropic tree).
class StructureError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical procedure could not produce a trustworthy result
/// (jitter budget exhausted, too few usable scales, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested sample derivative exceeds what the kernel's regularity allows.
class GateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParseErrorKind {
    Syntax,
    UnknownName,
    UnknownParameter,
    ParameterRange,
    Semantic,
};

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::size_t offset, const std::string& message)
        : std::runtime_error(message + " at offset " + std::to_string(offset)),
          kind_(kind), offset_(offset) {}

    [[nodiscard]] ParseErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    ParseErrorKind kind_;
    std::size_t offset_;
};

} // namespace gpreg

#pragma once

#include "gpreg/kernel_expr.hpp"

#include <string>
#include <string_view>

namespace gpreg {

/// Parses the kernel DSL (whitespace-insensitive):
///
///   expr   := term ('+' term)*
///   term   := factor ('*' factor)*
///   factor := number | call | '(' expr ')'
///   call   := name '(' kwargs? ')'
///           | 'tensor(' expr (',' expr)+ ')'
///           | 'warp(' expr ',' warpname kwargs? ')'
///
/// Numbers inside a term multiply into a positive conic weight. A sum, or a
/// term carrying an explicit weight, becomes a Conic node; otherwise the
/// factor or product is returned as is. Throws ParseError with a byte offset.
[[nodiscard]] KernelExpr parse_kernel(std::string_view text);

/// Canonical text for an expression; parse_kernel(print_kernel(e)) == e.
/// Parameters equal to their defaults are omitted.
[[nodiscard]] std::string print_kernel(const KernelExpr& e);

/// Shortest decimal text that parses back to exactly v.
[[nodiscard]] std::string format_number(double v);

} // namespace gpreg

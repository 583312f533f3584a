#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace casbench {

/// Expression tree for polynomial text with integer coefficients.
///
/// Grammar (whitespace between tokens is ignored):
///
///     expr   := ['-'] term (('+' | '-') term)*
///     term   := factor ('*' factor)*
///     factor := base ('^' uint)?
///     base   := int | var | '(' expr ')'
///
/// Single-child sums and products collapse to the child, except a sum whose
/// only term is negated. Integer literals keep their digit string, so
/// coefficients have unbounded precision.
struct PolyExpr {
  enum class Kind { sum, product, power, variable, integer };

  Kind kind = Kind::integer;
  std::string token;              // variable name or decimal digits
  std::uint64_t exponent = 0;     // power only
  std::vector<PolyExpr> operands; // sum, product: terms/factors; power: {base}
  std::vector<bool> negated;      // sum only, parallel to operands

  static PolyExpr variable(std::string name);
  static PolyExpr integer(std::string digits);
  static PolyExpr power(PolyExpr base, std::uint64_t exponent);

  bool operator==(const PolyExpr&) const = default;
};

/// Parses `text`. Grammar violations throw Error{parse} carrying the byte
/// offset; identifiers absent from `variables` throw Error{validation}
/// naming the first such token.
PolyExpr parse_polynomial(std::string_view text, std::span<const std::string> variables);

/// Parses without checking identifiers against a variable list.
PolyExpr parse_polynomial_unchecked(std::string_view text);

/// Canonical text: no whitespace, parentheses only where needed to
/// reproduce the same tree on re-parse.
std::string to_string(const PolyExpr& expr);

/// Structural debug form, e.g. "sum(power(x,2),product(3,y))".
std::string describe(const PolyExpr& expr);

/// Distinct identifier tokens in first-occurrence order.
std::vector<std::string> identifiers(const PolyExpr& expr);

bool is_identifier(std::string_view s);

}  // namespace casbench

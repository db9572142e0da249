#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mscap/geometry.hpp"

namespace mscap {

/// Weight expression over x1, y1, x2, y2, r = |z|, r1 = |z1|, r2 = |z2|.
///
/// Grammar (loosest first):
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := ('-' | '+') unary | power
///   power := atom ('^' unary)?          right associative
///   atom  := number | variable | name '(' expr (',' expr)* ')' | '(' expr ')'
/// Functions: min, max (two or more arguments), exp, log, abs.
class Expression {
 public:
  enum class Kind { kNumber, kVariable, kNegate, kAdd, kSub, kMul, kDiv, kPow, kCall };
  enum class Var { kX1, kY1, kX2, kY2, kR, kR1, kR2 };
  enum class Func { kMin, kMax, kExp, kLog, kAbs };

  struct Node {
    Kind kind = Kind::kNumber;
    double value = 0.0;
    Var var = Var::kX1;
    Func func = Func::kMin;
    std::vector<std::shared_ptr<const Node>> args;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expression();  ///< the constant 0

  /// Throws PARSE_ERROR; the message carries the 1-based column. `line` is
  /// only used for the message.
  static Expression parse(std::string_view text, int line = 0, int column_offset = 0);
  static Expression constant(double v);

  /// Canonical text with minimal parentheses and round-trip number formatting.
  std::string print() const;
  const std::string& source() const { return source_; }

  /// Throws EVAL_GUARD for log of a non-positive value, division by zero, or
  /// any non-finite result.
  double evaluate(const Point& z) const;

  /// True when the tree has no variables; the value is then stored in *value.
  bool is_constant(double* value = nullptr) const;
  bool uses_second_variable() const;

  /// Structural equality of trees.
  bool operator==(const Expression& other) const;

  const NodePtr& root() const { return root_; }

 private:
  NodePtr root_;
  std::string source_;
};

}  // namespace mscap

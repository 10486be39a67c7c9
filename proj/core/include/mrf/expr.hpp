/// @file expr.hpp
/// @brief Scalar expression mini-language over state variables x1..xn and
///        control variables u1..um.
///
/// Grammar (usual precedence, ^ binds tightest and associates right):
///
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'x'<k> | 'u'<k> | fn '(' expr (',' expr)* ')'
///           | '(' expr ')'
///
/// Functions: sin cos tan atan sqrt abs exp log sign (unary),
///            atan2 min max (binary).
///
/// Evaluation is strict about domains: division by zero, log of a
/// non-positive value, sqrt of a negative value, and any non-finite
/// intermediate raise EvalError instead of propagating NaN/Inf.
///
/// Printing is an exact inverse of parsing: parse(print(e)) reproduces the
/// same tree (unary minus nodes included), and numeric literals are printed
/// with shortest round-trip formatting.

#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mrf {

/// Parse failure; `position` is the byte offset into the source text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Domain error during evaluation (division by zero, log(<=0), overflow, ...).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExprKind { Constant, StateVar, ControlVar, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class ExprFn { Sin, Cos, Tan, Atan, Sqrt, Abs, Exp, Log, Sign, Atan2, Min, Max };

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

/// Immutable AST node. `index` is 0-based for StateVar/ControlVar.
struct ExprNode {
  ExprKind kind;
  double value = 0.0;
  int index = 0;
  ExprFn fn = ExprFn::Sin;
  std::vector<ExprNodePtr> args;
};

/// A parsed scalar expression bound to fixed state/control dimensions.
/// Immutable and cheap to copy (shared AST).
class ScalarExpr {
 public:
  ScalarExpr() = default;

  /// Parses `text` with variables x1..x<n>, u1..u<m>. Throws ParseError with
  /// a byte position on syntax errors, unknown identifiers, out-of-range
  /// variable indices, and wrong function arity.
  static ScalarExpr parse(std::string_view text, int n, int m);

  /// Evaluates at (x, u). Sizes must match the bound dimensions.
  /// Throws EvalError on domain errors; never returns NaN or Inf.
  double eval(std::span<const double> x, std::span<const double> u) const;

  /// Canonical text form; parse(str(), n, m) rebuilds an identical tree.
  std::string str() const;

  /// Structural equality of the two trees (exact constant comparison).
  bool equals(const ScalarExpr& other) const;

  bool valid() const { return root_ != nullptr; }
  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  const ExprNodePtr& root() const { return root_; }

 private:
  ScalarExpr(ExprNodePtr root, int n, int m) : root_(std::move(root)), n_(n), m_(m) {}

  ExprNodePtr root_;
  int n_ = 0;
  int m_ = 0;
};

/// Shortest-round-trip formatting for doubles (the one used everywhere a
/// report or scenario file is written; guarantees byte-stable output).
std::string format_double(double v);

}  // namespace mrf

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gprm::gpir {

enum class ExprKind : std::uint8_t {
  Const,     // integer literal
  Var,       // lambda-bound identifier
  Quoted,    // 'inner, evaluation deferred
  SExpr,     // (operation args...)
  Label,     // (label L body)
  LabelRef,  // L
};

// Canonical spellings of the forms the engine and the desugarer know about.
namespace forms {
inline constexpr std::string_view kLambda = "lambda";
inline constexpr std::string_view kBeta = "beta";
inline constexpr std::string_view kIf = "if";
inline constexpr std::string_view kLabel = "label";
inline constexpr std::string_view kReturn = "return";
inline constexpr std::string_view kBegin = "begin";
inline constexpr std::string_view kLet = "let";
inline constexpr std::string_view kAssign = "assign";
}  // namespace forms

/// GPIR abstract syntax tree node. Immutable value type; copies are deep.
class Expr {
 public:
  static Expr constant(std::int32_t value);
  static Expr var(std::string name);
  static Expr quoted(Expr inner);
  static Expr sexpr(std::string op, std::vector<Expr> args);
  static Expr label(std::string name, Expr body);
  static Expr label_ref(std::string name);

  ExprKind kind() const noexcept { return kind_; }
  bool is(ExprKind k) const noexcept { return kind_ == k; }
  /// True for an S-expression whose operation is `op`.
  bool is_form(std::string_view op) const noexcept { return kind_ == ExprKind::SExpr && name_ == op; }

  std::int32_t value() const noexcept { return value_; }
  /// Variable name, operation name, or label name depending on kind.
  const std::string& name() const noexcept { return name_; }
  /// The quoted expression or the label body.
  const Expr& inner() const { return children_.front(); }
  /// S-expression operands (empty for other kinds).
  const std::vector<Expr>& args() const noexcept { return children_; }

  bool operator==(const Expr&) const = default;

 private:
  ExprKind kind_ = ExprKind::Const;
  std::int32_t value_ = 0;
  std::string name_;
  std::vector<Expr> children_;
};

/// Parses one GPIR program. Accepts λ/lambda/\ and β/beta/& spellings and `;`
/// line comments. Throws ParseError with a line and column on failure.
Expr parse(std::string_view text);

/// Single-line canonical rendering using ASCII form names.
std::string print(const Expr& e);

/// Multi-line rendering that breaks long S-expressions over indented lines.
/// Reparses to the same tree as print().
std::string print_pretty(const Expr& e, std::size_t width = 72);

/// Rewrites return/begin/let into lambda, beta and if.
Expr desugar(const Expr& e);

/// Structural equality up to consistent renaming of lambda-bound variables.
bool alpha_equal(const Expr& a, const Expr& b);

}  // namespace gprm::gpir

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gprm/gpir/expr.hpp"

namespace gprm::gpc {

struct Options {
  /// Value of NUM_THREADS. Unset: read from the host argument after the
  /// entry function's integer parameters.
  std::optional<int> num_threads;
};

/// Compiles GPC communication code to GPIR.
///
/// Accepted surface:
///
///   GPRM::Kernel::Class alias;                  kernel instance; calls are alias.method(...)
///   int GPRM::entry(int v0, int* a) { ... }     the entry function, exactly one
///   void helper(int n) { ... }                  helpers, may call themselves
///   [[gprm::tile(expr)]]                        before a function: run its results on tile expr
///
/// Statements are single assignments `int v = e;`, expression statements,
/// `return e;` and a final `if (c) ... else ...`. Expressions are integer
/// literals, names, calls and the operators + - * / % < <= > >= == !=.
///
/// Throws ParseError for syntax errors and CompileError for reassignment,
/// use before assignment, loops and mutual recursion.
gpir::Expr compile_to_expr(std::string_view source, const Options& options = {});

/// compile_to_expr rendered as GPIR text.
std::string compile(std::string_view source, const Options& options = {});

}  // namespace gprm::gpc

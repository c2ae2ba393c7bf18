#include "gprm/gpir/expr.hpp"

#include <map>
#include <utility>

#include "gprm/error.hpp"

namespace gprm::gpir {

Expr Expr::constant(std::int32_t value) {
  Expr e;
  e.kind_ = ExprKind::Const;
  e.value_ = value;
  return e;
}

Expr Expr::var(std::string name) {
  Expr e;
  e.kind_ = ExprKind::Var;
  e.name_ = std::move(name);
  return e;
}

Expr Expr::quoted(Expr inner) {
  Expr e;
  e.kind_ = ExprKind::Quoted;
  e.children_.push_back(std::move(inner));
  return e;
}

Expr Expr::sexpr(std::string op, std::vector<Expr> args) {
  Expr e;
  e.kind_ = ExprKind::SExpr;
  e.name_ = std::move(op);
  e.children_ = std::move(args);
  return e;
}

Expr Expr::label(std::string name, Expr body) {
  Expr e;
  e.kind_ = ExprKind::Label;
  e.name_ = std::move(name);
  e.children_.push_back(std::move(body));
  return e;
}

Expr Expr::label_ref(std::string name) {
  Expr e;
  e.kind_ = ExprKind::LabelRef;
  e.name_ = std::move(name);
  return e;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_into(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::Const:
      out += std::to_string(e.value());
      break;
    case ExprKind::Var:
    case ExprKind::LabelRef:
      out += e.name();
      break;
    case ExprKind::Quoted:
      out += '\'';
      print_into(e.inner(), out);
      break;
    case ExprKind::Label:
      out += "(label ";
      out += e.name();
      out += ' ';
      print_into(e.inner(), out);
      out += ')';
      break;
    case ExprKind::SExpr:
      out += '(';
      out += e.name();
      for (const Expr& a : e.args()) {
        out += ' ';
        print_into(a, out);
      }
      out += ')';
      break;
  }
}

void pretty_into(const Expr& e, std::size_t indent, std::size_t width, std::string& out) {
  std::string flat = print(e);
  if (indent + flat.size() <= width || (e.kind() != ExprKind::SExpr && e.kind() != ExprKind::Quoted &&
                                        e.kind() != ExprKind::Label)) {
    out += flat;
    return;
  }
  if (e.kind() == ExprKind::Quoted) {
    out += '\'';
    pretty_into(e.inner(), indent + 1, width, out);
    return;
  }
  const std::string pad(indent + 2, ' ');
  if (e.kind() == ExprKind::Label) {
    out += "(label " + e.name() + "\n" + pad;
    pretty_into(e.inner(), indent + 2, width, out);
    out += ')';
    return;
  }
  out += '(';
  out += e.name();
  for (const Expr& a : e.args()) {
    out += '\n';
    out += pad;
    pretty_into(a, indent + 2, width, out);
  }
  out += ')';
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_into(e, out);
  return out;
}

std::string print_pretty(const Expr& e, std::size_t width) {
  std::string out;
  pretty_into(e, 0, width, out);
  return out;
}

// ---------------------------------------------------------------------------
// Desugaring

namespace {

// Quote `e` for use as a deferred branch. Constants are idempotent under quote.
Expr quote_for_branch(Expr e) {
  if (e.is(ExprKind::Quoted)) {
    if (e.inner().is(ExprKind::Const)) return e;
    throw CompileError("nested quote: cannot defer an already quoted expression");
  }
  return Expr::quoted(std::move(e));
}

Expr make_return(Expr value) {
  std::vector<Expr> args;
  args.push_back(Expr::quoted(Expr::constant(1)));
  args.push_back(quote_for_branch(std::move(value)));
  args.push_back(Expr::quoted(Expr::constant(0)));
  return Expr::sexpr(std::string(forms::kIf), std::move(args));
}

}  // namespace

Expr desugar(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Const:
    case ExprKind::Var:
    case ExprKind::LabelRef:
      return e;
    case ExprKind::Quoted:
      return Expr::quoted(desugar(e.inner()));
    case ExprKind::Label:
      return Expr::label(e.name(), desugar(e.inner()));
    case ExprKind::SExpr:
      break;
  }

  if (e.is_form(forms::kAssign)) throw CompileError("assign outside let");

  if (e.is_form(forms::kReturn)) {
    if (e.args().size() != 1) throw CompileError("return expects exactly one expression");
    return make_return(desugar(e.args()[0]));
  }

  if (e.is_form(forms::kBegin)) {
    const std::size_t n = e.args().size();
    if (n == 0) throw CompileError("begin expects at least one expression");
    std::vector<Expr> lambda_args;
    for (std::size_t i = 1; i <= n; ++i) lambda_args.push_back(Expr::quoted(Expr::var("x" + std::to_string(i))));
    lambda_args.push_back(Expr::quoted(make_return(Expr::var("x" + std::to_string(n)))));
    std::vector<Expr> beta_args;
    beta_args.push_back(Expr::sexpr(std::string(forms::kLambda), std::move(lambda_args)));
    for (const Expr& a : e.args()) beta_args.push_back(desugar(a));
    return Expr::sexpr(std::string(forms::kBeta), std::move(beta_args));
  }

  if (e.is_form(forms::kLet)) {
    const auto& a = e.args();
    if (a.size() != 2 || !a[0].is_form(forms::kAssign) || a[0].args().size() != 2 ||
        !a[0].args()[0].is(ExprKind::Quoted) || !a[0].args()[0].inner().is(ExprKind::Var) ||
        !a[1].is(ExprKind::Quoted)) {
      throw CompileError("let expects (assign 'x <expr>) and a quoted body");
    }
    const Expr& binding = a[0].args()[0];
    std::vector<Expr> lambda_args{binding, desugar(a[1])};
    std::vector<Expr> beta_args;
    beta_args.push_back(Expr::sexpr(std::string(forms::kLambda), std::move(lambda_args)));
    beta_args.push_back(desugar(a[0].args()[1]));
    return Expr::sexpr(std::string(forms::kBeta), std::move(beta_args));
  }

  std::vector<Expr> args;
  args.reserve(e.args().size());
  for (const Expr& a : e.args()) args.push_back(desugar(a));
  return Expr::sexpr(e.name(), std::move(args));
}

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

struct AlphaScope {
  std::map<std::string, int> left;
  std::map<std::string, int> right;
  int depth = 0;
};

bool alpha_rec(const Expr& a, const Expr& b, AlphaScope scope);

// Binds the quoted formals of a lambda (or the single let variable) and
// compares the remaining operands in the extended scope.
bool alpha_binding_form(const Expr& a, const Expr& b, AlphaScope scope, std::size_t formals) {
  for (std::size_t i = 0; i < formals; ++i) {
    const Expr& fa = a.args()[i];
    const Expr& fb = b.args()[i];
    if (!fa.is(ExprKind::Quoted) || !fb.is(ExprKind::Quoted) || !fa.inner().is(ExprKind::Var) ||
        !fb.inner().is(ExprKind::Var)) {
      if (!alpha_rec(fa, fb, scope)) return false;
      continue;
    }
    const int id = ++scope.depth;
    scope.left[fa.inner().name()] = id;
    scope.right[fb.inner().name()] = id;
  }
  for (std::size_t i = formals; i < a.args().size(); ++i) {
    if (!alpha_rec(a.args()[i], b.args()[i], scope)) return false;
  }
  return true;
}

bool alpha_rec(const Expr& a, const Expr& b, AlphaScope scope) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::Const:
      return a.value() == b.value();
    case ExprKind::LabelRef:
      return a.name() == b.name();
    case ExprKind::Var: {
      auto la = scope.left.find(a.name());
      auto lb = scope.right.find(b.name());
      if (la == scope.left.end() || lb == scope.right.end()) {
        return la == scope.left.end() && lb == scope.right.end() && a.name() == b.name();
      }
      return la->second == lb->second;
    }
    case ExprKind::Quoted:
      return alpha_rec(a.inner(), b.inner(), scope);
    case ExprKind::Label:
      return a.name() == b.name() && alpha_rec(a.inner(), b.inner(), scope);
    case ExprKind::SExpr:
      break;
  }
  if (a.name() != b.name() || a.args().size() != b.args().size()) return false;
  if (a.is_form(forms::kLambda) && !a.args().empty()) {
    return alpha_binding_form(a, b, scope, a.args().size() - 1);
  }
  if (a.is_form(forms::kLet) && a.args().size() == 2 && a.args()[0].is_form(forms::kAssign) &&
      b.args()[0].is_form(forms::kAssign) && a.args()[0].args().size() == 2 &&
      b.args()[0].args().size() == 2) {
    const Expr& assign_a = a.args()[0];
    const Expr& assign_b = b.args()[0];
    if (!alpha_rec(assign_a.args()[1], assign_b.args()[1], scope)) return false;
    const Expr& va = assign_a.args()[0];
    const Expr& vb = assign_b.args()[0];
    if (va.is(ExprKind::Quoted) && vb.is(ExprKind::Quoted) && va.inner().is(ExprKind::Var) &&
        vb.inner().is(ExprKind::Var)) {
      const int id = ++scope.depth;
      scope.left[va.inner().name()] = id;
      scope.right[vb.inner().name()] = id;
    } else if (!alpha_rec(va, vb, scope)) {
      return false;
    }
    return alpha_rec(a.args()[1], b.args()[1], scope);
  }
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    if (!alpha_rec(a.args()[i], b.args()[i], scope)) return false;
  }
  return true;
}

}  // namespace

bool alpha_equal(const Expr& a, const Expr& b) { return alpha_rec(a, b, AlphaScope{}); }

}  // namespace gprm::gpir

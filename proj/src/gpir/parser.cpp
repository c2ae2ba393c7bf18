#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gprm/error.hpp"
#include "gprm/gpir/expr.hpp"

namespace gprm::gpir {

namespace {

// Raw S-expression read from text, before any GPIR interpretation.
struct Datum {
  enum class Kind { Atom, List, Quote } kind = Kind::Atom;
  std::string text;
  std::vector<Datum> items;
  std::size_t line = 0;
  std::size_t column = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Datum read_program() {
    skip_blank();
    if (at_end()) fail("empty program");
    Datum d = read();
    skip_blank();
    if (!at_end()) fail("unexpected input after the program");
    return d;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, column_); }

  void skip_blank() {
    while (!at_end()) {
      const char c = peek();
      if (c == ';') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        advance();
      } else {
        break;
      }
    }
  }

  static bool is_delimiter(char c) {
    return c == '(' || c == ')' || c == '\'' || c == ';' || c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
           c == '\f' || c == '\v';
  }

  Datum read() {
    skip_blank();
    if (at_end()) fail("unexpected end of input");
    Datum d;
    d.line = line_;
    d.column = column_;
    const char c = peek();
    if (c == ')') fail("unbalanced ')'");
    if (c == '\'') {
      advance();
      d.kind = Datum::Kind::Quote;
      d.items.push_back(read());
      return d;
    }
    if (c == '(') {
      advance();
      d.kind = Datum::Kind::List;
      for (;;) {
        skip_blank();
        if (at_end()) throw ParseError("unterminated list", d.line, d.column);
        if (peek() == ')') {
          advance();
          return d;
        }
        d.items.push_back(read());
      }
    }
    d.kind = Datum::Kind::Atom;
    while (!at_end() && !is_delimiter(peek())) {
      d.text += peek();
      advance();
    }
    return d;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

[[noreturn]] void fail_at(const Datum& d, const std::string& message) { throw ParseError(message, d.line, d.column); }

std::optional<std::int64_t> as_integer(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::size_t start = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (start == text.size()) return std::nullopt;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
  }
  std::int64_t v = 0;
  const char* first = text.data() + (text[0] == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return INT64_MAX;
  return v;
}

std::string canonical_operation(const std::string& name) {
  if (name == "\xCE\xBB" || name == "\\") return std::string(forms::kLambda);  // λ
  if (name == "\xCE\xB2" || name == "&") return std::string(forms::kBeta);     // β
  return name;
}

struct Binding {
  std::string name;
  int binder;
};

// Lexical scope: innermost binding last.
using Scope = std::vector<Binding>;

// Index of the innermost binding of `name`.
std::optional<std::size_t> position(const Scope& scope, const std::string& name) {
  for (std::size_t i = scope.size(); i-- > 0;) {
    if (scope[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<int> lookup(const Scope& scope, const std::string& name) {
  if (auto i = position(scope, name)) return scope[*i].binder;
  return std::nullopt;
}

class Converter {
 public:
  Expr program(const Datum& d) {
    if (d.kind == Datum::Kind::Quote) fail_at(d, "quoted literal is not a program");
    if (d.kind == Datum::Kind::Atom) fail_at(d, "a program must be an operation-rooted S-expression");
    Scope scope;
    Expr e = convert(d, scope);
    resolve_labels();
    return e;
  }

 private:
  struct LabelDef {
    const Datum* site;
    std::set<std::pair<std::string, int>> free;  // (name, binder) pairs
    std::set<std::string> uses;                  // labels referenced by the body
  };
  struct LabelUse {
    const Datum* site;
    std::string name;
    Scope scope;
  };

  Expr convert(const Datum& d, Scope& scope) {
    switch (d.kind) {
      case Datum::Kind::Atom:
        return atom(d, scope);
      case Datum::Kind::Quote:
        return quote(d, scope);
      case Datum::Kind::List:
        return list(d, scope);
    }
    fail_at(d, "unreachable");
  }

  Expr atom(const Datum& d, Scope& scope) {
    if (auto v = as_integer(d.text)) {
      if (*v < INT32_MIN || *v > INT32_MAX) fail_at(d, "integer literal out of 32-bit range: " + d.text);
      return Expr::constant(static_cast<std::int32_t>(*v));
    }
    if (auto at = position(scope, d.text)) {
      note_free_var(d.text, scope[*at].binder, *at);
      return Expr::var(d.text);
    }
    uses_.push_back(LabelUse{&d, d.text, scope});
    for (const std::string& enclosing : label_stack_) labels_[enclosing].uses.insert(d.text);
    return Expr::label_ref(d.text);
  }

  Expr quote(const Datum& d, Scope& scope) {
    Expr inner = convert(d.items.front(), scope);
    if (inner.is(ExprKind::Quoted)) {
      // ''42 is the same value as '42; anything else double-quoted is rejected.
      if (inner.inner().is(ExprKind::Const)) return inner;
      fail_at(d, "nested quote");
    }
    return Expr::quoted(std::move(inner));
  }

  Expr list(const Datum& d, Scope& scope) {
    if (d.items.empty()) fail_at(d, "empty list is not an expression; use (emptylist)");
    const Datum& head = d.items.front();
    if (head.kind != Datum::Kind::Atom || as_integer(head.text)) fail_at(head, "list head is not an operation");
    const std::string op = canonical_operation(head.text);
    const std::size_t argc = d.items.size() - 1;

    if (op == forms::kLambda) return lambda(d, scope);
    if (op == forms::kLet) return let(d, scope);
    if (op == forms::kLabel) return label(d, scope);
    if (op == forms::kAssign) fail_at(d, "assign outside let");
    if (op == forms::kIf && argc != 3) fail_at(d, "if expects a condition and two branches");
    if (op == forms::kBeta && argc == 0) fail_at(d, "beta expects a lambda expression");
    if (op == forms::kReturn && argc != 1) fail_at(d, "return expects exactly one expression");
    if (op == forms::kBegin && argc == 0) fail_at(d, "begin expects at least one expression");

    std::vector<Expr> args;
    args.reserve(argc);
    for (std::size_t i = 1; i < d.items.size(); ++i) args.push_back(convert(d.items[i], scope));
    return Expr::sexpr(op, std::move(args));
  }

  std::string formal_name(const Datum& d) {
    if (d.kind != Datum::Kind::Quote || d.items.front().kind != Datum::Kind::Atom ||
        as_integer(d.items.front().text)) {
      fail_at(d, "lambda parameter must be a quoted identifier");
    }
    return d.items.front().text;
  }

  Expr lambda(const Datum& d, Scope& scope) {
    if (d.items.size() < 2) fail_at(d, "lambda needs a quoted body");
    const Datum& body = d.items.back();
    if (body.kind != Datum::Kind::Quote) fail_at(body, "lambda body must be quoted");
    std::vector<Expr> args;
    std::set<std::string> seen;
    const std::size_t mark = scope.size();
    for (std::size_t i = 1; i + 1 < d.items.size(); ++i) {
      std::string name = formal_name(d.items[i]);
      if (!seen.insert(name).second) fail_at(d.items[i], "duplicate lambda parameter '" + name + "'");
      scope.push_back(Binding{name, ++next_binder_});
      args.push_back(Expr::quoted(Expr::var(std::move(name))));
    }
    args.push_back(quote(body, scope));
    scope.resize(mark);
    return Expr::sexpr(std::string(forms::kLambda), std::move(args));
  }

  Expr let(const Datum& d, Scope& scope) {
    if (d.items.size() != 3) fail_at(d, "let expects (assign 'x <expr>) and a quoted body");
    const Datum& binding = d.items[1];
    if (binding.kind != Datum::Kind::List || binding.items.size() != 3 ||
        binding.items[0].kind != Datum::Kind::Atom || binding.items[0].text != forms::kAssign) {
      fail_at(binding, "let expects (assign 'x <expr>) as its first operand");
    }
    const Datum& body = d.items[2];
    if (body.kind != Datum::Kind::Quote) fail_at(body, "let body must be quoted");
    std::string name = formal_name(binding.items[1]);
    Expr value = convert(binding.items[2], scope);
    scope.push_back(Binding{name, ++next_binder_});
    Expr in = quote(body, scope);
    scope.pop_back();
    std::vector<Expr> assign_args{Expr::quoted(Expr::var(name)), std::move(value)};
    std::vector<Expr> args{Expr::sexpr(std::string(forms::kAssign), std::move(assign_args)), std::move(in)};
    return Expr::sexpr(std::string(forms::kLet), std::move(args));
  }

  Expr label(const Datum& d, Scope& scope) {
    if (d.items.size() != 3 || d.items[1].kind != Datum::Kind::Atom || as_integer(d.items[1].text)) {
      fail_at(d, "label expects a name and an expression");
    }
    const std::string name = d.items[1].text;
    if (lookup(scope, name)) fail_at(d.items[1], "label name '" + name + "' shadows a lambda variable");
    if (labels_.count(name)) fail_at(d.items[1], "duplicate label '" + name + "'");
    labels_[name].site = &d;
    label_stack_.push_back(name);
    frames_.push_back(scope.size());
    Expr body = convert(d.items[2], scope);
    frames_.pop_back();
    label_stack_.pop_back();
    return Expr::label(name, std::move(body));
  }

  // Records variables a label body captures from scopes outside the label.
  void note_free_var(const std::string& name, int binder, std::size_t scope_position) {
    for (std::size_t i = 0; i < label_stack_.size(); ++i) {
      if (scope_position < frames_[i]) labels_[label_stack_[i]].free.insert({name, binder});
    }
  }

  void resolve_labels() {
    for (const LabelUse& use : uses_) {
      auto it = labels_.find(use.name);
      if (it == labels_.end()) fail_at(*use.site, "unbound variable '" + use.name + "'");
      for (const auto& [var, binder] : it->second.free) {
        auto b = lookup(use.scope, var);
        if (!b || *b != binder) {
          fail_at(*use.site, "label '" + use.name + "' used outside the scope of variable '" + var + "'");
        }
      }
    }
    // Reject label cycles: a label whose body (transitively) refers to itself.
    std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
    for (const auto& [name, def] : labels_) check_cycle(name, state);
  }

  void check_cycle(const std::string& name, std::map<std::string, int>& state) {
    int& s = state[name];
    if (s == 2) return;
    if (s == 1) fail_at(*labels_.at(name).site, "recursive label '" + name + "'");
    s = 1;
    for (const std::string& next : labels_.at(name).uses) {
      if (labels_.count(next)) check_cycle(next, state);
    }
    state[name] = 2;
  }

  std::map<std::string, LabelDef> labels_;
  std::vector<std::string> label_stack_;
  std::vector<std::size_t> frames_;
  std::vector<LabelUse> uses_;
  int next_binder_ = 0;
};

}  // namespace

Expr parse(std::string_view text) {
  Reader reader(text);
  Datum d = reader.read_program();
  Converter converter;
  return converter.program(d);
}

}  // namespace gprm::gpir

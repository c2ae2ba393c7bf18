#include "gprm/gpc/gpc.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "gprm/error.hpp"

namespace gprm::gpc {

using gpir::Expr;

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct Token {
  enum class Kind { Ident, Number, Punct, End } kind = Kind::End;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n = 1) {
    for (; n > 0 && i < src.size(); --n, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      const std::size_t l = line, cl = col;
      advance(2);
      while (i < src.size() && src.substr(i, 2) != "*/") advance();
      if (i >= src.size()) throw ParseError("unterminated comment", l, cl);
      advance(2);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      // Qualified names such as GPRM::Kernel::Task1 are one token.
      std::size_t j = i;
      for (;;) {
        while (j < src.size() && ident_char(src[j])) ++j;
        if (src.substr(j, 2) == "::" && j + 2 < src.size() &&
            (std::isalpha(static_cast<unsigned char>(src[j + 2])) || src[j + 2] == '_')) {
          j += 2;
          continue;
        }
        break;
      }
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      static const char* two[] = {"==", "!=", "<=", ">=", "[[", "]]", "&&", "||", "++", "--", "+=", "-="};
      t.kind = Token::Kind::Punct;
      for (const char* p : two) {
        if (src.substr(i, 2) == p) t.text = p;
      }
      if (t.text.empty()) {
        if (std::string_view("(){}[];,.=<>+-*/%!&|").find(c) == std::string_view::npos) {
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Syntax tree

struct GExpr {
  enum class Kind { Int, Name, Call, Method, Binary } kind = Kind::Int;
  std::int32_t value = 0;
  std::string name;    // Name, Call: function, Method: instance alias, Binary: operator
  std::string method;  // Method
  std::vector<GExpr> args;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct GStmt {
  enum class Kind { Def, Eval, Return, If } kind = Kind::Eval;
  std::string var;  // Def
  GExpr expr;       // Def, Eval, Return; If: condition
  std::vector<GStmt> then_block;
  std::vector<GStmt> else_block;
  bool has_else = false;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Param {
  std::string name;
  bool pointer = false;
};

struct Function {
  std::string name;
  bool entry = false;
  std::vector<Param> params;
  std::vector<GStmt> body;
  std::optional<GExpr> tile;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Program {
  std::map<std::string, std::string> instances;  // alias -> class
  std::vector<Function> functions;
};

[[noreturn]] void fail(const std::string& message, std::size_t line, std::size_t column) {
  throw CompileError(std::to_string(line) + ":" + std::to_string(column) + ": " + message);
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : t_(std::move(tokens)) {}

  Program program() {
    Program p;
    while (!at_end()) {
      if (peek().kind == Token::Kind::Ident && peek().text.rfind("GPRM::Kernel::", 0) == 0) {
        const Token cls = next();
        const Token alias = expect_ident("kernel instance name");
        expect(";");
        if (alias.text.find("::") != std::string::npos) error(alias, "kernel instance name must be unqualified");
        if (!p.instances.emplace(alias.text, cls.text.substr(14)).second) {
          error(alias, "duplicate kernel instance '" + alias.text + "'");
        }
        continue;
      }
      p.functions.push_back(function());
    }
    return p;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return t_[std::min(pos_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  Token next() { return t_[std::min(pos_++, t_.size() - 1)]; }
  bool is(const char* punct, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Punct && peek(k).text == punct;
  }
  bool is_word(const char* word) const { return peek().kind == Token::Kind::Ident && peek().text == word; }
  bool accept(const char* punct) {
    if (!is(punct)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void error(const Token& t, const std::string& message) const {
    throw ParseError(message, t.line, t.column);
  }
  void expect(const char* punct) {
    if (!accept(punct)) error(peek(), std::string("expected '") + punct + "'" + found());
  }
  Token expect_ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) error(peek(), std::string("expected ") + what + found());
    return next();
  }
  std::string found() const { return at_end() ? " at end of input" : ", found '" + peek().text + "'"; }

  bool is_type() const { return is_word("int") || is_word("void"); }

  // int | int* | void
  bool type() {
    if (!is_type()) error(peek(), "expected a type" + found());
    next();
    return accept("*");
  }

  Function function() {
    Function f;
    if (accept("[[")) {
      const Token attr = expect_ident("attribute");
      if (attr.text != "gprm::tile") error(attr, "unknown attribute '" + attr.text + "'");
      expect("(");
      f.tile = expr();
      expect(")");
      expect("]]");
    }
    type();
    const Token name = expect_ident("function name");
    f.line = name.line;
    f.column = name.column;
    if (name.text.rfind("GPRM::", 0) == 0) {
      f.entry = true;
      f.name = name.text.substr(6);
    } else {
      f.name = name.text;
    }
    if (f.name.empty() || f.name.find("::") != std::string::npos) error(name, "bad function name '" + name.text + "'");
    expect("(");
    if (!is(")")) {
      do {
        Param p;
        p.pointer = type();
        p.name = expect_ident("parameter name").text;
        f.params.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    f.body = block();
    return f;
  }

  std::vector<GStmt> block() {
    if (!is("{")) {
      std::vector<GStmt> one;
      one.push_back(statement());
      return one;
    }
    expect("{");
    std::vector<GStmt> out;
    while (!is("}")) {
      if (at_end()) error(peek(), "unterminated block");
      out.push_back(statement());
    }
    expect("}");
    return out;
  }

  GStmt statement() {
    GStmt s;
    s.line = peek().line;
    s.column = peek().column;
    if (is_word("for") || is_word("while") || is_word("do")) {
      fail("loops are not supported in communication code; use recursion", s.line, s.column);
    }
    if (is_word("return")) {
      next();
      s.kind = GStmt::Kind::Return;
      s.expr = expr();
      expect(";");
      return s;
    }
    if (is_word("if")) {
      next();
      s.kind = GStmt::Kind::If;
      expect("(");
      s.expr = expr();
      expect(")");
      s.then_block = block();
      if (is_word("else")) {
        next();
        s.has_else = true;
        s.else_block = block();
      }
      return s;
    }
    if (is_type()) {
      type();
      s.kind = GStmt::Kind::Def;
      s.var = expect_ident("variable name").text;
      expect("=");
      s.expr = expr();
      expect(";");
      return s;
    }
    if (peek().kind == Token::Kind::Ident &&
        (is("=", 1) || is("+=", 1) || is("-=", 1) || is("++", 1) || is("--", 1))) {
      fail("reassignment of '" + peek().text + "': variables are single assignment", s.line, s.column);
    }
    s.kind = GStmt::Kind::Eval;
    s.expr = expr();
    expect(";");
    return s;
  }

  GExpr expr() { return comparison(); }

  GExpr binary(GExpr lhs, const Token& op, GExpr rhs) {
    GExpr e;
    e.kind = GExpr::Kind::Binary;
    e.name = op.text;
    e.line = op.line;
    e.column = op.column;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  GExpr comparison() {
    GExpr lhs = additive();
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (is(op)) {
        const Token t = next();
        return binary(std::move(lhs), t, additive());
      }
    }
    if (is("&&") || is("||") || is("!")) error(peek(), "logical operators are not supported");
    return lhs;
  }

  GExpr additive() {
    GExpr lhs = multiplicative();
    while (is("+") || is("-")) {
      const Token t = next();
      lhs = binary(std::move(lhs), t, multiplicative());
    }
    return lhs;
  }

  GExpr multiplicative() {
    GExpr lhs = unary();
    while (is("*") || is("/") || is("%")) {
      const Token t = next();
      lhs = binary(std::move(lhs), t, unary());
    }
    return lhs;
  }

  GExpr unary() {
    if (is("-")) {
      const Token t = next();
      if (peek().kind == Token::Kind::Number) {
        GExpr lit = primary();
        lit.value = static_cast<std::int32_t>(-static_cast<std::int64_t>(lit.value));
        return lit;
      }
      GExpr zero;
      zero.line = t.line;
      zero.column = t.column;
      return binary(std::move(zero), t, unary());
    }
    return primary();
  }

  GExpr primary() {
    GExpr e;
    e.line = peek().line;
    e.column = peek().column;
    if (accept("(")) {
      e = expr();
      expect(")");
      return e;
    }
    if (peek().kind == Token::Kind::Number) {
      const Token t = next();
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc() || v > 2147483648LL) error(t, "integer literal out of 32-bit range");
      e.kind = GExpr::Kind::Int;
      e.value = static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
      return e;
    }
    const Token name = expect_ident("an expression");
    if (accept(".")) {
      e.kind = GExpr::Kind::Method;
      e.name = name.text;
      e.method = expect_ident("method name").text;
      arguments(e);
      return e;
    }
    if (is("(")) {
      e.kind = GExpr::Kind::Call;
      e.name = name.text;
      arguments(e);
      return e;
    }
    e.kind = GExpr::Kind::Name;
    e.name = name.text;
    return e;
  }

  void arguments(GExpr& call) {
    expect("(");
    if (!is(")")) {
      do {
        call.args.push_back(expr());
      } while (accept(","));
    }
    expect(")");
  }

  std::vector<Token> t_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Generator

Expr q(Expr e) { return Expr::quoted(std::move(e)); }
Expr sx(std::string op, std::vector<Expr> args) { return Expr::sexpr(std::move(op), std::move(args)); }
Expr ctrl(const char* method, int index) { return sx(std::string("ctrl.") + method, {q(Expr::constant(index))}); }

// Quoted form of an expression in a deferred position (if branch, lambda
// body, ctrl.run target). Quoting a quoted constant collapses.
Expr defer(Expr e) {
  if (e.is(gpir::ExprKind::Quoted)) return e;
  return q(std::move(e));
}

std::size_t count_uses(const GExpr& e, const std::string& v) {
  std::size_t n = (e.kind == GExpr::Kind::Name && e.name == v) ? 1 : 0;
  for (const GExpr& a : e.args) n += count_uses(a, v);
  return n;
}

std::size_t count_uses(const std::vector<GStmt>& stmts, std::size_t from, const std::string& v) {
  std::size_t n = 0;
  for (std::size_t i = from; i < stmts.size(); ++i) {
    const GStmt& s = stmts[i];
    n += count_uses(s.expr, v);
    n += count_uses(s.then_block, 0, v);
    n += count_uses(s.else_block, 0, v);
  }
  return n;
}

void collect_calls(const GExpr& e, std::set<std::string>& out) {
  if (e.kind == GExpr::Kind::Call) out.insert(e.name);
  for (const GExpr& a : e.args) collect_calls(a, out);
}

void collect_calls(const std::vector<GStmt>& stmts, std::set<std::string>& out) {
  for (const GStmt& s : stmts) {
    collect_calls(s.expr, out);
    collect_calls(s.then_block, out);
    collect_calls(s.else_block, out);
  }
}

class Generator {
 public:
  Generator(const Program& p, const Options& options) : p_(p), options_(options) {
    const Function* entry = nullptr;
    for (const Function& f : p.functions) {
      if (f.entry) {
        if (entry) fail("more than one GPRM:: entry function", f.line, f.column);
        entry = &f;
      } else if (!helpers_.emplace(f.name, &f).second) {
        fail("duplicate function '" + f.name + "'", f.line, f.column);
      }
    }
    if (!entry) throw CompileError("no GPRM:: entry function");
    entry_ = entry;
    check_recursion();
  }

  Expr run() {
    Scope s;
    s.function = entry_;
    int ints = 0, pointers = 0;
    for (const Param& prm : entry_->params) {
      declare(s, prm.name, entry_->line, entry_->column);
      s.bindings[prm.name] = prm.pointer ? ctrl("reg", pointers++) : ctrl("arg", ints++);
    }
    next_host_arg_ = ints;
    return body(*entry_, s);
  }

 private:
  struct Scope {
    const Function* function = nullptr;
    std::map<std::string, Expr> bindings;  // name -> expression to use at each occurrence
    std::set<std::string> declared;
    std::string self;  // binder of the function itself when it recurses
  };

  void declare(Scope& s, const std::string& name, std::size_t line, std::size_t column) {
    if (name == "NUM_THREADS") fail("'NUM_THREADS' is reserved", line, column);
    if (!s.declared.insert(name).second) {
      fail("reassignment of '" + name + "': variables are single assignment", line, column);
    }
  }

  void check_recursion() {
    std::map<std::string, std::set<std::string>> calls;
    for (const auto& [name, f] : helpers_) collect_calls(f->body, calls[name]);
    // A cycle through two or more functions is mutual recursion.
    for (const auto& [start, _] : helpers_) {
      std::set<std::string> seen;
      std::vector<std::string> stack;
      for (const std::string& c : calls[start]) {
        if (c != start) stack.push_back(c);
      }
      while (!stack.empty()) {
        const std::string f = stack.back();
        stack.pop_back();
        if (f == start) {
          const Function* fn = helpers_.at(start);
          fail("mutual recursion involving '" + start + "' is not supported", fn->line, fn->column);
        }
        if (!helpers_.count(f) || !seen.insert(f).second) continue;
        for (const std::string& c : calls[f]) stack.push_back(c);
      }
      if (calls[start].count(start)) recursive_.insert(start);
    }
    std::set<std::string> entry_calls;
    collect_calls(entry_->body, entry_calls);
    if (entry_calls.count(entry_->name) && !helpers_.count(entry_->name)) {
      fail("the entry function cannot call itself", entry_->line, entry_->column);
    }
  }

  Expr body(const Function& f, Scope& s) {
    std::function<Expr(Expr)> wrap;
    if (f.tile) {
      const Expr tile = gen(*f.tile, s);
      wrap = [tile](Expr leaf) {
        if (!leaf.is(gpir::ExprKind::SExpr)) return leaf;
        return sx("ctrl.run", {defer(std::move(leaf)), tile});
      };
    }
    return block(f.body, 0, s, {}, wrap);
  }

  // Value of statements [i, end). `effects` are earlier expression
  // statements whose values are discarded.
  Expr block(const std::vector<GStmt>& stmts, std::size_t i, Scope& s, std::vector<Expr> effects,
             const std::function<Expr(Expr)>& wrap) {
    if (i >= stmts.size()) throw CompileError("block has no value: end it with return or an expression");
    const GStmt& st = stmts[i];
    const bool last = i + 1 == stmts.size();
    switch (st.kind) {
      case GStmt::Kind::Return:
        if (!last) fail("statement after return", stmts[i + 1].line, stmts[i + 1].column);
        return finish(gen(st.expr, s), std::move(effects), wrap);
      case GStmt::Kind::Eval:
        if (last) return finish(gen(st.expr, s), std::move(effects), wrap);
        effects.push_back(gen(st.expr, s));
        return block(stmts, i + 1, s, std::move(effects), wrap);
      case GStmt::Kind::If: {
        if (!last) fail("if/else must be the last statement of a block", st.line, st.column);
        if (!st.has_else) fail("if without else has no value", st.line, st.column);
        const Expr cond = gen(st.expr, s);
        Scope ts = s, es = s;
        Expr then_value = block(st.then_block, 0, ts, {}, wrap);
        Expr else_value = block(st.else_block, 0, es, {}, wrap);
        return finish(sx("if", {cond, defer(std::move(then_value)), defer(std::move(else_value))}), std::move(effects), {});
      }
      case GStmt::Kind::Def:
        break;
    }
    declare(s, st.var, st.line, st.column);
    const std::size_t uses = count_uses(stmts, i + 1, st.var);
    if (uses == 0) {
      s.bindings.erase(st.var);
      return block(stmts, i + 1, s, std::move(effects), wrap);
    }
    if (uses == 1) {
      s.bindings[st.var] = gen(st.expr, s);
      return block(stmts, i + 1, s, std::move(effects), wrap);
    }
    // Consecutive shared definitions that do not refer to one another are
    // bound by one lambda and evaluated in parallel.
    std::vector<std::string> names{st.var};
    std::vector<Expr> values{gen(st.expr, s)};
    std::size_t j = i + 1;
    for (; j < stmts.size() && stmts[j].kind == GStmt::Kind::Def; ++j) {
      const GStmt& d = stmts[j];
      if (count_uses(stmts, j + 1, d.var) < 2) break;
      bool independent = true;
      for (const std::string& n : names) independent = independent && count_uses(d.expr, n) == 0;
      if (!independent) break;
      declare(s, d.var, d.line, d.column);
      names.push_back(d.var);
      values.push_back(gen(d.expr, s));
    }
    for (const std::string& n : names) s.bindings[n] = Expr::var(n);
    std::vector<Expr> lambda;
    for (const std::string& n : names) lambda.push_back(q(Expr::var(n)));
    lambda.push_back(defer(block(stmts, j, s, std::move(effects), wrap)));
    std::vector<Expr> beta{sx("lambda", std::move(lambda))};
    for (Expr& v : values) beta.push_back(std::move(v));
    return sx("beta", std::move(beta));
  }

  static Expr finish(Expr value, std::vector<Expr> effects, const std::function<Expr(Expr)>& wrap) {
    if (wrap) value = wrap(std::move(value));
    if (effects.empty()) return value;
    effects.push_back(std::move(value));
    return sx("begin", std::move(effects));
  }

  Expr gen(const GExpr& e, Scope& s) {
    switch (e.kind) {
      case GExpr::Kind::Int:
        return q(Expr::constant(e.value));
      case GExpr::Kind::Name: {
        if (auto it = s.bindings.find(e.name); it != s.bindings.end()) return it->second;
        if (e.name == "NUM_THREADS") {
          if (options_.num_threads) return q(Expr::constant(*options_.num_threads));
          return ctrl("arg", next_host_arg_);
        }
        if (s.declared.count(e.name)) fail("'" + e.name + "' has no value here", e.line, e.column);
        for (const GStmt& st : s.function->body) {
          if (st.kind == GStmt::Kind::Def && st.var == e.name) {
            fail("use of '" + e.name + "' before assignment", e.line, e.column);
          }
        }
        fail("unknown variable '" + e.name + "'", e.line, e.column);
      }
      case GExpr::Kind::Binary: {
        std::vector<Expr> args;
        for (const GExpr& a : e.args) args.push_back(gen(a, s));
        return sx(e.name, std::move(args));
      }
      case GExpr::Kind::Method: {
        if (!p_.instances.count(e.name)) fail("unknown kernel instance '" + e.name + "'", e.line, e.column);
        std::vector<Expr> args;
        for (const GExpr& a : e.args) args.push_back(gen(a, s));
        return sx(e.name + "." + e.method, std::move(args));
      }
      case GExpr::Kind::Call:
        return call(e, s);
    }
    fail("bad expression", e.line, e.column);
  }

  Expr call(const GExpr& e, Scope& s) {
    auto it = helpers_.find(e.name);
    if (it == helpers_.end()) fail("unknown function '" + e.name + "'", e.line, e.column);
    const Function& h = *it->second;
    if (e.args.size() != h.params.size()) {
      fail("'" + h.name + "' expects " + std::to_string(h.params.size()) + " argument(s), got " +
               std::to_string(e.args.size()),
           e.line, e.column);
    }
    std::vector<Expr> args;
    for (const GExpr& a : e.args) args.push_back(gen(a, s));

    if (s.function == &h) {
      // Self call inside a recursive helper.
      std::vector<Expr> beta{Expr::var(s.self), Expr::var(s.self)};
      for (Expr& a : args) beta.push_back(std::move(a));
      return sx("beta", std::move(beta));
    }

    Scope hs;
    hs.function = &h;
    for (const Param& prm : h.params) {
      declare(hs, prm.name, h.line, h.column);
      hs.bindings[prm.name] = Expr::var(prm.name);
    }
    const bool recursive = recursive_.count(h.name) > 0;
    if (recursive) {
      hs.self = "f";
      while (hs.declared.count(hs.self)) hs.self += "_";
    }
    Expr hbody = body(h, hs);

    auto lambda = [&](bool with_self, Expr lbody) {
      std::vector<Expr> la;
      if (with_self) la.push_back(q(Expr::var(hs.self)));
      for (const Param& prm : h.params) la.push_back(q(Expr::var(prm.name)));
      la.push_back(defer(std::move(lbody)));
      return sx("lambda", std::move(la));
    };

    std::vector<Expr> beta;
    if (recursive) {
      // (β (λ 'f 'p.. '(β f f p..)) (λ 'f 'p.. 'BODY) args..)
      std::vector<Expr> inner{Expr::var(hs.self), Expr::var(hs.self)};
      for (const Param& prm : h.params) inner.push_back(Expr::var(prm.name));
      beta.push_back(lambda(true, sx("beta", std::move(inner))));
      beta.push_back(lambda(true, std::move(hbody)));
    } else {
      beta.push_back(lambda(false, std::move(hbody)));
    }
    for (Expr& a : args) beta.push_back(std::move(a));
    return sx("beta", std::move(beta));
  }

  const Program& p_;
  const Options& options_;
  const Function* entry_ = nullptr;
  std::map<std::string, const Function*> helpers_;
  std::set<std::string> recursive_;
  int next_host_arg_ = 0;
};

}  // namespace

Expr compile_to_expr(std::string_view source, const Options& options) {
  Parser parser(lex(source));
  const Program p = parser.program();
  Expr e = Generator(p, options).run();
  // A program root must be an S-expression; (+ x) is the identity.
  if (!e.is(gpir::ExprKind::SExpr)) e = Expr::sexpr("+", {std::move(e)});
  return e;
}

std::string compile(std::string_view source, const Options& options) {
  return gpir::print_pretty(compile_to_expr(source, options));
}

}  // namespace gprm::gpc

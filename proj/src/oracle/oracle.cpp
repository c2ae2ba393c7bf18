#include "gprm/oracle/oracle.hpp"

#include <map>

#include "gprm/error.hpp"

namespace gprm::oracle {

using gpir::Expr;
using gpir::ExprKind;
namespace forms = gpir::forms;

namespace {

// Gives every binder a unique name, then expands labels at their use sites.
// Label bodies are renamed where they are defined, so an inner binder that
// reuses a name cannot capture them.
class Renamer {
 public:
  Expr run(const Expr& e) {
    const Expr renamed = rename(e);
    collect(renamed);
    return expand(renamed);
  }

 private:
  void collect(const Expr& e) {
    if (e.is(ExprKind::Label)) labels_.emplace(e.name(), &e.inner());
    if (e.is(ExprKind::Quoted) || e.is(ExprKind::Label)) {
      collect(e.inner());
      return;
    }
    for (const Expr& a : e.args()) collect(a);
  }

  Expr expand(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Const:
      case ExprKind::Var:
        return e;
      case ExprKind::Quoted:
        return Expr::quoted(expand(e.inner()));
      case ExprKind::Label:
      case ExprKind::LabelRef: {
        auto it = labels_.find(e.name());
        if (it == labels_.end()) throw RuntimeError("unbound variable '" + e.name() + "'");
        if (++depth_ > 10000) throw RuntimeError("recursive label '" + e.name() + "'");
        Expr body = expand(*it->second);
        --depth_;
        return body;
      }
      case ExprKind::SExpr:
        break;
    }
    std::vector<Expr> args;
    for (const Expr& a : e.args()) args.push_back(expand(a));
    return Expr::sexpr(e.name(), std::move(args));
  }

  Expr rename(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Const:
      case ExprKind::LabelRef:
        return e;
      case ExprKind::Var:
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
          if (it->first == e.name()) return Expr::var(it->second);
        }
        // Names the parser could not bind are label references.
        return Expr::label_ref(e.name());
      case ExprKind::Quoted:
        return Expr::quoted(rename(e.inner()));
      case ExprKind::Label:
        return Expr::label(e.name(), rename(e.inner()));
      case ExprKind::SExpr:
        break;
    }
    std::vector<Expr> args;
    if (e.is_form(forms::kLambda)) {
      const std::size_t mark = scope_.size();
      for (std::size_t i = 0; i + 1 < e.args().size(); ++i) {
        const Expr& f = e.args()[i];
        if (!f.is(ExprKind::Quoted) || !f.inner().is(ExprKind::Var)) throw RuntimeError("bad lambda parameter");
        std::string fresh = f.inner().name() + "#" + std::to_string(counter_++);
        scope_.emplace_back(f.inner().name(), fresh);
        args.push_back(Expr::quoted(Expr::var(std::move(fresh))));
      }
      if (!e.args().empty()) args.push_back(rename(e.args().back()));
      scope_.resize(mark);
    } else {
      for (const Expr& a : e.args()) args.push_back(rename(a));
    }
    return Expr::sexpr(e.name(), std::move(args));
  }

  std::map<std::string, const Expr*> labels_;
  std::vector<std::pair<std::string, std::string>> scope_;
  std::size_t counter_ = 0;
  std::size_t depth_ = 0;
};

struct Frame {
  std::vector<std::pair<std::string, Byteword>> vars;
  std::shared_ptr<const Frame> parent;
};
using Env = std::shared_ptr<const Frame>;

}  // namespace

// Values are words: integers, lists and data live in the heap as in the
// machine; lambda words index `closures_`; quoted references index `thunks_`.
class Interpreter::Impl final : public kernel::KernelContext {
 public:
  Impl(Interpreter& owner, std::vector<Byteword> host_args) : o_(owner), host_args_(std::move(host_args)) {}

  Byteword run(const Expr& program) {
    if (!program.is(ExprKind::SExpr)) throw RuntimeError("a program must be an operation-rooted S-expression");
    return value(program, nullptr);
  }

  std::uint16_t tile() const override { return tile_; }
  std::uint16_t tile_count() const override { return o_.tile_count_; }
  Byteword host_arg(std::size_t index) const override {
    if (index >= host_args_.size()) {
      throw RuntimeError("ctrl.arg: no host argument " + std::to_string(index) + " (run supplied " +
                         std::to_string(host_args_.size()) + ")");
    }
    return host_args_[index];
  }
  kernel::Heap& heap() override { return o_.heap_; }

 private:
  struct Closure {
    const Expr* lambda;
    Env env;
  };
  struct Thunk {
    const Expr* expr;
    Env env;
  };

  static Byteword lookup(const std::string& name, const Env& env) {
    for (const Frame* f = env.get(); f; f = f->parent.get()) {
      for (const auto& [n, w] : f->vars) {
        if (n == name) return w;
      }
    }
    throw RuntimeError("unbound variable '" + name + "'");
  }

  Byteword thunk(const Expr& e, const Env& env) {
    thunks_.push_back(Thunk{&e, env});
    return Byteword::reference(Reference{static_cast<std::uint32_t>(thunks_.size() - 1), 0}, true);
  }

  Byteword force(Byteword w) {
    if (!w.is_reference()) return w.unquoted();
    const Thunk t = thunks_.at(w.ref().code_addr);
    return value(*t.expr, t.env);
  }

  // Word in an operand position.
  Byteword operand(const Expr& e, const Env& env) {
    if (!e.is(ExprKind::Quoted)) return value(e, env);
    const Expr& inner = e.inner();
    switch (inner.kind()) {
      case ExprKind::Const:
        return Byteword::integer(inner.value(), true);
      case ExprKind::Var:
        return lookup(inner.name(), env).with_quote(true);
      case ExprKind::Quoted:
        if (inner.inner().is(ExprKind::Const)) return Byteword::integer(inner.inner().value(), true);
        throw RuntimeError("nested quote");
      default:
        return thunk(inner, env);
    }
  }

  // Evaluated value of an unquoted expression.
  Byteword value(const Expr& e, const Env& env) {
    switch (e.kind()) {
      case ExprKind::Const:
        return Byteword::integer(e.value());
      case ExprKind::Var:
        return force(lookup(e.name(), env));
      case ExprKind::Quoted:
        return force(operand(e, env));
      case ExprKind::SExpr:
        break;
      default:
        throw RuntimeError("unexpanded label");
    }
    if (e.is_form(forms::kLambda)) {
      closures_.push_back(Closure{&e, env});
      return Byteword::lambda(Reference{static_cast<std::uint32_t>(closures_.size() - 1), 0});
    }
    std::vector<Byteword> args;
    args.reserve(e.args().size());
    for (const Expr& a : e.args()) args.push_back(operand(a, env));
    if (e.is_form(forms::kBeta)) return beta(args);
    if (e.is_form(forms::kIf)) {
      if (args.size() != 3) throw RuntimeError("if expects a condition and two branches");
      if (!args[0].is_int()) throw RuntimeError("if: condition is not an integer, got " + describe(args[0]));
      return force(args[args[0].int_value() != 0 ? 1 : 2]);
    }
    return call(e.name(), args);
  }

  Byteword beta(const std::vector<Byteword>& args) {
    if (args.empty() || !args[0].is(BuiltinTag::Lambda)) {
      throw RuntimeError("beta: operator is not a lambda value");
    }
    const Closure c = closures_.at(args[0].ref().code_addr);
    const auto& la = c.lambda->args();
    const std::size_t formals = la.size() - 1;
    if (args.size() - 1 != formals) {
      throw RuntimeError("beta: lambda expects " + std::to_string(formals) + " argument(s), got " +
                         std::to_string(args.size() - 1));
    }
    auto frame = std::make_shared<Frame>();
    frame->parent = c.env;
    for (std::size_t i = 0; i < formals; ++i) frame->vars.emplace_back(la[i].inner().name(), args[i + 1].unquoted());
    const Env env = frame;
    const Expr& body = la.back();
    return value(body.is(ExprKind::Quoted) ? body.inner() : body, env);
  }

  Byteword call(const std::string& name, std::vector<Byteword>& args) {
    const auto op = o_.registry_.resolve(name);
    if (!op) throw RuntimeError("unknown service/method '" + name + "'");
    const kernel::MethodSpec& m = o_.registry_.method(*op);
    if (!m.accepts(args.size())) throw RuntimeError("'" + name + "': wrong number of arguments");
    if (!m.control) {
      for (Byteword& w : args) {
        if (w.quoted()) {
          if (!w.is_int()) throw RuntimeError(name + ": quoted expression passed to a non-control method");
          w = w.unquoted();
        }
      }
    }
    ++o_.kernel_calls_;
    const kernel::KernelResult r = instance(op->service).invoke(op->method, args, *this);
    if (const auto* restart = std::get_if<kernel::Restart>(&r)) {
      const std::int64_t n = o_.tile_count_;
      const std::uint16_t saved = tile_;
      tile_ = static_cast<std::uint16_t>(((restart->tile % n) + n) % n);
      const Byteword v = force(restart->target);
      tile_ = saved;
      return v;
    }
    return std::get<Byteword>(r);
  }

  kernel::Kernel& instance(std::uint16_t service) {
    const kernel::KernelService& s = o_.registry_.service(service);
    const auto key = std::make_pair(service, s.stateless ? std::uint16_t{0} : tile_);
    auto& k = o_.kernels_[key];
    if (!k) k = s.factory();
    return *k;
  }

  Interpreter& o_;
  std::vector<Byteword> host_args_;
  std::vector<Closure> closures_;
  std::vector<Thunk> thunks_;
  std::uint16_t tile_ = 0;
};

Interpreter::Interpreter(const kernel::KernelRegistry& registry, std::uint16_t tile_count)
    : registry_(registry), tile_count_(tile_count) {
  if (tile_count == 0) throw RuntimeError("tile count must be at least 1");
}

Interpreter::~Interpreter() = default;

std::size_t Interpreter::register_data(std::any value) {
  heap_.reset();
  return heap_.register_data(std::move(value));
}

Byteword Interpreter::evaluate(const Expr& program, std::vector<Byteword> host_args) {
  heap_.reset();
  kernel_calls_ = 0;
  const Expr core = Renamer().run(gpir::desugar(program));
  Impl impl(*this, std::move(host_args));
  return impl.run(core);
}

Byteword Interpreter::evaluate(std::string_view text, std::vector<Byteword> host_args) {
  return evaluate(gpir::parse(text), std::move(host_args));
}

kernel::Datum evaluate(std::string_view text, const kernel::KernelRegistry& registry, std::vector<Byteword> host_args,
                       std::uint16_t tile_count) {
  Interpreter in(registry, tile_count);
  return in.read(in.evaluate(text, std::move(host_args)));
}

}  // namespace gprm::oracle

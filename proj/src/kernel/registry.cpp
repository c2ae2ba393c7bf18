#include "gprm/kernel/registry.hpp"

#include <set>

#include "gprm/error.hpp"

namespace gprm::kernel {

std::int32_t expect_int(Byteword w, std::string_view what) {
  if (!w.is_int()) throw RuntimeError(std::string(what) + ": expected an integer, got " + describe(w));
  return w.int_value();
}

namespace {

// Two's-complement wrap to 32 bits.
Byteword wrap(std::int64_t v) { return Byteword::integer(static_cast<std::int32_t>(static_cast<std::uint32_t>(v))); }

enum Builtin : std::uint16_t {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMod,
  kLt,
  kLe,
  kGt,
  kGe,
  kEq,
  kNe,
  kCons,
  kHead,
  kTail,
  kEmptyList,
  kIsNull,
};

class BuiltinKernel final : public Kernel {
 public:
  KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, KernelContext& ctx) override {
    switch (method) {
      case kAdd: {
        std::int64_t acc = 0;
        for (Byteword a : args) acc = static_cast<std::int32_t>(static_cast<std::uint32_t>(acc + expect_int(a, "+")));
        return wrap(acc);
      }
      case kMul: {
        std::int64_t acc = 1;
        for (Byteword a : args) acc = static_cast<std::int32_t>(static_cast<std::uint32_t>(acc * expect_int(a, "*")));
        return wrap(acc);
      }
      case kSub:
        return wrap(std::int64_t{expect_int(args[0], "-")} - expect_int(args[1], "-"));
      case kDiv:
      case kMod: {
        const std::int64_t a = expect_int(args[0], method == kDiv ? "/" : "%");
        const std::int64_t b = expect_int(args[1], method == kDiv ? "/" : "%");
        if (b == 0) throw RuntimeError("division by zero");
        return wrap(method == kDiv ? a / b : a % b);
      }
      case kLt:
        return cmp(args, [](auto a, auto b) { return a < b; });
      case kLe:
        return cmp(args, [](auto a, auto b) { return a <= b; });
      case kGt:
        return cmp(args, [](auto a, auto b) { return a > b; });
      case kGe:
        return cmp(args, [](auto a, auto b) { return a >= b; });
      case kEq:
        return cmp(args, [](auto a, auto b) { return a == b; });
      case kNe:
        return cmp(args, [](auto a, auto b) { return a != b; });
      case kCons:
        return ctx.heap().cons(args[0], args[1]);
      case kHead:
        return ctx.heap().head(args[0]);
      case kTail:
        return ctx.heap().tail(args[0]);
      case kEmptyList:
        return Byteword::nil();
      case kIsNull:
        if (!args[0].is_list()) throw RuntimeError("null?: expected a list, got " + describe(args[0]));
        return Byteword::integer(args[0].is(BuiltinTag::Nil) ? 1 : 0);
    }
    throw RuntimeError("builtin: unknown method " + std::to_string(method));
  }

 private:
  template <class F>
  static Byteword cmp(std::span<const Byteword> args, F f) {
    return Byteword::integer(f(expect_int(args[0], "comparison"), expect_int(args[1], "comparison")) ? 1 : 0);
  }
};

KernelService builtin_service() {
  KernelService s;
  s.name = std::string(kBuiltinServiceName);
  s.stateless = true;
  s.methods = {
      {"+", 1, true, false},   {"-", 2, false, false},  {"*", 1, true, false},
      {"/", 2, false, false},  {"%", 2, false, false},  {"<", 2, false, false},
      {"<=", 2, false, false}, {">", 2, false, false},  {">=", 2, false, false},
      {"==", 2, false, false}, {"!=", 2, false, false}, {"cons", 2, false, false},
      {"head", 1, false, false}, {"tail", 1, false, false}, {"emptylist", 0, false, false},
      {"null?", 1, false, false},
  };
  s.factory = [] { return std::make_unique<BuiltinKernel>(); };
  return s;
}

enum Ctrl : std::uint16_t { kRun, kArg, kReg };

class CtrlKernel final : public Kernel {
 public:
  KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, KernelContext& ctx) override {
    switch (method) {
      case kRun: {
        const Byteword target = args[0];
        if (!target.is_reference() || !target.quoted()) {
          throw RuntimeError("ctrl.run: first argument must be a quoted reference, got " + describe(target));
        }
        return Restart{target, expect_int(args[1], "ctrl.run thread id")};
      }
      case kArg: {
        const std::int32_t i = expect_int(args[0], "ctrl.arg");
        if (i < 0) throw RuntimeError("ctrl.arg: negative index");
        return ctx.host_arg(static_cast<std::size_t>(i));
      }
      case kReg: {
        const std::int32_t i = expect_int(args[0], "ctrl.reg");
        if (i < 0) throw RuntimeError("ctrl.reg: negative index");
        return ctx.heap().registered(static_cast<std::size_t>(i));
      }
    }
    throw RuntimeError("ctrl: unknown method " + std::to_string(method));
  }
};

}  // namespace

KernelRegistry::KernelRegistry() { services_.push_back(builtin_service()); }

KernelRegistry KernelRegistry::with_defaults() {
  KernelRegistry r;
  register_ctrl(r);
  return r;
}

std::uint16_t register_ctrl(KernelRegistry& registry) {
  KernelService s;
  s.name = "ctrl";
  s.stateless = true;
  s.methods = {{"run", 2, false, true}, {"arg", 1, false, false}, {"reg", 1, false, false}};
  s.factory = [] { return std::make_unique<CtrlKernel>(); };
  return registry.register_kernel(std::move(s));
}

std::uint16_t KernelRegistry::register_kernel(KernelService service) {
  if (service.name.empty() || service.name.find('.') != std::string::npos) {
    throw CompileError("invalid kernel service name '" + service.name + "'");
  }
  if (find_service(service.name)) throw CompileError("duplicate kernel service '" + service.name + "'");
  if (!service.factory) throw CompileError("kernel service '" + service.name + "' has no factory");
  if (services_.size() >= 0xFFFF) throw CompileError("too many kernel services");
  std::set<std::string> names;
  for (const MethodSpec& m : service.methods) {
    if (!names.insert(m.name).second) {
      throw CompileError("duplicate method '" + m.name + "' in service '" + service.name + "'");
    }
  }
  services_.push_back(std::move(service));
  return static_cast<std::uint16_t>(services_.size() - 1);
}

std::optional<std::uint16_t> KernelRegistry::find_service(std::string_view name) const {
  for (std::size_t i = 0; i < services_.size(); ++i) {
    if (services_[i].name == name) return static_cast<std::uint16_t>(i);
  }
  return std::nullopt;
}

std::optional<OpId> KernelRegistry::resolve(std::string_view name) const {
  std::uint16_t service = kBuiltinService;
  std::string_view method = name;
  // Builtin names may themselves contain no dot; "a.b" names a service method.
  if (auto dot = name.find('.'); dot != std::string_view::npos && dot > 0 && dot + 1 < name.size()) {
    auto s = find_service(name.substr(0, dot));
    if (!s) return std::nullopt;
    service = *s;
    method = name.substr(dot + 1);
  }
  const auto& methods = services_[service].methods;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i].name == method) return OpId{service, static_cast<std::uint16_t>(i)};
  }
  return std::nullopt;
}

bool KernelRegistry::contains(OpId op) const {
  return op.service < services_.size() && op.method < services_[op.service].methods.size();
}

const MethodSpec& KernelRegistry::method(OpId op) const {
  if (!contains(op)) {
    throw RuntimeError("unknown method " + std::to_string(op.service) + "." + std::to_string(op.method));
  }
  return services_[op.service].methods[op.method];
}

std::string KernelRegistry::name_of(OpId op) const {
  const MethodSpec& m = method(op);
  if (op.service == kBuiltinService) return m.name;
  return services_[op.service].name + "." + m.name;
}

}  // namespace gprm::kernel

#include "gprm/kernel/demo.hpp"

namespace gprm::kernel {

namespace {

using Fn = std::int64_t (*)(std::span<const Byteword>);

class TableKernel final : public Kernel {
 public:
  explicit TableKernel(std::vector<Fn> fns) : fns_(std::move(fns)) {}
  KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, KernelContext&) override {
    const auto v = fns_.at(method)(args);
    return Byteword::integer(static_cast<std::int32_t>(static_cast<std::uint32_t>(v)));
  }

 private:
  std::vector<Fn> fns_;
};

std::int64_t arg(std::span<const Byteword> a, std::size_t i) { return expect_int(a[i], "demo kernel"); }

KernelService table_service(std::string name, std::vector<MethodSpec> methods, std::vector<Fn> fns) {
  KernelService s;
  s.name = std::move(name);
  s.methods = std::move(methods);
  s.stateless = true;
  s.factory = [fns] { return std::make_unique<TableKernel>(fns); };
  return s;
}

class LogKernel final : public Kernel {
 public:
  explicit LogKernel(std::shared_ptr<EffectLog> log) : log_(std::move(log)) {}
  KernelResult invoke(std::uint16_t, std::span<const Byteword> args, KernelContext&) override {
    log_->append(expect_int(args[0], "log.emit"));
    return args[0];
  }

 private:
  std::shared_ptr<EffectLog> log_;
};

}  // namespace

void register_demo_kernels(KernelRegistry& registry) {
  registry.register_kernel(table_service("t1", {{"m1", 1}, {"m2", 2}},
                                         {[](auto a) { return arg(a, 0) + 1; }, [](auto a) { return arg(a, 0) + arg(a, 1); }}));
  registry.register_kernel(table_service("t2", {{"m1", 1}, {"m2", 1}, {"m3", 1}},
                                         {[](auto a) { return arg(a, 0) * 2; }, [](auto a) { return arg(a, 0) + 3; },
                                          [](auto a) { return arg(a, 0) - 1; }}));
  registry.register_kernel(table_service("t3", {{"m1", 0}, {"m2", 0}, {"m3", 0}, {"m4", 0}},
                                         {[](auto) -> std::int64_t { return 1; }, [](auto) -> std::int64_t { return 2; },
                                          [](auto) -> std::int64_t { return 3; }, [](auto) -> std::int64_t { return 1; }}));
}

void register_log_kernel(KernelRegistry& registry, std::shared_ptr<EffectLog> log) {
  KernelService s;
  s.name = "log";
  s.methods = {{"emit", 1}};
  s.stateless = true;
  s.factory = [log] { return std::make_unique<LogKernel>(log); };
  registry.register_kernel(std::move(s));
}

KernelRegistry demo_registry(std::shared_ptr<EffectLog> log) {
  KernelRegistry r = KernelRegistry::with_defaults();
  register_demo_kernels(r);
  register_log_kernel(r, std::move(log));
  return r;
}

}  // namespace gprm::kernel

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gprm/bytecode/byteword.hpp"
#include "gprm/kernel/heap.hpp"

namespace gprm::kernel {

/// Reserved id of the service holding arithmetic, comparison and list methods.
inline constexpr std::uint16_t kBuiltinService = 0;
inline constexpr std::string_view kBuiltinServiceName = "builtin";

struct MethodSpec {
  std::string name;
  /// Exact arity, or the minimum arity when `variadic` is set.
  int arity = 0;
  bool variadic = false;
  /// Control methods receive raw words, quoted references included.
  bool control = false;

  bool accepts(std::size_t argc) const {
    return variadic ? argc >= static_cast<std::size_t>(arity) : argc == static_cast<std::size_t>(arity);
  }
};

/// Ask the engine to evaluate `target` (a quoted reference) on tile
/// `tile mod tile_count`; its result becomes the result of the calling record.
struct Restart {
  Byteword target;
  std::int64_t tile = 0;
};

using KernelResult = std::variant<Byteword, Restart>;

/// What a kernel can see of the machine while it runs.
class KernelContext {
 public:
  virtual ~KernelContext() = default;

  virtual std::uint16_t tile() const = 0;
  virtual std::uint16_t tile_count() const = 0;
  /// Host argument `index` of the current run. Throws RuntimeError if absent.
  virtual Byteword host_arg(std::size_t index) const = 0;
  virtual Heap& heap() = 0;
};

/// A sequential task kernel. Methods are selected by number; arguments have
/// already been checked against the method's arity.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual KernelResult invoke(std::uint16_t method, std::span<const Byteword> args, KernelContext& ctx) = 0;
};

struct KernelService {
  std::string name;
  std::vector<MethodSpec> methods;
  std::function<std::unique_ptr<Kernel>()> factory;
  /// Stateless kernels share one instance across tiles; others get one
  /// instance per tile.
  bool stateless = false;
};

class KernelRegistry {
 public:
  /// Registry holding only the builtin service.
  KernelRegistry();
  /// Builtin service plus the ctrl kernel.
  static KernelRegistry with_defaults();

  /// Throws CompileError on a duplicate or malformed service.
  std::uint16_t register_kernel(KernelService service);

  /// Resolves "service.method", or a bare builtin name such as "+".
  std::optional<OpId> resolve(std::string_view name) const;
  std::optional<std::uint16_t> find_service(std::string_view name) const;

  const KernelService& service(std::uint16_t id) const { return services_.at(id); }
  const MethodSpec& method(OpId op) const;
  bool contains(OpId op) const;
  std::size_t size() const { return services_.size(); }
  /// Qualified name of an operation; builtins are unqualified.
  std::string name_of(OpId op) const;

 private:
  std::vector<KernelService> services_;
};

/// Adds `ctrl` (run, arg, reg) to a registry.
std::uint16_t register_ctrl(KernelRegistry& registry);

/// Helpers for kernel authors.
std::int32_t expect_int(Byteword w, std::string_view what);

}  // namespace gprm::kernel

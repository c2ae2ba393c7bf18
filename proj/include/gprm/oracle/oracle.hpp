#pragma once

#include <any>
#include <cstdint>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include "gprm/gpir/expr.hpp"
#include "gprm/kernel/heap.hpp"
#include "gprm/kernel/registry.hpp"

namespace gprm::oracle {

/// Sequential reference interpreter over the syntax tree. Environments
/// instead of substitution, arguments left to right, quoted expressions as
/// closures over their environment. Kernels come from the same registry the
/// machine uses.
class Interpreter {
 public:
  /// `tile_count` is what kernels see through KernelContext::tile_count.
  explicit Interpreter(const kernel::KernelRegistry& registry, std::uint16_t tile_count = 1);
  ~Interpreter();

  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// Data for ctrl.reg. Invalidates earlier results.
  std::size_t register_data(std::any value);

  /// Throws RuntimeError on evaluation errors.
  Byteword evaluate(const gpir::Expr& program, std::vector<Byteword> host_args = {});
  Byteword evaluate(std::string_view text, std::vector<Byteword> host_args = {});

  kernel::Datum read(Byteword w) const { return heap_.read(w); }
  kernel::Heap& heap() { return heap_; }

  /// Kernel invocations of the last evaluation.
  std::size_t kernel_calls() const { return kernel_calls_; }

 private:
  class Impl;
  const kernel::KernelRegistry& registry_;
  std::uint16_t tile_count_;
  kernel::Heap heap_;
  std::map<std::pair<std::uint16_t, std::uint16_t>, std::unique_ptr<kernel::Kernel>> kernels_;
  std::size_t kernel_calls_ = 0;
};

/// Parses and evaluates in one step.
kernel::Datum evaluate(std::string_view text, const kernel::KernelRegistry& registry,
                       std::vector<Byteword> host_args = {}, std::uint16_t tile_count = 1);

}  // namespace gprm::oracle

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "gprm/kernel/registry.hpp"

namespace gprm::kernel {

/// Values passed to log.emit, in call order. Shared by every tile.
class EffectLog {
 public:
  void append(std::int32_t v) {
    std::lock_guard lock(mutex_);
    values_.push_back(v);
  }
  std::vector<std::int32_t> take() {
    std::lock_guard lock(mutex_);
    return std::exchange(values_, {});
  }

 private:
  std::mutex mutex_;
  std::vector<std::int32_t> values_;
};

/// Small integer kernels for the example programs:
///
///   t1.m1(x) = x+1    t1.m2(a,b) = a+b
///   t2.m1(x) = 2x     t2.m2(x) = x+3    t2.m3(x) = x-1
///   t3.m4()  = 1
void register_demo_kernels(KernelRegistry& registry);

/// log.emit(v): records v in `log` and returns it.
void register_log_kernel(KernelRegistry& registry, std::shared_ptr<EffectLog> log);

/// Defaults plus the demo and log kernels.
KernelRegistry demo_registry(std::shared_ptr<EffectLog> log = std::make_shared<EffectLog>());

}  // namespace gprm::kernel

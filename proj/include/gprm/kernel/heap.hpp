#pragma once

#include <any>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "gprm/bytecode/byteword.hpp"
#include "gprm/error.hpp"

namespace gprm::kernel {

/// Host-side view of a value word, with lists expanded. Used to compare
/// results across runs, where cons-cell and handle indices are allocation
/// order dependent.
struct Datum {
  enum class Kind : std::uint8_t { Int, List, Data, Lambda };

  Kind kind = Kind::Int;
  std::int32_t value = 0;
  std::vector<Datum> items;
  std::uint64_t handle = 0;

  static Datum integer(std::int32_t v) { return Datum{Kind::Int, v, {}, 0}; }
  static Datum list(std::vector<Datum> items) { return Datum{Kind::List, 0, std::move(items), 0}; }

  bool operator==(const Datum&) const = default;
  std::string str() const;
};

/// Shared store for cons cells and opaque data handles. Safe for concurrent
/// use by all tiles. Registered handles survive reset(); cons cells and
/// kernel-created handles do not.
class Heap {
 public:
  Byteword cons(Byteword head, Byteword tail);
  Byteword head(Byteword list) const;
  Byteword tail(Byteword list) const;

  /// Handle that persists across runs (ctrl.reg data). Returns its index.
  std::size_t register_data(std::any value);
  /// Handle owned by the current run.
  Byteword make_data(std::any value);
  Byteword registered(std::size_t index) const;
  std::size_t registered_count() const;

  /// Data stored as std::shared_ptr<T>. Throws RuntimeError on a type or
  /// index mismatch.
  template <class T>
  std::shared_ptr<T> data(Byteword handle) const {
    std::shared_lock lock(mutex_);
    const std::any& slot = slot_for(handle);
    if (auto* p = std::any_cast<std::shared_ptr<T>>(&slot)) return *p;
    throw RuntimeError("data handle " + std::to_string(handle.index()) + " has an unexpected type");
  }

  const std::any& any(Byteword handle) const;

  void reset();
  std::size_t cell_count() const;

  Datum read(Byteword w) const;

 private:
  struct Cell {
    Byteword head;
    Byteword tail;
  };

  const Cell& cell(Byteword list) const;
  const std::any& slot_for(Byteword handle) const;

  mutable std::shared_mutex mutex_;
  std::deque<Cell> cells_;
  std::deque<std::any> handles_;
  std::size_t registered_ = 0;
};

}  // namespace gprm::kernel

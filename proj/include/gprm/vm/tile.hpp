#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gprm/kernel/registry.hpp"
#include "gprm/vm/code_store.hpp"
#include "gprm/vm/packet.hpp"

namespace gprm::vm {

enum class OverloadPolicy : std::uint8_t {
  Grow,   // enlarge the subtask list
  Block,  // park the request until a record is freed
  Fail,   // answer with a "tile overloaded" error
};

/// Errors raised during a run. Error words carry an index into this table;
/// each record an error passes through appends a line of context.
class ErrorTable {
 public:
  Byteword raise(std::string message);
  void annotate(Byteword error, std::string context);
  std::string message(Byteword error) const;
  void reset();
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::vector<std::string>> entries_;
};

/// State shared by all tiles of a machine, read-only during a run except for
/// the thread-safe members.
struct TileShared {
  CodeStore* code = nullptr;
  ErrorTable* errors = nullptr;
  kernel::Heap* heap = nullptr;
  const kernel::KernelRegistry* registry = nullptr;
  std::uint16_t tile_count = 1;
  std::vector<Byteword> host_args;
};

/// One reduction engine: a subtask list, its free stack, and the logic of
/// request parsing, result collection and kernel dispatch. Not thread-safe;
/// a tile is driven by exactly one thread at a time.
class Tile final : public kernel::KernelContext {
 public:
  struct Slot {
    Byteword value;
    bool present = false;
  };
  struct Record {
    bool live = false;
    Caller caller;
    std::uint32_t code = 0;
    Byteword op;
    std::vector<Slot> args;
    std::uint32_t pending = 0;
  };

  /// `kernels` is indexed by service id. `arena` selects the runtime code
  /// arena this tile appends beta-reduced code to.
  Tile(std::uint16_t id, TileShared& shared, std::vector<kernel::Kernel*> kernels, Outbox& out,
       std::size_t capacity, OverloadPolicy overload, std::size_t arena);

  void handle(const Packet& p);

  std::uint16_t id() const { return id_; }
  std::size_t capacity() const { return records_.size(); }
  std::size_t free_count() const { return free_.size(); }
  std::size_t live_count() const;
  std::size_t parked_count() const { return parked_.size(); }
  const Record& record(std::uint32_t addr) const { return records_.at(addr); }

  /// Frees every record and drops parked requests; used after an aborted run.
  void clear();

  // KernelContext
  std::uint16_t tile() const override { return id_; }
  std::uint16_t tile_count() const override { return shared_.tile_count; }
  Byteword host_arg(std::size_t index) const override;
  kernel::Heap& heap() override { return *shared_.heap; }

 private:
  struct Outcome {
    Byteword word;
    bool forward = false;  // word is a reference to evaluate on the caller's behalf
  };
  using Subst = std::vector<std::pair<std::uint32_t, Byteword>>;
  using Memo = std::unordered_map<std::uint32_t, std::uint32_t>;

  void on_request(const Packet& p);
  void on_result(const Packet& p);
  void complete(std::uint32_t addr);
  void release(std::uint32_t addr);
  void grow();

  void reply(const Caller& to, Byteword value);
  void forward(const Caller& to, Byteword ref);
  Byteword error(const Record& r, const std::string& message);

  Outcome finish_beta(const Record& r);
  Outcome finish_if(const Record& r);
  Outcome finish_kernel(const Record& r);

  std::uint32_t copy(std::uint32_t addr, const Subst& subst, Memo& memo);
  std::string op_name(const Record& r) const;

  std::uint16_t id_;
  TileShared& shared_;
  std::vector<kernel::Kernel*> kernels_;
  Outbox& out_;
  OverloadPolicy overload_;
  std::size_t arena_;
  std::vector<Record> records_;
  std::vector<std::uint32_t> free_;
  std::deque<Packet> parked_;
  bool draining_ = false;
  std::vector<Byteword> scratch_;
};

}  // namespace gprm::vm

#pragma once

#include <any>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gprm/bytecode/image.hpp"
#include "gprm/kernel/registry.hpp"
#include "gprm/vm/code_store.hpp"
#include "gprm/vm/packet.hpp"
#include "gprm/vm/tile.hpp"

namespace gprm::vm {

enum class Executor : std::uint8_t {
  Threads,  // one event loop per worker thread
  Stepped,  // single thread; a seeded RNG picks which queue delivers next
};

struct MachineConfig {
  /// Worker threads. Tile t is hosted by worker t % threads.
  unsigned threads = 1;
  bool trace = false;
  /// Initial subtask list size per tile.
  std::size_t subtask_capacity = 1024;
  OverloadPolicy overload = OverloadPolicy::Grow;
  Executor executor = Executor::Threads;
};

struct RunOptions {
  /// Threads: seeds random yields and short sleeps in the workers.
  /// Stepped: seeds the delivery order (0 when unset).
  std::optional<std::uint64_t> seed;
};

struct TraceEvent {
  std::uint64_t seq = 0;
  Packet::Kind kind = Packet::Kind::ReferenceRequest;
  std::uint16_t src = 0;
  std::uint16_t dst = 0;
  Caller caller;
  Byteword payload;

  /// "seq kind src dst caller_addr arg_idx payload_hex"
  std::string str() const;
};

/// State of the machine after a run: everything freed, nothing queued.
struct QuiescenceReport {
  bool clean = true;
  std::size_t live_records = 0;
  std::size_t queued_packets = 0;
  std::size_t parked_requests = 0;
  std::string detail;
};

class Machine {
 public:
  /// Throws RuntimeError for a zero or excessive thread count and ImageError
  /// when the image does not match the registry.
  Machine(bc::BytecodeImage image, const kernel::KernelRegistry& registry, MachineConfig config = {});
  ~Machine();

  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  /// Data for ctrl.reg, kept across runs. Invalidates the previous run's
  /// results.
  std::size_t register_data(std::any value);

  /// Evaluates the root. The returned word stays readable until the next
  /// run. Throws RuntimeError for kernel errors and stuck reductions, and
  /// ProtocolError when the run leaves records or packets behind.
  Byteword run(std::vector<Byteword> host_args = {}, RunOptions options = {});

  kernel::Datum read(Byteword w) const { return heap_.read(w); }
  kernel::Heap& heap() { return heap_; }

  /// Packets of the last run in send order. Empty unless tracing.
  const std::vector<TraceEvent>& trace() const { return trace_; }
  void write_trace(std::ostream& out) const;

  /// Code at a reference, compile-time or produced by the last run.
  std::span<const Byteword> code_at(std::uint32_t addr) const { return code_.at(addr); }
  const QuiescenceReport& quiescence() const { return quiescence_; }

  const bc::BytecodeImage& image() const { return image_; }
  const kernel::KernelRegistry& registry() const { return registry_; }
  std::uint16_t tile_count() const { return image_.tile_count; }
  /// The host's pseudo-tile number.
  std::uint16_t gateway() const { return image_.tile_count; }
  unsigned threads() const { return config_.threads; }
  std::size_t runs() const { return runs_; }

 private:
  struct Mailbox {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Packet> queue;
  };
  class Router;

  void validate() const;
  void send(const Packet& p);
  void deliver_to_host(const Packet& p);
  void worker_loop(unsigned index);
  void process(const Packet& p);
  void run_threads(const Packet& root, std::optional<std::uint64_t> seed);
  void run_stepped(const Packet& root, std::uint64_t seed);
  QuiescenceReport check_quiescence() const;

  bc::BytecodeImage image_;
  kernel::KernelRegistry registry_;
  MachineConfig config_;
  CodeStore code_;
  ErrorTable errors_;
  kernel::Heap heap_;
  TileShared shared_;
  std::unique_ptr<Router> router_;

  std::vector<std::unique_ptr<kernel::Kernel>> kernel_instances_;
  std::vector<std::unique_ptr<Tile>> tiles_;

  // Trace.
  std::mutex trace_mutex_;
  std::vector<TraceEvent> trace_;

  // Host gateway.
  std::mutex host_mutex_;
  std::condition_variable host_ready_;
  std::optional<Byteword> root_result_;
  std::atomic<std::int64_t> outstanding_{0};
  std::exception_ptr fatal_;

  // Threads executor.
  std::vector<std::unique_ptr<Mailbox>> mailboxes_;
  std::vector<std::thread> workers_;
  std::atomic<bool> stopping_{false};
  std::vector<std::uint64_t> jitter_seeds_;
  std::atomic<bool> jitter_{false};

  // Stepped executor.
  std::vector<std::deque<Packet>> step_queues_;
  std::vector<std::size_t> step_active_;

  QuiescenceReport quiescence_;
  std::size_t runs_ = 0;
  bool broken_ = false;
};

/// Process-wide observer of every post-run quiescence report, called on the
/// thread that called Machine::run. Pass an empty function to remove it.
using QuiescenceHook = std::function<void(const Machine&, const QuiescenceReport&)>;
void set_quiescence_hook(QuiescenceHook hook);

}  // namespace gprm::vm

#include "gprm/vm/machine.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <random>

#include "gprm/error.hpp"

namespace gprm::vm {

class Machine::Router final : public Outbox {
 public:
  explicit Router(Machine& m) : m_(m) {}
  void send(const Packet& p) override { m_.send(p); }

 private:
  Machine& m_;
};

std::string TraceEvent::str() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%" PRIu64 " %s %u %u %" PRIu32 " %u %016" PRIx64, seq,
                kind == Packet::Kind::ReferenceRequest ? "REF" : "RES", unsigned{src}, unsigned{dst}, caller.addr,
                unsigned{caller.arg}, payload.bits());
  return buf;
}

namespace {

unsigned checked_threads(const MachineConfig& c) {
  if (c.threads == 0) throw RuntimeError("thread count must be at least 1");
  if (c.threads > CodeStore::kMaxArenas) {
    throw RuntimeError("thread count must be at most " + std::to_string(CodeStore::kMaxArenas));
  }
  return c.threads;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Machine::Machine(bc::BytecodeImage image, const kernel::KernelRegistry& registry, MachineConfig config)
    : image_(std::move(image)),
      registry_(registry),
      config_(config),
      code_(image_.code, checked_threads(config)),
      router_(std::make_unique<Router>(*this)) {
  if (image_.tile_count == 0) throw ImageError("image tile count is zero");
  if (config_.subtask_capacity == 0) throw RuntimeError("subtask list capacity must be at least 1");
  validate();

  shared_.code = &code_;
  shared_.errors = &errors_;
  shared_.heap = &heap_;
  shared_.registry = &registry_;
  shared_.tile_count = image_.tile_count;

  const std::uint16_t tiles = image_.tile_count;
  std::vector<kernel::Kernel*> shared_instances(registry_.size(), nullptr);
  for (std::uint16_t s = 0; s < registry_.size(); ++s) {
    if (!registry_.service(s).stateless) continue;
    kernel_instances_.push_back(registry_.service(s).factory());
    shared_instances[s] = kernel_instances_.back().get();
  }
  for (std::uint16_t t = 0; t < tiles; ++t) {
    std::vector<kernel::Kernel*> kernels = shared_instances;
    for (std::uint16_t s = 0; s < registry_.size(); ++s) {
      if (kernels[s]) continue;
      kernel_instances_.push_back(registry_.service(s).factory());
      kernels[s] = kernel_instances_.back().get();
    }
    tiles_.push_back(std::make_unique<Tile>(t, shared_, std::move(kernels), *router_, config_.subtask_capacity,
                                            config_.overload, t % config_.threads));
  }

  if (config_.executor == Executor::Stepped) {
    step_queues_.resize(std::size_t{tiles} * (std::size_t{tiles} + 1));
  } else {
    jitter_seeds_.assign(config_.threads, 0);
    for (unsigned i = 0; i < config_.threads; ++i) mailboxes_.push_back(std::make_unique<Mailbox>());
    for (unsigned i = 0; i < config_.threads; ++i) workers_.emplace_back([this, i] { worker_loop(i); });
  }
}

Machine::~Machine() {
  stopping_ = true;
  for (auto& mb : mailboxes_) {
    std::lock_guard lock(mb->mutex);
    mb->ready.notify_all();
  }
  for (std::thread& t : workers_) t.join();
}

void Machine::validate() const {
  for (const bc::Symbol& s : image_.symbols) {
    const auto id = registry_.resolve(s.name);
    if (!id || *id != s.id) throw ImageError("image/registry symbol mismatch for '" + s.name + "'");
  }
  const std::size_t n = image_.code.size();
  if (n == 0) throw ImageError("image has no code");
  auto check_ref = [&](Byteword w) {
    if (w.ref().code_addr >= n) throw ImageError("dangling reference r" + std::to_string(w.ref().code_addr));
    if (w.ref().tile_id >= image_.tile_count) throw ImageError("reference tile out of range");
  };
  for (std::size_t addr = 0; addr < n; ++addr) {
    const auto& words = image_.code[addr];
    const std::string where = " in r" + std::to_string(addr);
    if (words.empty()) throw ImageError("empty code entry" + where);
    const Byteword op = words[0];
    const std::size_t argc = words.size() - 1;
    if (op.is(BuiltinTag::SpecialForm)) {
      switch (op.special_form()) {
        case SpecialForm::Lambda:
          if (argc == 0 || !words.back().quoted()) throw ImageError("lambda without a quoted body" + where);
          for (std::size_t i = 1; i < argc; ++i) {
            if (!words[i].is(WordKind::Var) || !words[i].quoted()) throw ImageError("bad lambda parameter" + where);
          }
          break;
        case SpecialForm::Beta:
          if (argc == 0) throw ImageError("beta without operands" + where);
          break;
        case SpecialForm::If:
          if (argc != 3) throw ImageError("if needs three operands" + where);
          break;
        default:
          throw ImageError("unknown special form" + where);
      }
    } else if (op.is(WordKind::Operation)) {
      if (!image_.symbol(op.op()) || !registry_.contains(op.op())) throw ImageError("operation without a kernel" + where);
      if (!registry_.method(op.op()).accepts(argc)) {
        throw ImageError("arity mismatch for " + registry_.name_of(op.op()) + where);
      }
    } else {
      throw ImageError("code entry does not start with an operation" + where);
    }
    for (std::size_t i = 1; i < words.size(); ++i) {
      const Byteword w = words[i];
      if (w.is_reference()) {
        check_ref(w);
      } else if (!w.is_int() && !w.is(WordKind::Var)) {
        throw ImageError("unexpected operand " + describe(w) + where);
      }
    }
  }
  if (!image_.root.is_reference() || image_.root.quoted()) throw ImageError("root is not an unquoted reference");
  check_ref(image_.root);
}

std::size_t Machine::register_data(std::any value) {
  heap_.reset();
  return heap_.register_data(std::move(value));
}

void Machine::send(const Packet& p) {
  if (config_.trace) {
    std::lock_guard lock(trace_mutex_);
    trace_.push_back(TraceEvent{trace_.size(), p.kind, p.src, p.dest, p.caller, p.payload});
  }
  if (p.dest == gateway()) {
    if (p.kind != Packet::Kind::Result) throw ProtocolError("reference request addressed to the host");
    deliver_to_host(p);
    return;
  }
  if (p.dest > gateway()) throw ProtocolError("packet for unknown tile " + std::to_string(p.dest));
  outstanding_.fetch_add(1, std::memory_order_relaxed);
  if (config_.executor == Executor::Stepped) {
    const std::size_t q = std::size_t{p.dest} * (std::size_t{tile_count()} + 1) + p.src;
    if (step_queues_[q].empty()) step_active_.push_back(q);
    step_queues_[q].push_back(p);
    return;
  }
  Mailbox& mb = *mailboxes_[p.dest % config_.threads];
  {
    std::lock_guard lock(mb.mutex);
    mb.queue.push_back(p);
  }
  mb.ready.notify_one();
}

void Machine::deliver_to_host(const Packet& p) {
  std::lock_guard lock(host_mutex_);
  if (root_result_) throw ProtocolError("second result delivered to the host");
  root_result_ = p.payload;
  host_ready_.notify_all();
}

void Machine::process(const Packet& p) { tiles_[p.dest]->handle(p); }

void Machine::worker_loop(unsigned index) {
  Mailbox& mb = *mailboxes_[index];
  std::mt19937_64 rng;
  std::size_t seen_run = 0;
  for (;;) {
    Packet p;
    {
      std::unique_lock lock(mb.mutex);
      mb.ready.wait(lock, [&] { return !mb.queue.empty() || stopping_; });
      if (mb.queue.empty()) return;
      p = mb.queue.front();
      mb.queue.pop_front();
    }
    if (jitter_.load(std::memory_order_relaxed)) {
      // runs_ and the seeds are written before the root packet is queued.
      if (seen_run != runs_) {
        seen_run = runs_;
        rng.seed(jitter_seeds_[index]);
      }
      const auto r = rng() % 16;
      if (r < 4) {
        std::this_thread::yield();
      } else if (r == 4) {
        std::this_thread::sleep_for(std::chrono::microseconds(rng() % 20));
      }
    }
    try {
      process(p);
    } catch (...) {
      std::lock_guard lock(host_mutex_);
      if (!fatal_) fatal_ = std::current_exception();
      host_ready_.notify_all();
    }
    if (outstanding_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard lock(host_mutex_);
      host_ready_.notify_all();
    }
  }
}

void Machine::run_threads(const Packet& root, std::optional<std::uint64_t> seed) {
  jitter_ = seed.has_value();
  if (seed) {
    for (unsigned i = 0; i < config_.threads; ++i) jitter_seeds_[i] = splitmix(*seed * 0x100 + i);
  }
  send(root);
  std::unique_lock lock(host_mutex_);
  host_ready_.wait(lock, [&] { return fatal_ || outstanding_.load(std::memory_order_acquire) == 0; });
  if (fatal_) {
    broken_ = true;
    std::rethrow_exception(fatal_);
  }
}

void Machine::run_stepped(const Packet& root, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  try {
    send(root);
    while (!step_active_.empty()) {
      const std::size_t k = rng() % step_active_.size();
      const std::size_t q = step_active_[k];
      const Packet p = step_queues_[q].front();
      step_queues_[q].pop_front();
      if (step_queues_[q].empty()) {
        step_active_[k] = step_active_.back();
        step_active_.pop_back();
      }
      process(p);
      outstanding_.fetch_sub(1, std::memory_order_relaxed);
    }
  } catch (...) {
    broken_ = true;
    throw;
  }
}

QuiescenceReport Machine::check_quiescence() const {
  QuiescenceReport r;
  for (const auto& t : tiles_) {
    r.live_records += t->live_count();
    r.parked_requests += t->parked_count();
    if (t->free_count() != t->capacity()) r.detail += "tile " + std::to_string(t->id()) + " subtask stack not full; ";
  }
  for (const auto& mb : mailboxes_) {
    std::lock_guard lock(mb->mutex);
    r.queued_packets += mb->queue.size();
  }
  for (const auto& q : step_queues_) r.queued_packets += q.size();
  const auto in_flight = outstanding_.load();
  if (r.live_records) r.detail += std::to_string(r.live_records) + " live record(s); ";
  if (r.parked_requests) r.detail += std::to_string(r.parked_requests) + " parked request(s); ";
  if (r.queued_packets) r.detail += std::to_string(r.queued_packets) + " queued packet(s); ";
  if (in_flight) r.detail += std::to_string(in_flight) + " packet(s) in flight; ";
  r.clean = r.detail.empty();
  return r;
}

namespace {

std::mutex hook_mutex;
QuiescenceHook hook;

}  // namespace

void set_quiescence_hook(QuiescenceHook h) {
  std::lock_guard lock(hook_mutex);
  hook = std::move(h);
}

Byteword Machine::run(std::vector<Byteword> host_args, RunOptions options) {
  if (broken_) throw RuntimeError("machine is unusable after a protocol error");
  if (host_args.size() < image_.host_arity) {
    throw RuntimeError("program reads " + std::to_string(image_.host_arity) + " host argument(s), got " +
                       std::to_string(host_args.size()));
  }
  heap_.reset();
  code_.reset();
  errors_.reset();
  trace_.clear();
  root_result_.reset();
  shared_.host_args = std::move(host_args);
  ++runs_;

  const Packet root = Packet::request(image_.root.ref().tile_id, gateway(), Caller{gateway(), 0, 0}, image_.root);
  if (config_.executor == Executor::Stepped) {
    run_stepped(root, options.seed.value_or(0));
  } else {
    run_threads(root, options.seed);
  }

  quiescence_ = check_quiescence();
  {
    std::lock_guard lock(hook_mutex);
    if (hook) hook(*this, quiescence_);
  }
  if (!root_result_) {
    // Every record still live waits for a packet that will never come.
    const std::string detail = quiescence_.detail;
    for (auto& t : tiles_) t->clear();
    throw RuntimeError("stuck reduction: no packets in flight and no result for the host (" + detail + ")");
  }
  if (!quiescence_.clean) {
    broken_ = true;
    throw ProtocolError("run finished with state left behind: " + quiescence_.detail);
  }
  const Byteword result = *root_result_;
  if (result.is(BuiltinTag::Error)) throw RuntimeError(errors_.message(result));
  return result;
}

void Machine::write_trace(std::ostream& out) const {
  for (const TraceEvent& e : trace_) out << e.str() << '\n';
}

}  // namespace gprm::vm

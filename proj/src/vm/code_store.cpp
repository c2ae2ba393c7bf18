#include "gprm/vm/code_store.hpp"

#include "gprm/error.hpp"

namespace gprm::vm {

namespace {

// closed[a] for every compile-time entry; iterative DFS, since nesting can be
// deep in generated code.
std::vector<bool> compute_closed(const std::vector<std::vector<Byteword>>& code) {
  enum : std::uint8_t { kNew, kOpen, kDone };
  std::vector<std::uint8_t> state(code.size(), kNew);
  std::vector<bool> closed(code.size(), true);
  for (std::uint32_t start = 0; start < code.size(); ++start) {
    if (state[start] != kNew) continue;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{start, 1}};
    state[start] = kOpen;
    while (!stack.empty()) {
      auto& [addr, next] = stack.back();
      const auto& words = code[addr];
      if (next < words.size()) {
        const Byteword w = words[next++];
        if (w.is(WordKind::Var)) {
          closed[addr] = false;
        } else if (w.is_reference()) {
          const std::uint32_t child = w.ref().code_addr;
          if (child >= code.size()) throw ImageError("dangling reference r" + std::to_string(child));
          if (state[child] == kOpen) throw ImageError("cyclic code graph at r" + std::to_string(child));
          if (state[child] == kNew) {
            state[child] = kOpen;
            stack.emplace_back(child, 1);
          }
        }
        continue;
      }
      for (std::size_t i = 1; i < words.size(); ++i) {
        if (words[i].is_reference() && !closed[words[i].ref().code_addr]) closed[addr] = false;
      }
      state[addr] = kDone;
      stack.pop_back();
    }
  }
  return closed;
}

}  // namespace

CodeStore::CodeStore(std::vector<std::vector<Byteword>> code, std::size_t arenas) : code_(std::move(code)) {
  if (arenas == 0 || arenas > kMaxArenas) throw RuntimeError("code store: arena count out of range");
  if (code_.size() >= bc::kRuntimeAddressBit) throw ImageError("code section too large");
  closed_ = compute_closed(code_);
  arenas_.reserve(arenas);
  for (std::size_t i = 0; i < arenas; ++i) arenas_.push_back(std::make_unique<Arena>());
}

CodeStore::~CodeStore() = default;

const CodeStore::Entry* CodeStore::runtime_entry(std::uint32_t addr) const {
  const std::uint32_t arena = (addr >> 24) & 0x7F;
  const std::uint32_t local = addr & (kArenaEntries - 1);
  if (arena >= arenas_.size()) return nullptr;
  const Arena& a = *arenas_[arena];
  if (local >= a.size.load(std::memory_order_acquire)) return nullptr;
  return &(*a.chunks[local >> kChunkBits])[local & (kChunkSize - 1)];
}

bool CodeStore::contains(std::uint32_t addr) const {
  return is_runtime(addr) ? runtime_entry(addr) != nullptr : addr < code_.size();
}

std::span<const Byteword> CodeStore::at(std::uint32_t addr) const {
  if (!is_runtime(addr)) {
    if (addr >= code_.size()) throw ProtocolError("no code at r" + std::to_string(addr));
    return code_[addr];
  }
  const Entry* e = runtime_entry(addr);
  if (!e) throw ProtocolError("no runtime code at address " + std::to_string(addr));
  return e->words;
}

bool CodeStore::closed(std::uint32_t addr) const {
  if (!is_runtime(addr)) return addr < closed_.size() && closed_[addr];
  const Entry* e = runtime_entry(addr);
  return e && e->closed;
}

std::uint32_t CodeStore::append(std::size_t arena, std::vector<Byteword> words, bool closed) {
  Arena& a = *arenas_.at(arena);
  const std::uint32_t local = a.size.load(std::memory_order_relaxed);
  if (local >= kArenaEntries) throw RuntimeError("runtime code arena exhausted");
  auto& chunk = a.chunks[local >> kChunkBits];
  if (!chunk) chunk = std::make_unique<Chunk>();
  Entry& e = (*chunk)[local & (kChunkSize - 1)];
  e.words = std::move(words);
  e.closed = closed;
  a.size.store(local + 1, std::memory_order_release);
  return bc::kRuntimeAddressBit | (static_cast<std::uint32_t>(arena) << 24) | local;
}

void CodeStore::reset() {
  for (auto& a : arenas_) a->size.store(0, std::memory_order_relaxed);
}

std::size_t CodeStore::runtime_size() const {
  std::size_t n = 0;
  for (const auto& a : arenas_) n += a->size.load(std::memory_order_relaxed);
  return n;
}

}  // namespace gprm::vm

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gprm/bytecode/byteword.hpp"
#include "gprm/bytecode/image.hpp"

namespace gprm::vm {

/// Bytecode visible to the tiles. The compile-time region is the image's
/// code, immutable after construction. Beta reduction appends fresh entries
/// to per-worker runtime arenas; an entry is written once, before any packet
/// referencing it is sent.
///
/// Runtime address: bit 31 set, bits 30..24 arena, bits 23..0 local index.
class CodeStore {
 public:
  static constexpr std::size_t kMaxArenas = 128;
  static constexpr std::uint32_t kArenaEntries = 1u << 24;

  CodeStore(std::vector<std::vector<Byteword>> code, std::size_t arenas);
  ~CodeStore();

  CodeStore(const CodeStore&) = delete;
  CodeStore& operator=(const CodeStore&) = delete;

  std::span<const Byteword> at(std::uint32_t addr) const;
  bool contains(std::uint32_t addr) const;
  /// True when no Var word is reachable from the entry, so substitution can
  /// share it instead of copying.
  bool closed(std::uint32_t addr) const;

  /// Only the worker owning `arena` may call this during a run.
  std::uint32_t append(std::size_t arena, std::vector<Byteword> words, bool closed);

  /// Drops all runtime entries. Only between runs.
  void reset();

  std::size_t compile_time_size() const { return code_.size(); }
  std::size_t runtime_size() const;

  static bool is_runtime(std::uint32_t addr) { return addr & bc::kRuntimeAddressBit; }

 private:
  struct Entry {
    std::vector<Byteword> words;
    bool closed = false;
  };
  static constexpr std::uint32_t kChunkBits = 12;
  static constexpr std::uint32_t kChunkSize = 1u << kChunkBits;
  using Chunk = std::array<Entry, kChunkSize>;
  struct Arena {
    std::array<std::unique_ptr<Chunk>, kArenaEntries / kChunkSize> chunks;
    std::atomic<std::uint32_t> size{0};
  };

  const Entry* runtime_entry(std::uint32_t addr) const;

  std::vector<std::vector<Byteword>> code_;
  std::vector<bool> closed_;
  std::vector<std::unique_ptr<Arena>> arenas_;
};

}  // namespace gprm::vm

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gprm/bytecode/byteword.hpp"
#include "gprm/bytecode/flat.hpp"
#include "gprm/kernel/registry.hpp"

namespace gprm::bc {

inline constexpr std::uint16_t kImageVersion = 1;
/// Compile-time code addresses live below this bit; runtime (beta-reduced)
/// code above it.
inline constexpr std::uint32_t kRuntimeAddressBit = 0x8000'0000u;

struct Symbol {
  OpId id;
  std::string name;

  bool operator==(const Symbol&) const = default;
};

/// Encoded program.
///
/// File layout, all integers little-endian:
///
///   "GPRM"  u16 version  u16 tile_count  u16 host_arity
///   u32 symbol_count   { u16 service  u16 method  u16 len  name[len] }
///   u32 entry_count    { u32 addr  u16 word_count  u64 word[word_count] }
///   u64 root reference word
struct BytecodeImage {
  std::uint16_t version = kImageVersion;
  std::uint16_t tile_count = 1;
  /// Number of host arguments the program reads through ctrl.arg.
  std::uint16_t host_arity = 0;
  std::vector<Symbol> symbols;
  /// Indexed by code address.
  std::vector<std::vector<Byteword>> code;
  Byteword root;

  bool operator==(const BytecodeImage&) const = default;

  const Symbol* symbol(OpId id) const;
};

/// Resolves operations through `registry` and packs entries into bytewords.
/// Throws CompileError for unknown operations, arity mismatches, empty
/// programs and address exhaustion.
BytecodeImage encode(const FlatProgram& p, const kernel::KernelRegistry& registry);

/// Inverse of encode; operation names come from the image's symbol table.
FlatProgram decode(const BytecodeImage& img);

std::vector<std::uint8_t> write_image(const BytecodeImage& img);
/// Throws ImageError on malformed input.
BytecodeImage read_image(std::span<const std::uint8_t> bytes);

void save_image(const BytecodeImage& img, const std::filesystem::path& path);
BytecodeImage load_image(const std::filesystem::path& path);

/// parse -> desugar -> flatten -> assign_tiles -> encode.
BytecodeImage compile(std::string_view gpir_text, std::uint16_t tile_count, const kernel::KernelRegistry& registry);

}  // namespace gprm::bc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gprm/gpir/expr.hpp"

namespace gprm::bc {

/// One operand of a flat S-expression: never a nested list.
struct FlatAtom {
  enum class Kind : std::uint8_t { Ref, Const, Var };

  Kind kind = Kind::Const;
  bool quoted = false;
  std::uint32_t addr = 0;  // Ref
  std::int32_t value = 0;  // Const
  std::uint32_t slot = 0;  // Var

  static FlatAtom ref(std::uint32_t addr, bool quoted = false) {
    FlatAtom a;
    a.kind = Kind::Ref;
    a.addr = addr;
    a.quoted = quoted;
    return a;
  }
  static FlatAtom constant(std::int32_t v, bool quoted = false) {
    FlatAtom a;
    a.kind = Kind::Const;
    a.value = v;
    a.quoted = quoted;
    return a;
  }
  static FlatAtom var(std::uint32_t slot, bool quoted = false) {
    FlatAtom a;
    a.kind = Kind::Var;
    a.slot = slot;
    a.quoted = quoted;
    return a;
  }

  bool operator==(const FlatAtom&) const = default;
};

struct FlatEntry {
  std::string op;  // "lambda", "beta", "if", a builtin name, or "service.method"
  std::vector<FlatAtom> args;
  /// Tile the entry is evaluated on when referenced without ctrl.run.
  std::uint16_t tile = 0;

  bool operator==(const FlatEntry&) const = default;
};

/// Map from code address to flat S-expression. Addresses are dense from 0,
/// allocated root first, left to right.
struct FlatProgram {
  std::vector<FlatEntry> entries;
  std::uint32_t root = 0;
  std::uint16_t tile_count = 1;
  /// Source names of variable slots; informational, not part of equality.
  std::vector<std::string> var_names;

  bool operator==(const FlatProgram& o) const {
    return entries == o.entries && root == o.root && tile_count == o.tile_count;
  }

  std::uint16_t tile_of(const FlatAtom& a) const { return entries.at(a.addr).tile; }
};

/// Replaces every non-literal sub-expression with a fresh reference. Input
/// must be desugared; labels are resolved to shared entries.
FlatProgram flatten(const gpir::Expr& e);

/// Sibling references get distinct tiles round-robin from 1; an only child
/// stays on its parent's tile; the root is tile 0.
FlatProgram assign_tiles(FlatProgram p, std::uint16_t tile_count);

/// "r0 => (t1.m2 r1 r2)" lines, one per entry, for diagnostics and tests.
std::string print_flat(const FlatProgram& p);

}  // namespace gprm::bc

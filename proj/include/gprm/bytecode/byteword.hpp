#pragma once

#include <cstdint>
#include <string>

namespace gprm {

enum class WordKind : std::uint8_t {
  Reference = 0,
  ConstInt = 1,
  Operation = 2,
  Var = 3,
  Builtin = 4,
};

/// Sub-kinds of Builtin words, stored in the low reserved bits.
enum class BuiltinTag : std::uint8_t {
  SpecialForm = 0,  // engine-handled operation (lambda, beta, if)
  Nil = 1,          // empty list
  Cons = 2,         // index of a cons cell in the heap
  Data = 3,         // index of an opaque host/kernel data handle
  Lambda = 4,       // lambda value: tile ++ code address of its lambda entry
  Error = 5,        // index into the run's error table
};

enum class SpecialForm : std::uint16_t {
  Lambda = 1,
  Beta = 2,
  If = 3,
};

/// Code address and tile of a flat S-expression.
struct Reference {
  std::uint32_t code_addr = 0;
  std::uint16_t tile_id = 0;

  bool operator==(const Reference&) const = default;
};

/// Operation identifier: a method of a registered kernel service.
struct OpId {
  std::uint16_t service = 0;
  std::uint16_t method = 0;

  bool operator==(const OpId&) const = default;
  auto operator<=>(const OpId&) const = default;
};

/// 64-bit encoded cell.
///
///   63..60  kind
///   59      quote flag (Reference, ConstInt and Var only)
///   58..51  reserved, zero
///   50..48  Builtin tag (zero for other kinds)
///   47..0   payload
///
/// Payloads: Reference = tile(16) ++ addr(32); Operation = service(16) ++
/// method(16) ++ zero(16); ConstInt = sign-extended 32-bit value; Var =
/// variable slot; Builtin = tag-specific index.
class Byteword {
 public:
  static constexpr std::uint64_t kPayloadMask = (std::uint64_t{1} << 48) - 1;

  constexpr Byteword() = default;

  static constexpr Byteword reference(Reference r, bool quoted = false) {
    return Byteword(WordKind::Reference, quoted, 0,
                    (std::uint64_t{r.tile_id} << 32) | std::uint64_t{r.code_addr});
  }
  static constexpr Byteword integer(std::int32_t v, bool quoted = false) {
    return Byteword(WordKind::ConstInt, quoted, 0,
                    static_cast<std::uint64_t>(static_cast<std::int64_t>(v)) & kPayloadMask);
  }
  static constexpr Byteword operation(OpId op) {
    return Byteword(WordKind::Operation, false, 0,
                    (std::uint64_t{op.service} << 32) | (std::uint64_t{op.method} << 16));
  }
  static constexpr Byteword var(std::uint32_t slot, bool quoted = false) {
    return Byteword(WordKind::Var, quoted, 0, slot);
  }
  static constexpr Byteword builtin(BuiltinTag tag, std::uint64_t payload) {
    return Byteword(WordKind::Builtin, false, static_cast<std::uint8_t>(tag), payload & kPayloadMask);
  }
  static constexpr Byteword special(SpecialForm f) { return builtin(BuiltinTag::SpecialForm, static_cast<std::uint16_t>(f)); }
  static constexpr Byteword nil() { return builtin(BuiltinTag::Nil, 0); }
  static constexpr Byteword lambda(Reference r) {
    return builtin(BuiltinTag::Lambda, (std::uint64_t{r.tile_id} << 32) | r.code_addr);
  }

  /// Reinterprets raw bits, validating the layout. Throws ImageError.
  static Byteword from_bits(std::uint64_t bits);

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr WordKind kind() const noexcept { return static_cast<WordKind>(bits_ >> 60); }
  constexpr bool quoted() const noexcept { return (bits_ >> 59) & 1; }
  constexpr std::uint64_t payload() const noexcept { return bits_ & kPayloadMask; }
  constexpr BuiltinTag tag() const noexcept { return static_cast<BuiltinTag>((bits_ >> 48) & 0x7); }

  constexpr bool is(WordKind k) const noexcept { return kind() == k; }
  constexpr bool is(BuiltinTag t) const noexcept { return kind() == WordKind::Builtin && tag() == t; }
  constexpr bool is_reference() const noexcept { return is(WordKind::Reference); }
  constexpr bool is_int() const noexcept { return is(WordKind::ConstInt); }
  constexpr bool is_list() const noexcept { return is(BuiltinTag::Nil) || is(BuiltinTag::Cons); }

  constexpr Reference ref() const noexcept {
    return Reference{static_cast<std::uint32_t>(payload()), static_cast<std::uint16_t>(payload() >> 32)};
  }
  constexpr std::int32_t int_value() const noexcept { return static_cast<std::int32_t>(static_cast<std::uint32_t>(payload())); }
  constexpr OpId op() const noexcept {
    return OpId{static_cast<std::uint16_t>(payload() >> 32), static_cast<std::uint16_t>(payload() >> 16)};
  }
  constexpr std::uint32_t var_slot() const noexcept { return static_cast<std::uint32_t>(payload()); }
  constexpr SpecialForm special_form() const noexcept { return static_cast<SpecialForm>(payload()); }
  constexpr std::uint64_t index() const noexcept { return payload(); }

  /// Same word with the quote flag set or cleared. Kinds that cannot carry a
  /// quote are returned unchanged.
  constexpr Byteword with_quote(bool q) const noexcept {
    if (!quotable(kind())) return *this;
    return Byteword((bits_ & ~(std::uint64_t{1} << 59)) | (std::uint64_t{q} << 59));
  }
  constexpr Byteword unquoted() const noexcept { return with_quote(false); }
  /// Reference with its tile field replaced.
  constexpr Byteword with_tile(std::uint16_t tile) const noexcept {
    return reference(Reference{ref().code_addr, tile}, quoted());
  }

  static constexpr bool quotable(WordKind k) noexcept {
    return k == WordKind::Reference || k == WordKind::ConstInt || k == WordKind::Var;
  }

  constexpr bool operator==(const Byteword&) const = default;

 private:
  constexpr explicit Byteword(std::uint64_t bits) : bits_(bits) {}
  constexpr Byteword(WordKind kind, bool quoted, std::uint8_t tag, std::uint64_t payload)
      : bits_((std::uint64_t{static_cast<std::uint8_t>(kind)} << 60) | (std::uint64_t{quoted} << 59) |
              (std::uint64_t{tag} << 48) | payload) {}

  std::uint64_t bits_ = 0;
};

/// Hex rendering of the raw bits, 16 digits.
std::string to_hex(Byteword w);

/// Short human-readable rendering for traces and diagnostics.
std::string describe(Byteword w);

}  // namespace gprm

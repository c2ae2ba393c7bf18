#include "gprm/bytecode/byteword.hpp"

#include <cstdio>

#include "gprm/error.hpp"

namespace gprm {

Byteword Byteword::from_bits(std::uint64_t bits) {
  const auto kind_bits = bits >> 60;
  if (kind_bits > static_cast<std::uint64_t>(WordKind::Builtin)) {
    throw ImageError("invalid byteword kind " + std::to_string(kind_bits));
  }
  const auto kind = static_cast<WordKind>(kind_bits);
  const bool quoted = (bits >> 59) & 1;
  const auto reserved = (bits >> 51) & 0xFF;
  const auto tag = (bits >> 48) & 0x7;
  if (reserved != 0) throw ImageError("byteword has reserved bits set");
  if (quoted && !quotable(kind)) throw ImageError("quote flag on a non-quotable byteword");
  if (kind != WordKind::Builtin && tag != 0) throw ImageError("builtin tag on a non-builtin byteword");
  if (kind == WordKind::Builtin && tag > static_cast<std::uint64_t>(BuiltinTag::Error)) {
    throw ImageError("invalid builtin tag " + std::to_string(tag));
  }
  if (kind == WordKind::Operation && (bits & 0xFFFF) != 0) throw ImageError("operation word has a nonzero low field");
  if (kind == WordKind::ConstInt) {
    // Payload must be the sign extension of its low 32 bits.
    const std::uint64_t payload = bits & kPayloadMask;
    const auto v = static_cast<std::int32_t>(static_cast<std::uint32_t>(payload));
    if ((static_cast<std::uint64_t>(static_cast<std::int64_t>(v)) & kPayloadMask) != payload) {
      throw ImageError("integer byteword is not sign-extended");
    }
  }
  return Byteword(bits);
}

std::string to_hex(Byteword w) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(w.bits()));
  return buf;
}

std::string describe(Byteword w) {
  const std::string q = w.quoted() ? "'" : "";
  switch (w.kind()) {
    case WordKind::Reference:
      return q + "r" + std::to_string(w.ref().code_addr) + "@" + std::to_string(w.ref().tile_id);
    case WordKind::ConstInt:
      return q + std::to_string(w.int_value());
    case WordKind::Operation:
      return "op" + std::to_string(w.op().service) + "." + std::to_string(w.op().method);
    case WordKind::Var:
      return q + "v" + std::to_string(w.var_slot());
    case WordKind::Builtin:
      break;
  }
  switch (w.tag()) {
    case BuiltinTag::SpecialForm:
      switch (w.special_form()) {
        case SpecialForm::Lambda:
          return "lambda";
        case SpecialForm::Beta:
          return "beta";
        case SpecialForm::If:
          return "if";
      }
      return "form?";
    case BuiltinTag::Nil:
      return "()";
    case BuiltinTag::Cons:
      return "cons#" + std::to_string(w.index());
    case BuiltinTag::Data:
      return "data#" + std::to_string(w.index());
    case BuiltinTag::Lambda: {
      const auto p = w.payload();
      return "<lambda r" + std::to_string(static_cast<std::uint32_t>(p)) + "@" + std::to_string(p >> 32) + ">";
    }
    case BuiltinTag::Error:
      return "error#" + std::to_string(w.index());
  }
  return "?";
}

}  // namespace gprm

#pragma once

#include <cstdint>
#include <string>

#include "gprm/bytecode/byteword.hpp"

namespace gprm::vm {

/// Where a result must be delivered: argument `arg` of record `addr` on `tile`.
struct Caller {
  std::uint16_t tile = 0;
  std::uint32_t addr = 0;
  std::uint16_t arg = 0;

  bool operator==(const Caller&) const = default;
};

struct Packet {
  enum class Kind : std::uint8_t { ReferenceRequest, Result };

  Kind kind = Kind::ReferenceRequest;
  std::uint16_t dest = 0;
  std::uint16_t src = 0;
  Caller caller;
  /// The reference to evaluate, or the result value.
  Byteword payload;

  static Packet request(std::uint16_t dest, std::uint16_t src, Caller caller, Byteword ref) {
    return Packet{Kind::ReferenceRequest, dest, src, caller, ref};
  }
  static Packet result(std::uint16_t src, Caller caller, Byteword value) {
    return Packet{Kind::Result, caller.tile, src, caller, value};
  }
};

/// Anything a tile can hand packets to.
class Outbox {
 public:
  virtual ~Outbox() = default;
  virtual void send(const Packet& p) = 0;
};

}  // namespace gprm::vm

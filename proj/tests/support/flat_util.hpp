#pragma once

#include <functional>

#include "gprm/bytecode/flat.hpp"

namespace gprm::testing {

// Decoded images carry no source names.
inline std::string var_name(const bc::FlatProgram& p, std::uint32_t slot) {
  return slot < p.var_names.size() ? p.var_names[slot] : "v" + std::to_string(slot);
}

/// Rebuilds the tree rooted at `addr` of a flat program.
inline gpir::Expr unflatten(const bc::FlatProgram& p, std::uint32_t addr) {
  using gpir::Expr;
  std::function<Expr(std::uint32_t)> entry;
  auto atom = [&](const bc::FlatAtom& a) {
    Expr e = a.kind == bc::FlatAtom::Kind::Const ? Expr::constant(a.value)
             : a.kind == bc::FlatAtom::Kind::Var ? Expr::var(var_name(p, a.slot))
                                                 : entry(a.addr);
    return a.quoted ? Expr::quoted(std::move(e)) : e;
  };
  entry = [&](std::uint32_t at) {
    std::vector<Expr> args;
    for (const bc::FlatAtom& a : p.entries.at(at).args) args.push_back(atom(a));
    return Expr::sexpr(p.entries[at].op, std::move(args));
  };
  return entry(addr);
}

inline gpir::Expr unflatten(const bc::FlatProgram& p) { return unflatten(p, p.root); }

}  // namespace gprm::testing

#include <map>
#include <set>
#include <utility>

#include "gprm/bytecode/flat.hpp"
#include "gprm/error.hpp"

namespace gprm::bc {

using gpir::Expr;
using gpir::ExprKind;

namespace {

void collect_labels(const Expr& e, std::map<std::string, const Expr*>& out) {
  if (e.is(ExprKind::Label)) out.emplace(e.name(), &e.inner());
  if (e.is(ExprKind::Quoted) || e.is(ExprKind::Label)) {
    collect_labels(e.inner(), out);
    return;
  }
  for (const Expr& a : e.args()) collect_labels(a, out);
}

class Flattener {
 public:
  explicit Flattener(const Expr& root) { collect_labels(root, labels_); }

  FlatProgram run(const Expr& root) {
    FlatAtom a = atom(root);
    if (a.kind != FlatAtom::Kind::Ref || a.quoted) throw CompileError("program root must be an S-expression");
    program_.root = a.addr;
    return std::move(program_);
  }

 private:
  std::uint32_t entry(const Expr& e) {
    for (auto sugar : {gpir::forms::kReturn, gpir::forms::kBegin, gpir::forms::kLet, gpir::forms::kAssign}) {
      if (e.is_form(sugar)) throw CompileError("flatten requires desugared input, found '" + e.name() + "'");
    }
    const auto addr = static_cast<std::uint32_t>(program_.entries.size());
    program_.entries.push_back(FlatEntry{e.name(), {}, 0});
    std::vector<FlatAtom> args;
    args.reserve(e.args().size());
    if (e.is_form(gpir::forms::kLambda)) {
      const std::size_t mark = scope_.size();
      for (std::size_t i = 0; i + 1 < e.args().size(); ++i) {
        const Expr& formal = e.args()[i];
        if (!formal.is(ExprKind::Quoted) || !formal.inner().is(ExprKind::Var)) {
          throw CompileError("lambda parameter must be a quoted identifier");
        }
        const auto slot = static_cast<std::uint32_t>(program_.var_names.size());
        program_.var_names.push_back(formal.inner().name());
        scope_.emplace_back(formal.inner().name(), slot);
        args.push_back(FlatAtom::var(slot, true));
      }
      args.push_back(atom(e.args().back()));
      scope_.resize(mark);
    } else {
      for (const Expr& a : e.args()) args.push_back(atom(a));
    }
    program_.entries[addr].args = std::move(args);
    return addr;
  }

  FlatAtom atom(const Expr& e) {
    switch (e.kind()) {
      case ExprKind::Const:
        return FlatAtom::constant(e.value());
      case ExprKind::Var:
        return FlatAtom::var(slot(e.name()));
      case ExprKind::SExpr:
        return FlatAtom::ref(entry(e));
      case ExprKind::Label:
      case ExprKind::LabelRef:
        return label(e.name());
      case ExprKind::Quoted:
        break;
    }
    const Expr& inner = e.inner();
    if (inner.is(ExprKind::Quoted)) {
      if (inner.inner().is(ExprKind::Const)) return atom(inner);
      throw CompileError("nested quote");
    }
    FlatAtom a = atom(inner);
    if (a.quoted && a.kind != FlatAtom::Kind::Const) throw CompileError("nested quote through label");
    a.quoted = true;
    return a;
  }

  FlatAtom label(const std::string& name) {
    if (auto it = label_atoms_.find(name); it != label_atoms_.end()) return it->second;
    auto body = labels_.find(name);
    if (body == labels_.end()) throw CompileError("unbound variable '" + name + "'");
    if (!in_progress_.insert(name).second) throw CompileError("recursive label '" + name + "'");
    FlatAtom a = atom(*body->second);
    in_progress_.erase(name);
    label_atoms_.emplace(name, a);
    return a;
  }

  std::uint32_t slot(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    throw CompileError("unbound variable '" + name + "'");
  }

  FlatProgram program_;
  std::vector<std::pair<std::string, std::uint32_t>> scope_;
  std::map<std::string, const Expr*> labels_;
  std::map<std::string, FlatAtom> label_atoms_;
  std::set<std::string> in_progress_;
};

}  // namespace

FlatProgram flatten(const Expr& e) {
  Flattener f(e);
  return f.run(e);
}

FlatProgram assign_tiles(FlatProgram p, std::uint16_t tile_count) {
  if (tile_count == 0) throw CompileError("tile count must be at least 1");
  p.tile_count = tile_count;
  if (p.entries.empty()) return p;
  std::vector<bool> visited(p.entries.size(), false);
  std::uint32_t cursor = 1;
  // Explicit stack; children pushed in reverse to keep left-to-right preorder.
  std::vector<std::uint32_t> stack{p.root};
  p.entries[p.root].tile = 0;
  visited[p.root] = true;
  while (!stack.empty()) {
    const std::uint32_t addr = stack.back();
    stack.pop_back();
    std::vector<std::uint32_t> children;
    for (const FlatAtom& a : p.entries[addr].args) {
      if (a.kind == FlatAtom::Kind::Ref && !visited[a.addr]) {
        visited[a.addr] = true;
        children.push_back(a.addr);
      }
    }
    if (children.size() == 1) {
      p.entries[children[0]].tile = p.entries[addr].tile;
    } else {
      for (std::uint32_t c : children) p.entries[c].tile = static_cast<std::uint16_t>(cursor++ % tile_count);
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }
  return p;
}

namespace {

std::string atom_text(const FlatProgram& p, const FlatAtom& a) {
  std::string s = a.quoted ? "'" : "";
  switch (a.kind) {
    case FlatAtom::Kind::Ref:
      return s + "r" + std::to_string(a.addr);
    case FlatAtom::Kind::Const:
      return s + std::to_string(a.value);
    case FlatAtom::Kind::Var:
      if (a.slot < p.var_names.size()) return s + p.var_names[a.slot];
      return s + "v" + std::to_string(a.slot);
  }
  return s;
}

}  // namespace

std::string print_flat(const FlatProgram& p) {
  std::string out;
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const FlatEntry& e = p.entries[i];
    out += "r" + std::to_string(i) + " => (" + e.op;
    for (const FlatAtom& a : e.args) out += " " + atom_text(p, a);
    out += ")";
    if (p.tile_count > 1) out += " @" + std::to_string(e.tile);
    out += "\n";
  }
  return out;
}

}  // namespace gprm::bc

#include "gprm/vm/tile.hpp"

#include <algorithm>

#include "gprm/error.hpp"

namespace gprm::vm {

// ---------------------------------------------------------------------------
// ErrorTable

Byteword ErrorTable::raise(std::string message) {
  std::lock_guard lock(mutex_);
  entries_.push_back({std::move(message)});
  return Byteword::builtin(BuiltinTag::Error, entries_.size() - 1);
}

void ErrorTable::annotate(Byteword error, std::string context) {
  std::lock_guard lock(mutex_);
  entries_.at(error.index()).push_back(std::move(context));
}

std::string ErrorTable::message(Byteword error) const {
  std::lock_guard lock(mutex_);
  if (!error.is(BuiltinTag::Error) || error.index() >= entries_.size()) return "unknown error";
  std::string out;
  for (const std::string& line : entries_[error.index()]) {
    if (!out.empty()) out += "\n  ";
    out += line;
  }
  return out;
}

void ErrorTable::reset() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

std::size_t ErrorTable::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Tile

namespace {

bool is_value(Byteword w) {
  switch (w.kind()) {
    case WordKind::ConstInt:
      return true;
    case WordKind::Builtin:
      return w.is_list() || w.is(BuiltinTag::Data) || w.is(BuiltinTag::Lambda);
    default:
      return false;
  }
}

}  // namespace

Tile::Tile(std::uint16_t id, TileShared& shared, std::vector<kernel::Kernel*> kernels, Outbox& out,
           std::size_t capacity, OverloadPolicy overload, std::size_t arena)
    : id_(id), shared_(shared), kernels_(std::move(kernels)), out_(out), overload_(overload), arena_(arena) {
  if (capacity == 0) throw RuntimeError("subtask list capacity must be at least 1");
  records_.resize(capacity);
  free_.reserve(capacity);
  for (std::size_t a = capacity; a-- > 0;) free_.push_back(static_cast<std::uint32_t>(a));
}

std::size_t Tile::live_count() const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [](const Record& r) { return r.live; }));
}

void Tile::clear() {
  free_.clear();
  for (std::size_t a = records_.size(); a-- > 0;) {
    records_[a].live = false;
    records_[a].args.clear();
    free_.push_back(static_cast<std::uint32_t>(a));
  }
  parked_.clear();
  draining_ = false;
}

Byteword Tile::host_arg(std::size_t index) const {
  if (index >= shared_.host_args.size()) {
    throw RuntimeError("ctrl.arg: no host argument " + std::to_string(index) + " (run supplied " +
                       std::to_string(shared_.host_args.size()) + ")");
  }
  return shared_.host_args[index];
}

void Tile::handle(const Packet& p) {
  if (p.dest != id_) throw ProtocolError("packet for tile " + std::to_string(p.dest) + " delivered to tile " + std::to_string(id_));
  if (p.kind == Packet::Kind::ReferenceRequest) {
    on_request(p);
  } else {
    on_result(p);
  }
}

void Tile::grow() {
  const std::size_t old = records_.size();
  const std::size_t next = old * 2;
  if (next > 0xFFFF'FFFFu) throw RuntimeError("tile " + std::to_string(id_) + " overloaded");
  records_.resize(next);
  for (std::size_t a = next; a-- > old;) free_.push_back(static_cast<std::uint32_t>(a));
}

// Algorithm 1a: allocate a record, request unquoted references, keep
// everything else as a present value.
void Tile::on_request(const Packet& p) {
  if (!p.payload.is_reference() || p.payload.quoted()) {
    throw ProtocolError("reference request without an unquoted reference: " + describe(p.payload));
  }
  if (free_.empty()) {
    switch (overload_) {
      case OverloadPolicy::Grow:
        grow();
        break;
      case OverloadPolicy::Block:
        parked_.push_back(p);
        return;
      case OverloadPolicy::Fail: {
        const Byteword err = shared_.errors->raise("tile " + std::to_string(id_) + " overloaded");
        reply(p.caller, err);
        return;
      }
    }
  }
  const std::uint32_t addr = free_.back();
  free_.pop_back();
  Record& r = records_[addr];
  r.live = true;
  r.caller = p.caller;
  r.code = p.payload.ref().code_addr;
  r.pending = 0;
  const std::span<const Byteword> words = shared_.code->at(r.code);
  r.op = words[0];
  r.args.assign(words.size() - 1, Slot{});
  const bool lambda = r.op.is(BuiltinTag::SpecialForm) && r.op.special_form() == SpecialForm::Lambda;
  for (std::size_t i = 0; i < r.args.size(); ++i) {
    const Byteword w = words[i + 1];
    if (!lambda && w.is_reference() && !w.quoted()) {
      r.args[i].value = w;
      ++r.pending;
    } else if (!lambda && w.is(WordKind::Var) && !w.quoted()) {
      r.args[i] = Slot{error(r, "unbound variable slot " + std::to_string(w.var_slot()) + " at run time"), true};
    } else {
      r.args[i] = Slot{w, true};
    }
  }
  if (r.pending == 0) {
    complete(addr);
    return;
  }
  for (std::size_t i = 0; i < r.args.size(); ++i) {
    if (r.args[i].present) continue;
    const Byteword w = r.args[i].value;
    if (w.ref().tile_id >= shared_.tile_count) throw ProtocolError("reference to tile " + std::to_string(w.ref().tile_id) + " out of range");
    out_.send(Packet::request(w.ref().tile_id, id_, Caller{id_, addr, static_cast<std::uint16_t>(i)}, w));
  }
}

void Tile::on_result(const Packet& p) {
  const std::uint32_t addr = p.caller.addr;
  if (addr >= records_.size() || !records_[addr].live) {
    throw ProtocolError("result for freed record " + std::to_string(addr) + " on tile " + std::to_string(id_));
  }
  Record& r = records_[addr];
  if (p.caller.arg >= r.args.size() || r.args[p.caller.arg].present) {
    throw ProtocolError("unexpected result for argument " + std::to_string(p.caller.arg) + " of record " +
                        std::to_string(addr) + " on tile " + std::to_string(id_));
  }
  r.args[p.caller.arg] = Slot{p.payload, true};
  if (--r.pending == 0) complete(addr);
}

// Algorithm 1b: compute the record's value, send it, free the record.
void Tile::complete(std::uint32_t addr) {
  Record& r = records_[addr];
  Outcome o;
  const auto failed = std::find_if(r.args.begin(), r.args.end(), [](const Slot& s) { return s.value.is(BuiltinTag::Error); });
  if (failed != r.args.end()) {
    o.word = failed->value;
    shared_.errors->annotate(o.word, "in " + op_name(r) + " on tile " + std::to_string(id_));
  } else {
    try {
      if (r.op.is(BuiltinTag::SpecialForm)) {
        switch (r.op.special_form()) {
          case SpecialForm::Lambda:
            o = {Byteword::lambda(Reference{r.code, id_}), false};
            break;
          case SpecialForm::Beta:
            o = finish_beta(r);
            break;
          case SpecialForm::If:
            o = finish_if(r);
            break;
          default:
            throw RuntimeError("unknown special form");
        }
      } else {
        o = finish_kernel(r);
      }
    } catch (const ProtocolError&) {
      throw;
    } catch (const std::exception& e) {
      o = {error(r, e.what()), false};
    }
  }
  const Caller to = r.caller;
  if (o.forward) {
    forward(to, o.word);
  } else {
    reply(to, o.word);
  }
  release(addr);
}

void Tile::release(std::uint32_t addr) {
  Record& r = records_[addr];
  r.live = false;
  r.args.clear();
  free_.push_back(addr);
  if (parked_.empty() || draining_) return;
  draining_ = true;
  while (!parked_.empty() && !free_.empty()) {
    const Packet p = parked_.front();
    parked_.pop_front();
    on_request(p);
  }
  draining_ = false;
}

void Tile::reply(const Caller& to, Byteword value) { out_.send(Packet::result(id_, to, value)); }

void Tile::forward(const Caller& to, Byteword ref) {
  const Reference target = ref.ref();
  if (target.tile_id >= shared_.tile_count) throw ProtocolError("reference to tile " + std::to_string(target.tile_id) + " out of range");
  out_.send(Packet::request(target.tile_id, id_, to, ref.unquoted()));
}

Byteword Tile::error(const Record& r, const std::string& message) {
  const Byteword e = shared_.errors->raise(message);
  shared_.errors->annotate(e, "in " + op_name(r) + " on tile " + std::to_string(id_));
  return e;
}

std::string Tile::op_name(const Record& r) const {
  if (r.op.is(BuiltinTag::SpecialForm)) {
    switch (r.op.special_form()) {
      case SpecialForm::Lambda:
        return "lambda";
      case SpecialForm::Beta:
        return "beta";
      case SpecialForm::If:
        return "if";
    }
  }
  if (r.op.is(WordKind::Operation) && shared_.registry->contains(r.op.op())) return shared_.registry->name_of(r.op.op());
  return describe(r.op);
}

Tile::Outcome Tile::finish_beta(const Record& r) {
  const Byteword f = r.args[0].value;
  if (!f.is(BuiltinTag::Lambda)) throw RuntimeError("beta: operator is not a lambda value, got " + describe(f));
  const std::span<const Byteword> lam = shared_.code->at(f.ref().code_addr);
  const std::size_t formals = lam.size() - 2;
  const std::size_t argc = r.args.size() - 1;
  if (argc != formals) {
    throw RuntimeError("beta: lambda expects " + std::to_string(formals) + " argument(s), got " + std::to_string(argc));
  }
  Subst subst;
  subst.reserve(formals);
  for (std::size_t i = 0; i < formals; ++i) subst.emplace_back(lam[1 + i].var_slot(), r.args[1 + i].value.unquoted());

  Byteword body = lam.back().unquoted();
  if (body.is(WordKind::Var)) {
    auto it = std::find_if(subst.begin(), subst.end(), [&](const auto& s) { return s.first == body.var_slot(); });
    if (it == subst.end()) throw RuntimeError("beta: lambda body is an unbound variable");
    body = it->second;
  } else if (body.is_reference()) {
    Memo memo;
    const std::uint32_t fresh = copy(body.ref().code_addr, subst, memo);
    body = Byteword::reference(Reference{fresh, body.ref().tile_id});
  }
  return {body, body.is_reference()};
}

// String reduction: copy the entries reachable from `addr`, replacing the
// variables bound in `subst`. Entries without variables are shared.
std::uint32_t Tile::copy(std::uint32_t addr, const Subst& subst, Memo& memo) {
  if (subst.empty() || shared_.code->closed(addr)) return addr;
  if (auto it = memo.find(addr); it != memo.end()) return it->second;
  const std::span<const Byteword> src = shared_.code->at(addr);
  std::vector<Byteword> words(src.begin(), src.end());

  const Subst* s = &subst;
  Memo* m = &memo;
  Subst inner;
  Memo inner_memo;
  if (words[0].is(BuiltinTag::SpecialForm) && words[0].special_form() == SpecialForm::Lambda) {
    // A lambda rebinding a substituted slot shadows it below this point.
    auto rebinds = [&](std::uint32_t slot) {
      for (std::size_t i = 1; i + 1 < words.size(); ++i) {
        if (words[i].var_slot() == slot) return true;
      }
      return false;
    };
    if (std::any_of(subst.begin(), subst.end(), [&](const auto& e) { return rebinds(e.first); })) {
      for (const auto& e : subst) {
        if (!rebinds(e.first)) inner.push_back(e);
      }
      s = &inner;
      m = &inner_memo;
    }
  }

  bool closed = true;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const Byteword w = words[i];
    if (w.is(WordKind::Var)) {
      auto it = std::find_if(s->begin(), s->end(), [&](const auto& e) { return e.first == w.var_slot(); });
      if (it == s->end()) {
        closed = false;
        continue;
      }
      words[i] = it->second.with_quote(w.quoted());
      if (words[i].is_reference()) closed = closed && shared_.code->closed(words[i].ref().code_addr);
    } else if (w.is_reference()) {
      const std::uint32_t child = copy(w.ref().code_addr, *s, *m);
      words[i] = Byteword::reference(Reference{child, w.ref().tile_id}, w.quoted());
      closed = closed && shared_.code->closed(child);
    }
  }
  const std::uint32_t fresh = shared_.code->append(arena_, std::move(words), closed);
  memo.emplace(addr, fresh);
  return fresh;
}

Tile::Outcome Tile::finish_if(const Record& r) {
  const Byteword c = r.args[0].value;
  if (!c.is_int()) throw RuntimeError("if: condition is not an integer, got " + describe(c));
  const Byteword chosen = r.args[c.int_value() != 0 ? 1 : 2].value;
  if (chosen.is(WordKind::Var)) throw RuntimeError("if: branch is an unbound variable");
  if (chosen.is_reference()) return {chosen, true};
  return {chosen.unquoted(), false};
}

Tile::Outcome Tile::finish_kernel(const Record& r) {
  const OpId op = r.op.op();
  const kernel::MethodSpec& m = shared_.registry->method(op);
  scratch_.clear();
  for (const Slot& s : r.args) {
    Byteword w = s.value;
    if (!m.control && (w.quoted() || w.is(WordKind::Var))) {
      if (!w.is_int()) throw RuntimeError(op_name(r) + ": quoted expression passed to a non-control method");
      w = w.unquoted();
    }
    scratch_.push_back(w);
  }
  if (op.service >= kernels_.size() || !kernels_[op.service]) throw ProtocolError("no kernel instance for " + op_name(r));
  const kernel::KernelResult res = kernels_[op.service]->invoke(op.method, scratch_, *this);
  if (const auto* restart = std::get_if<kernel::Restart>(&res)) {
    if (!restart->target.is_reference() || !restart->target.quoted()) {
      throw RuntimeError(op_name(r) + ": restart target must be a quoted reference");
    }
    const std::int64_t n = shared_.tile_count;
    const auto tile = static_cast<std::uint16_t>(((restart->tile % n) + n) % n);
    return {restart->target.with_tile(tile), true};
  }
  const Byteword v = std::get<Byteword>(res);
  if (!is_value(v)) throw RuntimeError(op_name(r) + ": kernel returned a non-value " + describe(v));
  return {v, false};
}

}  // namespace gprm::vm

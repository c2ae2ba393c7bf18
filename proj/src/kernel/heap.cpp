#include "gprm/kernel/heap.hpp"

namespace gprm::kernel {

std::string Datum::str() const {
  switch (kind) {
    case Kind::Int:
      return std::to_string(value);
    case Kind::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ' ';
        out += items[i].str();
      }
      return out + ")";
    }
    case Kind::Data:
      return "<data:" + std::to_string(handle) + ">";
    case Kind::Lambda:
      return "<lambda>";
  }
  return "?";
}

Byteword Heap::cons(Byteword head, Byteword tail) {
  if (!tail.is_list()) throw RuntimeError("cons: second argument is not a list");
  std::unique_lock lock(mutex_);
  cells_.push_back(Cell{head, tail});
  return Byteword::builtin(BuiltinTag::Cons, cells_.size() - 1);
}

const Heap::Cell& Heap::cell(Byteword list) const {
  if (list.is(BuiltinTag::Nil)) throw RuntimeError("empty list has no head or tail");
  if (!list.is(BuiltinTag::Cons)) throw RuntimeError("expected a list, got " + describe(list));
  if (list.index() >= cells_.size()) throw RuntimeError("dangling cons cell " + std::to_string(list.index()));
  return cells_[list.index()];
}

Byteword Heap::head(Byteword list) const {
  std::shared_lock lock(mutex_);
  return cell(list).head;
}

Byteword Heap::tail(Byteword list) const {
  std::shared_lock lock(mutex_);
  return cell(list).tail;
}

std::size_t Heap::register_data(std::any value) {
  std::unique_lock lock(mutex_);
  if (handles_.size() != registered_) {
    throw RuntimeError("register_data called while run-owned handles are live");
  }
  handles_.push_back(std::move(value));
  return registered_++;
}

Byteword Heap::make_data(std::any value) {
  std::unique_lock lock(mutex_);
  handles_.push_back(std::move(value));
  return Byteword::builtin(BuiltinTag::Data, handles_.size() - 1);
}

Byteword Heap::registered(std::size_t index) const {
  std::shared_lock lock(mutex_);
  if (index >= registered_) {
    throw RuntimeError("ctrl.reg index " + std::to_string(index) + " out of range (" +
                       std::to_string(registered_) + " registered)");
  }
  return Byteword::builtin(BuiltinTag::Data, index);
}

std::size_t Heap::registered_count() const {
  std::shared_lock lock(mutex_);
  return registered_;
}

const std::any& Heap::slot_for(Byteword handle) const {
  if (!handle.is(BuiltinTag::Data)) throw RuntimeError("expected a data handle, got " + describe(handle));
  if (handle.index() >= handles_.size()) throw RuntimeError("dangling data handle " + std::to_string(handle.index()));
  return handles_[handle.index()];
}

const std::any& Heap::any(Byteword handle) const {
  std::shared_lock lock(mutex_);
  return slot_for(handle);
}

void Heap::reset() {
  std::unique_lock lock(mutex_);
  cells_.clear();
  handles_.resize(registered_);
}

std::size_t Heap::cell_count() const {
  std::shared_lock lock(mutex_);
  return cells_.size();
}

Datum Heap::read(Byteword w) const {
  switch (w.kind()) {
    case WordKind::ConstInt:
      return Datum::integer(w.int_value());
    case WordKind::Builtin:
      break;
    default:
      throw RuntimeError("not a value: " + describe(w));
  }
  switch (w.tag()) {
    case BuiltinTag::Nil:
    case BuiltinTag::Cons: {
      std::vector<Datum> items;
      Byteword cur = w;
      while (cur.is(BuiltinTag::Cons)) {
        Cell c;
        {
          std::shared_lock lock(mutex_);
          c = cell(cur);
        }
        items.push_back(read(c.head));
        cur = c.tail;
      }
      return Datum::list(std::move(items));
    }
    case BuiltinTag::Data:
      return Datum{Datum::Kind::Data, 0, {}, w.index()};
    case BuiltinTag::Lambda:
      return Datum{Datum::Kind::Lambda, 0, {}, 0};
    default:
      throw RuntimeError("not a value: " + describe(w));
  }
}

}  // namespace gprm::kernel

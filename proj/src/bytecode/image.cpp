#include "gprm/bytecode/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "gprm/error.hpp"

namespace gprm::bc {

const Symbol* BytecodeImage::symbol(OpId id) const {
  for (const Symbol& s : symbols) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

std::optional<SpecialForm> special_form(std::string_view op) {
  if (op == gpir::forms::kLambda) return SpecialForm::Lambda;
  if (op == gpir::forms::kBeta) return SpecialForm::Beta;
  if (op == gpir::forms::kIf) return SpecialForm::If;
  return std::nullopt;
}

std::string_view special_name(SpecialForm f) {
  switch (f) {
    case SpecialForm::Lambda:
      return gpir::forms::kLambda;
    case SpecialForm::Beta:
      return gpir::forms::kBeta;
    case SpecialForm::If:
      return gpir::forms::kIf;
  }
  throw ImageError("invalid special form");
}

void check_special_arity(const FlatEntry& e, SpecialForm f) {
  const std::size_t n = e.args.size();
  switch (f) {
    case SpecialForm::Lambda:
      if (n == 0) throw CompileError("lambda needs a quoted body");
      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (e.args[i].kind != FlatAtom::Kind::Var || !e.args[i].quoted) {
          throw CompileError("lambda parameter must be a quoted variable");
        }
      }
      if (!e.args.back().quoted) throw CompileError("lambda body must be quoted");
      break;
    case SpecialForm::Beta:
      if (n == 0) throw CompileError("beta expects a lambda expression");
      break;
    case SpecialForm::If:
      if (n != 3) throw CompileError("if expects a condition and two branches");
      break;
  }
}

}  // namespace

BytecodeImage encode(const FlatProgram& p, const kernel::KernelRegistry& registry) {
  if (p.entries.empty()) throw CompileError("empty program: a program must have a root");
  if (p.entries.size() >= kRuntimeAddressBit) throw CompileError("address space exhausted");
  if (p.root >= p.entries.size()) throw CompileError("root reference out of range");
  if (p.tile_count == 0) throw CompileError("tile count must be at least 1");

  BytecodeImage img;
  img.tile_count = p.tile_count;
  img.code.reserve(p.entries.size());
  std::set<OpId> used;
  const auto ctrl_arg = registry.resolve("ctrl.arg");

  for (const FlatEntry& e : p.entries) {
    if (e.tile >= p.tile_count) throw CompileError("tile id " + std::to_string(e.tile) + " out of range");
    if (e.args.size() + 1 > 0xFFFF) throw CompileError("S-expression has too many operands");
    std::vector<Byteword> words;
    words.reserve(e.args.size() + 1);
    if (auto f = special_form(e.op)) {
      check_special_arity(e, *f);
      words.push_back(Byteword::special(*f));
    } else {
      auto op = registry.resolve(e.op);
      if (!op) throw CompileError("unknown service/method '" + e.op + "'");
      const kernel::MethodSpec& m = registry.method(*op);
      if (!m.accepts(e.args.size())) {
        throw CompileError("'" + e.op + "' expects " + (m.variadic ? "at least " : "") + std::to_string(m.arity) +
                           " argument(s), got " + std::to_string(e.args.size()));
      }
      used.insert(*op);
      words.push_back(Byteword::operation(*op));
      if (ctrl_arg && *op == *ctrl_arg && e.args.size() == 1 && e.args[0].kind == FlatAtom::Kind::Const &&
          e.args[0].value >= 0) {
        img.host_arity = std::max<std::uint16_t>(img.host_arity, static_cast<std::uint16_t>(e.args[0].value + 1));
      }
    }
    for (const FlatAtom& a : e.args) {
      switch (a.kind) {
        case FlatAtom::Kind::Ref:
          if (a.addr >= p.entries.size()) throw CompileError("dangling reference r" + std::to_string(a.addr));
          words.push_back(Byteword::reference(Reference{a.addr, p.entries[a.addr].tile}, a.quoted));
          break;
        case FlatAtom::Kind::Const:
          words.push_back(Byteword::integer(a.value, a.quoted));
          break;
        case FlatAtom::Kind::Var:
          words.push_back(Byteword::var(a.slot, a.quoted));
          break;
      }
    }
    img.code.push_back(std::move(words));
  }
  for (OpId id : used) img.symbols.push_back(Symbol{id, registry.name_of(id)});
  img.root = Byteword::reference(Reference{p.root, p.entries[p.root].tile});
  return img;
}

FlatProgram decode(const BytecodeImage& img) {
  if (img.code.empty()) throw ImageError("image has no code");
  if (!img.root.is_reference() || img.root.quoted() || img.root.ref().code_addr >= img.code.size()) {
    throw ImageError("invalid root reference");
  }
  FlatProgram p;
  p.tile_count = img.tile_count;
  p.root = img.root.ref().code_addr;
  p.entries.resize(img.code.size());
  std::vector<bool> tiled(img.code.size(), false);
  auto set_tile = [&](Reference r) {
    if (r.code_addr >= img.code.size()) throw ImageError("dangling reference r" + std::to_string(r.code_addr));
    if (r.tile_id >= img.tile_count) throw ImageError("reference tile out of range");
    if (tiled[r.code_addr] && p.entries[r.code_addr].tile != r.tile_id) {
      throw ImageError("inconsistent tile for r" + std::to_string(r.code_addr));
    }
    tiled[r.code_addr] = true;
    p.entries[r.code_addr].tile = r.tile_id;
  };
  set_tile(img.root.ref());

  for (std::size_t addr = 0; addr < img.code.size(); ++addr) {
    const auto& words = img.code[addr];
    if (words.empty()) throw ImageError("empty code entry r" + std::to_string(addr));
    FlatEntry& e = p.entries[addr];
    const Byteword op = words[0];
    if (op.is(BuiltinTag::SpecialForm)) {
      e.op = std::string(special_name(op.special_form()));
    } else if (op.is(WordKind::Operation)) {
      const Symbol* s = img.symbol(op.op());
      if (!s) throw ImageError("operation without a symbol in r" + std::to_string(addr));
      e.op = s->name;
    } else {
      throw ImageError("code entry r" + std::to_string(addr) + " does not start with an operation");
    }
    for (std::size_t i = 1; i < words.size(); ++i) {
      const Byteword w = words[i];
      switch (w.kind()) {
        case WordKind::Reference:
          set_tile(w.ref());
          e.args.push_back(FlatAtom::ref(w.ref().code_addr, w.quoted()));
          break;
        case WordKind::ConstInt:
          e.args.push_back(FlatAtom::constant(w.int_value(), w.quoted()));
          break;
        case WordKind::Var:
          e.args.push_back(FlatAtom::var(w.var_slot(), w.quoted()));
          break;
        default:
          throw ImageError("unexpected operand " + describe(w) + " in r" + std::to_string(addr));
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

class Writer {
 public:
  void u16(std::uint16_t v) { little(v, 2); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void bytes(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> out;

 private:
  void little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(little(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(little(4)); }
  std::uint64_t u64() { return little(8); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ImageError("truncated image");
  }
  std::uint64_t little(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> write_image(const BytecodeImage& img) {
  Writer w;
  w.bytes("GPRM");
  w.u16(img.version);
  w.u16(img.tile_count);
  w.u16(img.host_arity);
  w.u32(static_cast<std::uint32_t>(img.symbols.size()));
  for (const Symbol& s : img.symbols) {
    if (s.name.size() > 0xFFFF) throw ImageError("symbol name too long");
    w.u16(s.id.service);
    w.u16(s.id.method);
    w.u16(static_cast<std::uint16_t>(s.name.size()));
    w.bytes(s.name);
  }
  w.u32(static_cast<std::uint32_t>(img.code.size()));
  for (std::size_t addr = 0; addr < img.code.size(); ++addr) {
    w.u32(static_cast<std::uint32_t>(addr));
    w.u16(static_cast<std::uint16_t>(img.code[addr].size()));
    for (Byteword word : img.code[addr]) w.u64(word.bits());
  }
  w.u64(img.root.bits());
  return std::move(w.out);
}

BytecodeImage read_image(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != "GPRM") throw ImageError("bad magic: not a GPRM image");
  BytecodeImage img;
  img.version = r.u16();
  if (img.version != kImageVersion) throw ImageError("unsupported image version " + std::to_string(img.version));
  img.tile_count = r.u16();
  if (img.tile_count == 0) throw ImageError("image tile count is zero");
  img.host_arity = r.u16();
  const std::uint32_t symbol_count = r.u32();
  for (std::uint32_t i = 0; i < symbol_count; ++i) {
    Symbol s;
    s.id.service = r.u16();
    s.id.method = r.u16();
    s.name = r.bytes(r.u16());
    img.symbols.push_back(std::move(s));
  }
  const std::uint32_t entry_count = r.u32();
  if (entry_count == 0) throw ImageError("image has no code");
  if (entry_count >= kRuntimeAddressBit || entry_count > bytes.size()) throw ImageError("entry count too large");
  img.code.resize(entry_count);
  std::vector<bool> seen(entry_count, false);
  for (std::uint32_t i = 0; i < entry_count; ++i) {
    const std::uint32_t addr = r.u32();
    if (addr >= entry_count || seen[addr]) throw ImageError("bad or duplicate code address " + std::to_string(addr));
    seen[addr] = true;
    const std::uint16_t n = r.u16();
    if (n == 0) throw ImageError("empty code entry");
    auto& words = img.code[addr];
    words.reserve(n);
    for (std::uint16_t k = 0; k < n; ++k) words.push_back(Byteword::from_bits(r.u64()));
  }
  img.root = Byteword::from_bits(r.u64());
  if (!r.done()) throw ImageError("trailing bytes after image");
  if (!img.root.is_reference() || img.root.quoted() || img.root.ref().code_addr >= entry_count) {
    throw ImageError("invalid root reference");
  }
  return img;
}

void save_image(const BytecodeImage& img, const std::filesystem::path& path) {
  const auto bytes = write_image(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("failed writing " + path.string());
}

BytecodeImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_image(bytes);
}

BytecodeImage compile(std::string_view gpir_text, std::uint16_t tile_count, const kernel::KernelRegistry& registry) {
  const gpir::Expr parsed = gpir::parse(gpir_text);
  const gpir::Expr core = gpir::desugar(parsed);
  return encode(assign_tiles(flatten(core), tile_count), registry);
}

}  // namespace gprm::bc

#include <doctest.h>

#include <functional>
#include <random>

#include "gprm/bytecode/image.hpp"
#include "gprm/error.hpp"
#include "gprm/kernel/demo.hpp"
#include "../support/flat_util.hpp"
#include "../support/progen.hpp"

using namespace gprm;
using namespace gprm::bc;
using gpir::Expr;
using gpir::parse;
using gprm::testing::unflatten;

namespace {

FlatProgram flat(const char* text) { return flatten(gpir::desugar(parse(text))); }

std::string shape(const char* text, std::uint16_t tiles = 1) { return print_flat(assign_tiles(flat(text), tiles)); }

}  // namespace

TEST_CASE("byteword: field round trips") {
  const Byteword r = Byteword::reference({0xDEADBEEF, 0xFFFF}, true);
  CHECK(r.is_reference());
  CHECK(r.quoted());
  CHECK(r.ref() == Reference{0xDEADBEEF, 0xFFFF});
  CHECK(r.unquoted().ref() == r.ref());
  CHECK_FALSE(r.unquoted().quoted());
  CHECK(r.with_tile(3).ref().tile_id == 3);
  CHECK(r.with_tile(3).quoted());

  for (std::int32_t v : {0, 1, -1, 42, INT32_MIN, INT32_MAX}) {
    for (bool q : {false, true}) {
      const Byteword w = Byteword::integer(v, q);
      CHECK(w.int_value() == v);
      CHECK(w.quoted() == q);
      CHECK(Byteword::from_bits(w.bits()) == w);
    }
  }
  const Byteword op = Byteword::operation({7, 9});
  CHECK(op.op() == OpId{7, 9});
  CHECK_FALSE(op.with_quote(true).quoted());
  CHECK(Byteword::var(12, true).var_slot() == 12);
  CHECK(Byteword::special(SpecialForm::Beta).special_form() == SpecialForm::Beta);
  CHECK(Byteword::lambda({5, 2}).ref() == Reference{5, 2});
  CHECK(Byteword::nil().is_list());
  CHECK(to_hex(Byteword::integer(42)) == "100000000000002a");
}

TEST_CASE("byteword: from_bits rejects malformed words") {
  CHECK_THROWS_AS(Byteword::from_bits(0xF000000000000000ull), ImageError);
  CHECK_THROWS_AS(Byteword::from_bits(Byteword::integer(1).bits() | (1ull << 55)), ImageError);
  CHECK_THROWS_AS(Byteword::from_bits(Byteword::operation({1, 1}).bits() | (1ull << 59)), ImageError);
  CHECK_THROWS_AS(Byteword::from_bits(Byteword::integer(1).bits() | (1ull << 49)), ImageError);
  CHECK_THROWS_AS(Byteword::from_bits(Byteword::integer(1).bits() | (1ull << 40)), ImageError);
}

TEST_CASE("property: random byteword round trip") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    const auto tile = static_cast<std::uint16_t>(rng());
    const auto addr = static_cast<std::uint32_t>(rng());
    const bool q = rng() & 1;
    const Byteword r = Byteword::reference({addr, tile}, q);
    REQUIRE(Byteword::from_bits(r.bits()) == r);
    REQUIRE(r.ref() == Reference{addr, tile});
    const Byteword c = Byteword::integer(static_cast<std::int32_t>(rng()), q);
    REQUIRE(Byteword::from_bits(c.bits()) == c);
  }
}

TEST_CASE("flatten: nested kernel calls") {
  CHECK(shape("(t1.m2 (t2.m3 '42) (t3.m4))") ==
        "r0 => (t1.m2 r1 r2)\n"
        "r1 => (t2.m3 '42)\n"
        "r2 => (t3.m4)\n");
  CHECK(shape("(t3.m4)") == "r0 => (t3.m4)\n");
}

TEST_CASE("flatten: lambda body is one quoted reference") {
  CHECK(shape("(beta (lambda 'x '(* (- x '1) (+ x '1))) '5)") ==
        "r0 => (beta r1 '5)\n"
        "r1 => (lambda 'x 'r2)\n"
        "r2 => (* r3 r4)\n"
        "r3 => (- x '1)\n"
        "r4 => (+ x '1)\n");
}

TEST_CASE("flatten: quotes, labels, errors") {
  CHECK(shape("(if '1 ''7 '(t1.m1 '1))") == "r0 => (if '1 '7 'r1)\nr1 => (t1.m1 '1)\n");
  // A label is one shared entry.
  FlatProgram p = flat("(+ (label L (t1.m1 '1)) L)");
  CHECK(p.entries.size() == 2);
  CHECK(p.entries[0].args[0] == p.entries[0].args[1]);
  CHECK_THROWS_WITH_AS(flat("(t1.m1 y)"), doctest::Contains("unbound variable 'y'"), Error);
  CHECK_THROWS_AS(flat("(t1.m1 '''(t1.m1 '1))"), Error);
  CHECK_THROWS_AS(flatten(parse("(return '1)")), CompileError);
}

TEST_CASE("property: unflatten inverts flatten") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gprm::testing::ProgramGenerator g(seed);
    Expr e = gpir::desugar(parse(g.program()));
    FlatProgram p = flatten(e);
    REQUIRE(gpir::alpha_equal(unflatten(p), e));
    // Quote flags survive at the positions they were written.
    CHECK(gpir::print(unflatten(p)) == gpir::print(e));
  }
}

TEST_CASE("assign_tiles: siblings round robin, only child inherits") {
  FlatProgram p = assign_tiles(flat("(t1.m2 (t2.m3 '42) (t3.m4))"), 4);
  CHECK(p.entries[0].tile == 0);
  CHECK(p.entries[1].tile == 1);
  CHECK(p.entries[2].tile == 2);
  FlatProgram chain = assign_tiles(flat("(t1.m1 (t2.m1 '1))"), 8);
  CHECK(chain.entries[1].tile == 0);
  FlatProgram wrap = assign_tiles(flat("(+ (t1.m1 '1) (t1.m1 '2) (t1.m1 '3) (t1.m1 '4))"), 3);
  CHECK(wrap.entries[1].tile == 1);
  CHECK(wrap.entries[2].tile == 2);
  CHECK(wrap.entries[3].tile == 0);
  CHECK(wrap.entries[4].tile == 1);
  FlatProgram one = assign_tiles(flat("(t1.m2 (t2.m3 '42) (t3.m4))"), 1);
  for (const FlatEntry& e : one.entries) CHECK(e.tile == 0);
  CHECK_THROWS_AS(assign_tiles(flat("(t3.m4)"), 0), CompileError);
}

// Reference allocator written from the rule alone: breadth of each parent's
// fresh children gets consecutive tiles from a global counter in preorder.
TEST_CASE("assign_tiles: agrees with a recursive reference allocator") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    gprm::testing::ProgramGenerator g(seed);
    FlatProgram p = flatten(gpir::desugar(parse(g.program())));
    const std::uint16_t tiles = static_cast<std::uint16_t>(1 + seed % 7);
    FlatProgram got = assign_tiles(p, tiles);
    std::vector<int> want(p.entries.size(), -1);
    std::uint32_t cursor = 1;
    std::function<void(std::uint32_t)> visit = [&](std::uint32_t addr) {
      std::vector<std::uint32_t> kids;
      for (const FlatAtom& a : p.entries[addr].args) {
        if (a.kind == FlatAtom::Kind::Ref && want[a.addr] < 0) {
          want[a.addr] = 0;
          kids.push_back(a.addr);
        }
      }
      for (std::uint32_t k : kids) want[k] = kids.size() == 1 ? want[addr] : static_cast<int>(cursor++ % tiles);
      for (std::uint32_t k : kids) visit(k);
    };
    want[p.root] = 0;
    visit(p.root);
    for (std::size_t i = 0; i < want.size(); ++i) REQUIRE(got.entries[i].tile == want[i]);
  }
}

TEST_CASE("encode/decode") {
  const auto reg = kernel::demo_registry();
  BytecodeImage img = compile("(t1.m2 (t2.m3 '42) (t3.m4))", 4, reg);
  CHECK(img.code.size() == 3);
  CHECK(img.root == Byteword::reference({0, 0}));
  CHECK(img.code[0][1] == Byteword::reference({1, 1}));
  CHECK(img.code[0][2] == Byteword::reference({2, 2}));
  CHECK(img.code[1][1] == Byteword::integer(42, true));
  CHECK(img.symbols.size() == 3);
  FlatProgram back = decode(img);
  CHECK(back == assign_tiles(flat("(t1.m2 (t2.m3 '42) (t3.m4))"), 4));
  CHECK(compile("(t1.m1 (ctrl.arg '2))", 1, reg).host_arity == 3);
}

TEST_CASE("encode: errors") {
  const auto reg = kernel::demo_registry();
  CHECK_THROWS_WITH_AS(compile("(t9.m1 '1)", 1, reg), "unknown service/method 't9.m1'", CompileError);
  CHECK_THROWS_WITH_AS(compile("(t1.m1 '1 '2)", 1, reg), "'t1.m1' expects 1 argument(s), got 2", CompileError);
  CHECK_THROWS_AS(encode(FlatProgram{}, reg), CompileError);
  CHECK_THROWS_AS(compile("(t1.m1 '1", 1, reg), ParseError);
}

TEST_CASE("property: image bytes round trip") {
  const auto reg = kernel::demo_registry();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    gprm::testing::ProgramGenerator g(seed);
    BytecodeImage img = compile(g.program(), static_cast<std::uint16_t>(1 + seed % 8), reg);
    const auto bytes = write_image(img);
    REQUIRE(read_image(bytes) == img);
    REQUIRE(write_image(read_image(bytes)) == bytes);
    REQUIRE(encode(decode(img), reg) == img);
  }
}

TEST_CASE("read_image: malformed input") {
  const auto reg = kernel::demo_registry();
  auto bytes = write_image(compile("(t1.m2 (t2.m3 '42) (t3.m4))", 4, reg));
  CHECK_THROWS_AS(read_image(std::span(bytes).first(bytes.size() - 1)), ImageError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(read_image(extra), ImageError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(read_image(magic), "bad magic: not a GPRM image", ImageError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(read_image(version), ImageError);
  auto tiles = bytes;
  tiles[6] = tiles[7] = 0;
  CHECK_THROWS_AS(read_image(tiles), ImageError);
  // Every truncation is rejected rather than misread.
  for (std::size_t n = 0; n < bytes.size(); ++n) CHECK_THROWS_AS(read_image(std::span(bytes).first(n)), ImageError);
}

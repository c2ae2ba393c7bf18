#include <doctest.h>

#include <sstream>

#include "gprm/bytecode/image.hpp"
#include "gprm/error.hpp"
#include "gprm/kernel/demo.hpp"
#include "gprm/vm/machine.hpp"
#include "gprm/vm/tile.hpp"

using namespace gprm;
using namespace gprm::vm;

namespace {

struct Capture final : Outbox {
  std::vector<Packet> sent;
  void send(const Packet& p) override { sent.push_back(p); }
};

// One tile driven by hand.
struct Bench {
  explicit Bench(const char* text, std::size_t capacity = 16, OverloadPolicy overload = OverloadPolicy::Grow)
      : reg(kernel::demo_registry()),
        img(bc::compile(text, 1, reg)),
        code(img.code, 1) {
    shared.code = &code;
    shared.errors = &errors;
    shared.heap = &heap;
    shared.registry = &reg;
    shared.tile_count = 1;
    std::vector<kernel::Kernel*> ptrs;
    for (std::size_t s = 0; s < reg.size(); ++s) {
      instances.push_back(reg.service(static_cast<std::uint16_t>(s)).factory());
      ptrs.push_back(instances.back().get());
    }
    tile = std::make_unique<Tile>(0, shared, ptrs, out, capacity, overload, 0);
  }

  Packet root_request(std::uint32_t caller_addr = 0) const {
    return Packet::request(0, 1, Caller{1, caller_addr, 0}, img.root);
  }

  kernel::KernelRegistry reg;
  bc::BytecodeImage img;
  CodeStore code;
  ErrorTable errors;
  kernel::Heap heap;
  TileShared shared;
  std::vector<std::unique_ptr<kernel::Kernel>> instances;
  Capture out;
  std::unique_ptr<Tile> tile;
};

Byteword run(const char* text, MachineConfig cfg = {}, std::vector<Byteword> args = {}) {
  const auto reg = kernel::demo_registry();
  Machine m(bc::compile(text, 4, reg), reg, cfg);
  return m.run(std::move(args));
}

std::string run_str(const char* text, unsigned threads = 2, Executor ex = Executor::Threads) {
  const auto reg = kernel::demo_registry();
  MachineConfig cfg;
  cfg.threads = threads;
  cfg.executor = ex;
  Machine m(bc::compile(text, 4, reg), reg, cfg);
  return m.read(m.run({}, RunOptions{7})).str();
}

}  // namespace

TEST_CASE("tile: parses a record and dispatches unquoted references") {
  Bench b("(t1.m2 (t2.m3 '42) (t3.m4))");
  b.tile->handle(b.root_request());
  REQUIRE(b.out.sent.size() == 2);
  CHECK(b.out.sent[0].kind == Packet::Kind::ReferenceRequest);
  CHECK(b.out.sent[0].payload.ref().code_addr == 1);
  CHECK(b.out.sent[0].caller.arg == 0);
  CHECK(b.out.sent[1].payload.ref().code_addr == 2);
  CHECK(b.out.sent[1].caller.arg == 1);
  CHECK(b.tile->live_count() == 1);
  const std::uint32_t rec = b.out.sent[0].caller.addr;
  CHECK(b.tile->record(rec).pending == 2);
}

TEST_CASE("tile: results in either order give the same answer") {
  for (bool reversed : {false, true}) {
    Bench b("(t1.m2 (t2.m3 '42) (t3.m4))");
    b.tile->handle(b.root_request(5));
    const Caller c0 = b.out.sent[0].caller;
    const Caller c1 = b.out.sent[1].caller;
    b.out.sent.clear();
    const Packet p0 = Packet::result(0, c0, Byteword::integer(41));
    const Packet p1 = Packet::result(0, c1, Byteword::integer(1));
    b.tile->handle(reversed ? p1 : p0);
    CHECK(b.out.sent.empty());
    b.tile->handle(reversed ? p0 : p1);
    REQUIRE(b.out.sent.size() == 1);
    CHECK(b.out.sent[0].kind == Packet::Kind::Result);
    CHECK(b.out.sent[0].dest == 1);
    CHECK(b.out.sent[0].caller.addr == 5);
    CHECK(b.out.sent[0].payload == Byteword::integer(42));
    CHECK(b.tile->live_count() == 0);
    CHECK(b.tile->free_count() == b.tile->capacity());
  }
}

TEST_CASE("tile: all-present record dispatches immediately") {
  Bench b("(t2.m3 '42)");
  b.tile->handle(b.root_request());
  REQUIRE(b.out.sent.size() == 1);
  CHECK(b.out.sent[0].payload == Byteword::integer(41));
}

TEST_CASE("tile: quoted reference stays present for ctrl.run") {
  Bench b("(ctrl.run '(t1.m1 '1) (t3.m4))");
  b.tile->handle(b.root_request());
  // Only the unquoted tile argument is requested.
  REQUIRE(b.out.sent.size() == 1);
  CHECK(b.out.sent[0].payload.ref().code_addr == 2);
}

TEST_CASE("tile: protocol violations") {
  Bench b("(t1.m2 (t2.m3 '42) (t3.m4))");
  b.tile->handle(b.root_request());
  const Caller c0 = b.out.sent[0].caller;
  const Caller c1 = b.out.sent[1].caller;
  b.tile->handle(Packet::result(0, c0, Byteword::integer(1)));
  CHECK_THROWS_AS(b.tile->handle(Packet::result(0, c0, Byteword::integer(1))), ProtocolError);
  b.tile->handle(Packet::result(0, c1, Byteword::integer(1)));
  CHECK_THROWS_AS(b.tile->handle(Packet::result(0, c1, Byteword::integer(1))), ProtocolError);
  Packet wrong = b.root_request();
  wrong.dest = 3;
  CHECK_THROWS_AS(b.tile->handle(wrong), ProtocolError);
}

TEST_CASE("tile: overload policies") {
  SUBCASE("fail answers with an error") {
    Bench b("(t1.m2 (t2.m3 '42) (t3.m4))", 1, OverloadPolicy::Fail);
    b.tile->handle(b.root_request());
    b.tile->handle(Packet::request(0, 0, b.out.sent[0].caller, b.out.sent[0].payload));
    const Packet& last = b.out.sent.back();
    CHECK(last.kind == Packet::Kind::Result);
    CHECK(last.payload.is(BuiltinTag::Error));
    CHECK(b.errors.message(last.payload).find("tile 0 overloaded") != std::string::npos);
  }
  SUBCASE("block parks until a record is freed") {
    Bench b("(t1.m2 (t2.m3 '42) (t3.m4))", 1, OverloadPolicy::Block);
    b.tile->handle(b.root_request());
    const Packet req = b.out.sent[0];
    b.tile->handle(Packet::request(0, 1, Caller{1, 9, 0}, b.img.code[0][1].unquoted()));
    CHECK(b.tile->parked_count() == 1);
    b.tile->handle(Packet::result(0, b.out.sent[0].caller, Byteword::integer(41)));
    b.tile->handle(Packet::result(0, b.out.sent[1].caller, Byteword::integer(1)));
    CHECK(b.tile->parked_count() == 0);
    CHECK(b.out.sent.back().payload == Byteword::integer(41));
    CHECK(b.out.sent.back().caller.addr == 9);
  }
  SUBCASE("grow doubles") {
    Bench b("(t1.m2 (t2.m3 '42) (t3.m4))", 1, OverloadPolicy::Grow);
    b.tile->handle(b.root_request());
    b.tile->handle(Packet::request(0, 1, Caller{1, 9, 0}, b.img.code[0][1].unquoted()));
    CHECK(b.tile->capacity() == 2);
  }
}

TEST_CASE("machine: small programs") {
  for (Executor ex : {Executor::Threads, Executor::Stepped}) {
    for (unsigned t : {1u, 2u, 4u}) {
      CAPTURE(t);
      CHECK(run_str("(t1.m2 (t2.m3 '42) (t3.m4))", t, ex) == "42");
      CHECK(run_str("(beta (lambda 'x '(* (- x '1) (+ x '1))) '5)", t, ex) == "24");
      CHECK(run_str("(if (>= '3 '3) ''1 '(t1.m1 '99))", t, ex) == "1");
      CHECK(run_str("(cons '1 (cons (+ '1 '1) (emptylist)))", t, ex) == "(1 2)");
      CHECK(run_str("(head (tail (cons '1 (cons '2 (emptylist)))))", t, ex) == "2");
      CHECK(run_str("(ctrl.run '(t1.m1 '1) '3)", t, ex) == "2");
      CHECK(run_str("(return (+ '2 '3))", t, ex) == "5");
      CHECK(run_str("(let (assign 'x (t1.m1 '1)) '(+ x x))", t, ex) == "4");
      CHECK(run_str("(+ (label L (t1.m1 '1)) L)", t, ex) == "4");
      // Recursion by self-application: sum 1..10.
      CHECK(run_str("(beta (lambda 'f 'n '(beta f f n))"
                    " (lambda 'f 'n '(if n '(+ n (beta f f (- n '1))) ''0)) '10)",
                    t, ex) == "55");
      // Shadowing: the inner x is the inner binding.
      CHECK(run_str("(beta (lambda 'x '(beta (lambda 'x '(+ x '1)) (* x '10))) '2)", t, ex) == "21");
      // Lambda values pass through beta.
      CHECK(run_str("(beta (lambda 'g '(beta g '4)) (lambda 'y '(* y y)))", t, ex) == "16");
    }
  }
}

TEST_CASE("machine: host arguments") {
  const auto reg = kernel::demo_registry();
  const char* text = "(beta (lambda 'v1 '(t1.m2 (t2.m1 v1) (t2.m2 v1))) (t1.m1 (ctrl.arg '0)))";
  Machine m(bc::compile(text, 4, reg), reg, MachineConfig{2});
  CHECK(m.run({Byteword::integer(7)}) == Byteword::integer(27));
  CHECK(m.run({Byteword::integer(0)}) == Byteword::integer(6));
  CHECK_THROWS_WITH_AS(m.run(), "program reads 1 host argument(s), got 0", RuntimeError);
  // A failed argument check leaves the machine usable.
  CHECK(m.run({Byteword::integer(7)}) == Byteword::integer(27));
  CHECK(m.runs() == 3);
}

TEST_CASE("machine: runtime errors carry context") {
  try {
    run("(+ '1 (/ '1 (- '2 '2)))");
    FAIL("no error");
  } catch (const RuntimeError& e) {
    CHECK(std::string(e.what()).find("division by zero") == 0);
    CHECK(std::string(e.what()).find("in /") != std::string::npos);
  }
  CHECK_THROWS_AS(run("(if (emptylist) '1 '2)"), RuntimeError);
  CHECK_THROWS_AS(run("(beta (lambda 'x 'y '(+ x y)) '1)"), RuntimeError);
  CHECK_THROWS_AS(run("(beta '1 '2)"), RuntimeError);
  CHECK_THROWS_AS(run("(t1.m1 '(t1.m1 '1))"), RuntimeError);
  CHECK_THROWS_AS(run("(head (emptylist))"), RuntimeError);
  CHECK_THROWS_AS(run("(ctrl.run '1 '0)"), RuntimeError);
}

TEST_CASE("machine: the machine is clean after every run") {
  const auto reg = kernel::demo_registry();
  Machine m(bc::compile("(+ (t1.m1 '1) (/ '1 '0) (t2.m1 '3))", 4, reg), reg, MachineConfig{4});
  for (int i = 0; i < 20; ++i) {
    CHECK_THROWS_AS(m.run(), RuntimeError);
    CHECK(m.quiescence().clean);
  }
}

TEST_CASE("machine: boot errors") {
  const auto reg = kernel::demo_registry();
  const auto img = bc::compile("(t3.m4)", 1, reg);
  CHECK_THROWS_AS(Machine(img, reg, MachineConfig{0}), RuntimeError);
  CHECK_THROWS_AS(Machine(img, reg, MachineConfig{129}), RuntimeError);
  CHECK_THROWS_AS(Machine(img, kernel::KernelRegistry::with_defaults(), MachineConfig{1}), ImageError);
  MachineConfig zero;
  zero.subtask_capacity = 0;
  CHECK_THROWS_AS(Machine(img, reg, zero), RuntimeError);
}

TEST_CASE("machine: trace format") {
  const auto reg = kernel::demo_registry();
  MachineConfig cfg;
  cfg.trace = true;
  cfg.executor = Executor::Stepped;
  Machine m(bc::compile("(t1.m2 (t2.m3 '42) (t3.m4))", 4, reg), reg, cfg);
  m.run();
  REQUIRE(m.trace().size() == 6);
  CHECK(m.trace()[0].str() == "0 REF 4 0 0 0 0000000000000000");
  CHECK(m.trace().back().kind == Packet::Kind::Result);
  CHECK(m.trace().back().dst == m.gateway());
  std::ostringstream out;
  m.write_trace(out);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("machine: stuck reduction") {
  // One record, blocking policy: the child request parks forever.
  const auto reg = kernel::demo_registry();
  MachineConfig cfg;
  cfg.subtask_capacity = 1;
  cfg.overload = OverloadPolicy::Block;
  Machine m(bc::compile("(t1.m1 (t2.m1 '1))", 1, reg), reg, cfg);
  try {
    m.run();
    FAIL("no error");
  } catch (const ProtocolError&) {
    FAIL("stuck reduction reported as a protocol error");
  } catch (const RuntimeError& e) {
    CHECK(std::string(e.what()).find("stuck reduction") == 0);
  }
}

TEST_CASE("machine: two machines on one image are independent") {
  const auto reg = kernel::demo_registry();
  const auto img = bc::compile("(beta (lambda 'x '(* x (t1.m1 x))) (ctrl.arg '0))", 4, reg);
  Machine a(img, reg, MachineConfig{4});
  Machine b(img, reg, MachineConfig{1});
  CHECK(a.run({Byteword::integer(3)}) == Byteword::integer(12));
  CHECK(b.run({Byteword::integer(5)}) == Byteword::integer(30));
  CHECK(a.run({Byteword::integer(3)}) == b.run({Byteword::integer(3)}));
}

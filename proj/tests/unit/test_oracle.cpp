#include <doctest.h>

#include "gprm/error.hpp"
#include "gprm/kernel/demo.hpp"
#include "gprm/oracle/oracle.hpp"

using namespace gprm;
using kernel::Datum;

namespace {

std::string eval(const char* text, std::vector<Byteword> args = {}) {
  return oracle::evaluate(text, kernel::demo_registry(), std::move(args)).str();
}

}  // namespace

TEST_CASE("oracle: hand-evaluated programs") {
  // t2.m3(42) = 41, t3.m4() = 1
  CHECK(eval("(t1.m2 (t2.m3 '42) (t3.m4))") == "42");
  // t1.m1(7) = 8, t2.m1(8) = 16, t2.m2(8) = 11
  CHECK(eval("(beta (lambda 'v1 '(t1.m2 (t2.m1 v1) (t2.m2 v1))) (t1.m1 (ctrl.arg '0)))", {Byteword::integer(7)}) ==
        "27");
  CHECK(eval("(beta (lambda 'x '(* (- x '1) (+ x '1))) '5)") == "24");
  CHECK(eval("(if '0 '(/ '1 '0) ''3)") == "3");
  CHECK(eval("(cons '1 (emptylist))") == "(1)");
  CHECK(eval("(null? (emptylist))") == "1");
  CHECK(eval("(beta (lambda 'x '(beta (lambda 'x '(+ x '1)) (* x '10))) '2)") == "21");
  CHECK(eval("(beta (lambda 'f 'n '(beta f f n)) (lambda 'f 'n '(if n '(+ n (beta f f (- n '1))) ''0)) '10)") ==
        "55");
  CHECK(eval("(+ (label L (t1.m1 '1)) L)") == "4");
  CHECK(eval("(ctrl.run '(t1.m1 '1) '3)") == "2");
}

TEST_CASE("oracle: errors") {
  CHECK_THROWS_WITH_AS(eval("(/ '1 '0)"), doctest::Contains("division by zero"), RuntimeError);
  CHECK_THROWS_AS(eval("(beta (lambda 'x '(+ x x)) '1 '2)"), RuntimeError);
  CHECK_THROWS_AS(eval("(t1.m1 (ctrl.arg '0))"), RuntimeError);
  CHECK_THROWS_AS(eval("(if (cons '1 (emptylist)) '1 '2)"), RuntimeError);
}

TEST_CASE("oracle: kernels see the tile they run on") {
  auto reg = kernel::KernelRegistry::with_defaults();
  kernel::KernelService s;
  s.name = "where";
  s.methods = {{"tile", 0, false, false}};
  struct Where final : kernel::Kernel {
    kernel::KernelResult invoke(std::uint16_t, std::span<const Byteword>, kernel::KernelContext& ctx) override {
      return Byteword::integer(ctx.tile());
    }
  };
  s.factory = [] { return std::make_unique<Where>(); };
  reg.register_kernel(std::move(s));
  CHECK(oracle::evaluate("(ctrl.run '(where.tile) '6)", reg, {}, 4).str() == "2");
  CHECK(oracle::evaluate("(ctrl.run '(where.tile) '-1)", reg, {}, 4).str() == "3");
}

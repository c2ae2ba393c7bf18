#include <doctest.h>

#include "gprm/error.hpp"
#include "gprm/gpir/expr.hpp"
#include "../support/progen.hpp"

using namespace gprm;
using namespace gprm::gpir;

TEST_CASE("parse: kernel call with quoted constant") {
  Expr e = parse("(t1.m2 (t2.m3 '42) (t3.m4))");
  REQUIRE(e.is_form("t1.m2"));
  REQUIRE(e.args().size() == 2);
  CHECK(e.args()[0].is_form("t2.m3"));
  CHECK(e.args()[0].args()[0].is(ExprKind::Quoted));
  CHECK(e.args()[0].args()[0].inner().value() == 42);
  CHECK(e.args()[1].args().empty());
}

TEST_CASE("parse: lambda spellings") {
  Expr a = parse("(lambda 'x '(* (- x '1) (+ x '1)))");
  Expr b = parse("(\xce\xbb 'x '(* (- x '1) (+ x '1)))");
  Expr c = parse("(\\ 'x '(* (- x '1) (+ x '1)))");
  CHECK(a == b);
  CHECK(a == c);
  REQUIRE(a.args().size() == 2);
  CHECK(a.args()[0].inner().is(ExprKind::Var));
  CHECK(a.args()[1].is(ExprKind::Quoted));
  CHECK(parse("(\xce\xb2 (lambda 'x 'x) '1)") == parse("(& (lambda 'x 'x) '1)"));
  CHECK(parse("(beta (lambda 'x 'x) '1)").is_form("beta"));
}

TEST_CASE("parse: constants and comments") {
  Expr e = parse("; leading\n(+ '-3 '7) ; trailing");
  CHECK(e.args()[0].inner().value() == -3);
  CHECK(parse("(+ '2147483647 '-2147483648)").args()[1].inner().value() == INT32_MIN);
}

TEST_CASE("parse: errors carry positions") {
  auto code = [](const char* text) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair(std::size_t{0}, std::size_t{0});
  };
  CHECK_THROWS_AS(parse("(t1.m2 '1"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("(+ '1) (+ '2)"), ParseError);
  CHECK_THROWS_AS(parse("(lambda 'x)"), ParseError);
  CHECK_THROWS_AS(parse("(lambda x 'x)"), ParseError);
  CHECK_THROWS_AS(parse("(lambda 'x x)"), ParseError);
  CHECK_THROWS_AS(parse("(if '1 '2)"), ParseError);
  CHECK_THROWS_AS(parse("(+ '99999999999)"), ParseError);
  CHECK(code("\n  (+ '1 #)").first == 2);
}

TEST_CASE("print: canonical ASCII and reparse") {
  const char* text = "(beta (lambda 'x '(* (- x '1) (+ x '1))) '5)";
  CHECK(print(parse(text)) == text);
  CHECK(print(parse("(\xce\xb2 (\xce\xbb 'x 'x) '1)")) == "(beta (lambda 'x 'x) '1)");
  CHECK(print(parse("(label L (+ '1 '2))")) == "(label L (+ '1 '2))");
}

TEST_CASE("property: print/parse round trip") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gprm::testing::ProgramGenerator g(seed);
    Expr e = parse(g.program());
    CHECK(parse(print(e)) == e);
    CHECK(parse(print_pretty(e)) == e);
    CHECK(parse(print_pretty(e, 20)) == e);
  }
}

TEST_CASE("desugar: return, let, begin") {
  CHECK(print(desugar(parse("(return (t1.m1 '1))"))) == "(if '1 '(t1.m1 '1) '0)");
  CHECK(alpha_equal(desugar(parse("(let (assign 'x (t1.m1 '1)) '(+ x x))")),
                    parse("(beta (lambda 'x '(+ x x)) (t1.m1 '1))")));
  CHECK(alpha_equal(desugar(parse("(begin (t1.m1 '1))")), parse("(beta (lambda 'x1 '(if '1 'x1 '0)) (t1.m1 '1))")));
  CHECK(alpha_equal(desugar(parse("(begin (t1.m1 '1) (t2.m1 '2))")),
                    parse("(beta (lambda 'x1 'x2 '(if '1 'x2 '0)) (t1.m1 '1) (t2.m1 '2))")));
  CHECK_THROWS_WITH_AS(desugar(parse("(assign 'x '1)")), doctest::Contains("assign outside let"), Error);
  CHECK_THROWS_AS(desugar(parse("(begin)")), Error);
}

TEST_CASE("desugar: nested sugar and idempotence") {
  Expr e = desugar(parse("(let (assign 'x (begin '1 (return '2))) '(+ x '1))"));
  CHECK(print(e).find("begin") == std::string::npos);
  CHECK(print(e).find("return") == std::string::npos);
  CHECK(desugar(e) == e);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    gprm::testing::ProgramGenerator g(seed);
    Expr p = parse(g.program());
    CHECK(desugar(p) == p);
  }
}

TEST_CASE("alpha_equal") {
  CHECK(alpha_equal(parse("(beta (lambda 'x 'x) '1)"), parse("(beta (lambda 'y 'y) '1)")));
  CHECK_FALSE(alpha_equal(parse("(beta (lambda 'x 'y '(+ x y)) '1 '2)"), parse("(beta (lambda 'x 'y '(+ y x)) '1 '2)")));
  CHECK_FALSE(alpha_equal(parse("(t1.m1 '1)"), parse("(t1.m1 '2)")));
}

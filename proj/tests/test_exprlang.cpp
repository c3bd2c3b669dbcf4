#include "doctest.h"

#include "cgeo/error.hpp"
#include "cgeo/expr.hpp"

#include <cmath>
#include <random>
#include <string>

using cgeo::Errc;
using cgeo::Expr;
using cgeo::Vec;

namespace {

Vec point(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Errc code_of(std::string_view src, int d) {
  try {
    Expr::parse(src, d);
  } catch (const cgeo::Error& e) {
    return e.code();
  }
  FAIL("expected parse failure for " << src);
  return Errc::InvalidArgument;
}

// Random expressions built to stay inside the evaluation domain on
// |x_i| <= 1: log and sqrt only see arguments bounded away from zero.
std::string random_expr(std::mt19937_64& rng, int d, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 10);
  std::uniform_int_distribution<int> var(1, d);
  std::uniform_real_distribution<double> num(-2.0, 2.0);
  auto sub = [&] { return random_expr(rng, d, depth - 1); };
  switch (pick(rng)) {
    case 0: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", num(rng));
      return std::string("(") + buf + ")";
    }
    case 1: return "x" + std::to_string(var(rng));
    case 2: return "(" + sub() + " + " + sub() + ")";
    case 3: return "(" + sub() + " - " + sub() + ")";
    case 4: return "(" + sub() + " * " + sub() + ")";
    case 5: return "(" + sub() + " / (2 + sin(" + sub() + ")))";
    case 6: return "exp(" + sub() + " / 4)";
    case 7: return "log(2 + cos(" + sub() + "))";
    case 8: return "sqrt(1.5 + tanh(" + sub() + "))";
    case 9: return "(" + sub() + ")^2";
    default: return "(1.2 + sin(" + sub() + "))^(" + sub() + " / 5)";
  }
}

}  // namespace

TEST_CASE("precedence and associativity") {
  const Expr e = Expr::parse("1 + 2*x1", 3);
  const auto& r = e.root();
  REQUIRE(r.op == Expr::Op::Add);
  CHECK(r.lhs->op == Expr::Op::Number);
  CHECK(r.lhs->number == 1.0);
  REQUIRE(r.rhs->op == Expr::Op::Mul);
  CHECK(r.rhs->lhs->number == 2.0);
  CHECK(r.rhs->rhs->op == Expr::Op::Variable);
  CHECK(r.rhs->rhs->variable == 1);

  // ^ binds tighter than unary minus and is right associative
  CHECK(Expr::parse("-2^2", 1).eval(point({0})) == -4.0);
  CHECK(Expr::parse("2^3^2", 1).eval(point({0})) == 512.0);
  CHECK(Expr::parse("2^-1", 1).eval(point({0})) == 0.5);
  CHECK(Expr::parse("8 - 3 - 2", 1).eval(point({0})) == 3.0);
  CHECK(Expr::parse("8 / 4 / 2", 1).eval(point({0})) == 1.0);
  CHECK(Expr::parse("1e-2 * 3.5E+1", 1).eval(point({0})) ==
        doctest::Approx(0.35));
}

TEST_CASE("parse errors") {
  CHECK(code_of("x4", 3) == Errc::VariableOutOfRange);
  CHECK(code_of("x0", 3) == Errc::VariableOutOfRange);
  CHECK(code_of("y1", 3) == Errc::UnknownIdentifier);
  CHECK(code_of("foo(x1)", 3) == Errc::UnknownIdentifier);
  CHECK(code_of("1 +", 3) == Errc::SyntaxError);
  CHECK(code_of("(x1", 3) == Errc::SyntaxError);
  CHECK(code_of("x1 x2", 3) == Errc::SyntaxError);
  CHECK(code_of("", 3) == Errc::SyntaxError);
  CHECK(code_of("sin x1", 3) == Errc::SyntaxError);

  try {
    Expr::parse("1 + * 2", 1);
    FAIL("no throw");
  } catch (const cgeo::SyntaxError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("nested input is parsed without exhausting the stack") {
  const std::string deep = std::string(90, '(') + "x1" + std::string(90, ')');
  CHECK(Expr::parse(deep, 1).eval(point({2.5})) == 2.5);
  const std::string too_deep =
      std::string(100000, '(') + "x1" + std::string(100000, ')');
  CHECK(code_of(too_deep, 1) == Errc::SyntaxError);
}

TEST_CASE("jet values on simple expressions") {
  auto j = Expr::parse("x1^2", 1).eval_jet2(point({3}));
  CHECK(j.value == doctest::Approx(9));
  CHECK(j.grad(0) == doctest::Approx(6));
  CHECK(j.hess(0, 0) == doctest::Approx(2));

  j = Expr::parse("exp(2*x1)", 1).eval_jet2(point({0}));
  CHECK(j.value == doctest::Approx(1));
  CHECK(j.grad(0) == doctest::Approx(2));
  CHECK(j.hess(0, 0) == doctest::Approx(4));

  j = Expr::parse("0^0", 2).eval_jet2(point({0, 0}));
  CHECK(j.value == 1.0);
  CHECK(j.grad.norm() == 0.0);
  CHECK(j.hess.norm() == 0.0);
}

TEST_CASE("hessian of sin(x1*x2) matches central differences") {
  const Expr e = Expr::parse("sin(x1*x2)", 2);
  const Vec x = point({0.3, 0.7});
  const auto j = e.eval_jet2(x);
  const double h = 1e-4;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      Vec pp = x, pm = x, mp = x, mm = x;
      pp(a) += h; pp(b) += h;
      pm(a) += h; pm(b) -= h;
      mp(a) -= h; mp(b) += h;
      mm(a) -= h; mm(b) -= h;
      const double fd =
          (e.eval(pp) - e.eval(pm) - e.eval(mp) + e.eval(mm)) / (4 * h * h);
      CHECK(std::abs(fd - j.hess(a, b)) < 1e-6);
    }
  }
}

TEST_CASE("evaluation domain errors") {
  auto code = [](const char* src) {
    try {
      Expr::parse(src, 1).eval_jet2(point({0.0}));
    } catch (const cgeo::Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  CHECK(code("log(x1 - 1)") == Errc::EvalDomainError);
  CHECK(code("sqrt(x1 - 1)") == Errc::EvalDomainError);
  CHECK(code("1 / x1") == Errc::EvalDomainError);
  CHECK(code("(x1 - 2)^0.5") == Errc::EvalDomainError);
  CHECK(Expr::parse("(x1 - 2)^3", 1).eval(point({0.0})) == -8.0);
}

TEST_CASE("random expressions: jets agree with finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3;
    const Expr e = Expr::parse(random_expr(rng, d, 4), d);
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = coord(rng);
    const auto j = e.eval_jet2(x);
    CHECK(e.eval(x) == doctest::Approx(j.value).epsilon(1e-14));
    const double h = 1e-4;
    const double scale_g = 1.0 + j.grad.cwiseAbs().maxCoeff();
    const double scale_h = 1.0 + j.hess.cwiseAbs().maxCoeff();
    for (int a = 0; a < d; ++a) {
      Vec p = x, m = x;
      p(a) += h;
      m(a) -= h;
      const double fd_g = (e.eval(p) - e.eval(m)) / (2 * h);
      CHECK(std::abs(fd_g - j.grad(a)) <= 1e-5 * scale_g);
      for (int b = 0; b < d; ++b) {
        Vec pp = x, pm = x, mp = x, mm = x;
        pp(a) += h; pp(b) += h;
        pm(a) += h; pm(b) -= h;
        mp(a) -= h; mp(b) += h;
        mm(a) -= h; mm(b) -= h;
        const double fd_h =
            (e.eval(pp) - e.eval(pm) - e.eval(mp) + e.eval(mm)) / (4 * h * h);
        CHECK(std::abs(fd_h - j.hess(a, b)) <= 1e-5 * scale_h);
      }
    }
    CHECK((j.hess - j.hess.transpose()).norm() == 0.0);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("unparse round trip") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Expr e = Expr::parse(random_expr(rng, 4, 5), 4);
    const Expr back = Expr::parse(e.unparse(), 4);
    CHECK(e.structurally_equal(back));
  }
  const Expr e = Expr::parse("-x1^-2 + 0.1", 2);
  CHECK(e.structurally_equal(Expr::parse(e.unparse(), 2)));
}

TEST_CASE("fuzzed input only ever raises library errors") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "x123 +-*/^().e,sincoxptahlg0987\t";
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 24);
  int parsed = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s += alphabet[ch(rng)];
    try {
      Expr::parse(s, 3);
      ++parsed;
    } catch (const cgeo::Error& e) {
      const bool known = e.code() == Errc::SyntaxError ||
                         e.code() == Errc::UnknownIdentifier ||
                         e.code() == Errc::VariableOutOfRange;
      CHECK(known);
    }
  }
  CHECK(parsed > 0);
}

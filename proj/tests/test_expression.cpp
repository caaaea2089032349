#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "magweyl/expression.hpp"

using magweyl::Error;
using magweyl::ErrorKind;
using magweyl::Expr;
using magweyl::Vec;

static Vec pt(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

TEST_CASE("arithmetic and precedence") {
  CHECK(Expr::parse("2 + 3*4^2").eval(pt({0})) == 50.0);
  CHECK(Expr::parse("2^3^2").eval(pt({0})) == 512.0);  // right-associative
  CHECK(Expr::parse("-x1^2").eval(pt({3})) == -9.0);
  CHECK(Expr::parse("(2+3)*4").eval(pt({0})) == 20.0);
  CHECK(Expr::parse("7/2/2").eval(pt({0})) == 1.75);
  CHECK(Expr::parse("2*x1^-2").eval(pt({2})) == 0.5);
  CHECK(Expr::parse("x1 + 0.15*x1^2").eval(pt({2})) == Catch::Approx(2.6).epsilon(1e-15));
}

TEST_CASE("variables and functions") {
  const Vec x = pt({0.3, -1.2, 0.7, -0.4});
  CHECK(Expr::parse("x3^2 + x4^2").eval(x) == Catch::Approx(0.65).margin(1e-15));
  CHECK(Expr::parse("sin(x1)*cos(x2) + exp(x3)").eval(x) ==
        Catch::Approx(std::sin(0.3) * std::cos(-1.2) + std::exp(0.7)).epsilon(1e-15));
  CHECK(Expr::parse("sin(pi/2)").eval(pt({0})) == Catch::Approx(1.0).epsilon(1e-15));
  // signed integer powers stay exact
  CHECK(Expr::parse("x1^3/3").eval(pt({-2})) == Catch::Approx(-8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("exact derivatives") {
  const Vec x = pt({1.3, 0.4, -0.8, 0.25});
  auto fd = [&](const Expr& e, int j) {
    const double h = 1e-6;
    Vec a = x, b = x;
    a[j] += h;
    b[j] -= h;
    return (e.eval(a) - e.eval(b)) / (2 * h);
  };
  for (const char* src : {"x1^3/3", "sin(x1^2)*exp(x2)", "x1*x2/(1 + x3^2)",
                          "cos(x1*x4) - x2^2*x3", "(x1 - (x3^2 + x4^2)/4)*x3/2"}) {
    const Expr e = Expr::parse(src);
    for (int j = 0; j < 4; ++j) {
      CAPTURE(src, j);
      CHECK(e.diff(j).eval(x) == Catch::Approx(fd(e, j)).margin(5e-9));
    }
  }
  // structural zeros come out as exact zeros
  CHECK(Expr::parse("x1 + x3^2").diff(1).eval(x) == 0.0);
}

TEST_CASE("parse and domain errors") {
  auto kind_of = [](auto&& fn) -> std::optional<ErrorKind> {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  CHECK_THROWS_AS(Expr::parse("x5"), Error);
  CHECK_THROWS_AS(Expr::parse("2 +"), Error);
  CHECK_THROWS_AS(Expr::parse("bogus(x1)"), Error);
  CHECK_THROWS_AS(Expr::parse("(x1"), Error);
  CHECK(kind_of([] { Expr::parse("x1 x2"); }) == ErrorKind::usage);
  // non-constant exponents are not differentiable here
  CHECK(kind_of([] { Expr::parse("x1^x2").diff(0); }) == ErrorKind::domain);
  // evaluating past the supplied dimension is a usage error
  CHECK(kind_of([] { Expr::parse("x3").eval(Vec::Zero(2)); }) == ErrorKind::usage);
}

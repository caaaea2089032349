#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "magweyl/ode.hpp"

using namespace magweyl;

static Vec v4(double a, double b, double c, double d) {
  Vec y(4);
  y << a, b, c, d;
  return y;
}

// uniform rotation in the momentum plane: y = (x1, x2, p1, p2),
// xdot = p, pdot = mu (p2, -p1); exact solution is a circle
static Rhs rotor(double mu) {
  return [mu](double, const Vec& y) {
    Vec d(4);
    d << y[2], y[3], mu * y[3], -mu * y[2];
    return d;
  };
}

TEST_CASE("circle to high accuracy, including the interpolant") {
  const double mu = 50.0;
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  opt.keep_dense = true;
  const Vec y0 = v4(0.2, -0.1, 0.0, 1.0);
  auto sol = integrate(rotor(mu), 0.0, 3.0, y0, opt);

  auto exact = [&](double t) {
    // p(t) = (sin(mu t), cos(mu t)); x(t) = x0 + (1 - cos(mu t), sin(mu t))/mu
    return v4(0.2 + (1 - std::cos(mu * t)) / mu, -0.1 + std::sin(mu * t) / mu,
              std::sin(mu * t), std::cos(mu * t));
  };
  double worst = 0;
  for (int i = 0; i <= 3000; ++i) {
    const double t = 3.0 * i / 3000;
    worst = std::max(worst, (sol.at(t) - exact(t)).norm());
  }
  CHECK(worst < 1e-9);  // the dense output must hold interpolation order, not just the nodes
}

TEST_CASE("invariant monitor tightens the tolerance and reports the retry") {
  const double mu = 30.0;
  OdeOptions opt;
  opt.rtol = 1e-5;  // deliberately sloppy start
  opt.atol = 1e-14;  // keep rtol in charge so the ladder actually tightens the drift
  opt.invariant = [](double, const Vec& y) { return y[2] * y[2] + y[3] * y[3]; };
  opt.invariant_tol = 5e-7;  // reachable at rtol 1e-8, unreachable at the sloppy start
  auto sol = integrate(rotor(mu), 0.0, 2.0, v4(0, 0, 0, 1), opt);
  CHECK(sol.retries >= 1);
  CHECK(sol.invariant_drift <= 5e-7);
  CHECK(sol.achieved_rtol < 1e-5);
}

TEST_CASE("upward crossing events land on the exact times") {
  const double mu = 40.0;
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  opt.max_step = 0.25 / mu;
  Event ev{[](double, const Vec& y) { return y[2]; }, true};
  auto sol = integrate(rotor(mu), 0.0, 1.0, v4(0, 0, 0, 1), opt, &ev);
  // p1(t) = sin(mu t) crosses upward at t = 2 pi k / mu, k >= 1
  REQUIRE(sol.crossings.size() >= 5);
  for (size_t k = 1; k <= sol.crossings.size(); ++k) {
    CHECK(sol.crossings[k - 1].t ==
          Catch::Approx(2 * M_PI * static_cast<double>(k) / mu).margin(1e-10));
  }
}

TEST_CASE("stop predicate truncates") {
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.stop_when = [](double, const Vec& y) { return y[0] > 0.5; };
  auto sol = integrate(rotor(10.0), 0.0, 50.0, v4(0.48, 0, 0.3, 0.1), opt);
  CHECK(sol.truncated);
  CHECK(sol.y.back()[0] > 0.5);
}

TEST_CASE("finite-time blowup raises stiffness") {
  Rhs quad = [](double, const Vec& y) {
    Vec d(1);
    d[0] = y[0] * y[0];
    return d;
  };
  Vec y0(1);
  y0[0] = 1.0;
  try {
    integrate(quad, 0.0, 2.0, y0, {});
    FAIL("expected stiffness");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::stiffness);
  }
}

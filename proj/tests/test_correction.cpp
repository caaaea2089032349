#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "magweyl/correction.hpp"
#include "magweyl/dynamics.hpp"

using namespace magweyl;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

}  // namespace

TEST_CASE("g kernel reproduces frozen quadrature values") {
  // Reference values from the head+tail split at cutoff 40 / 10 tail terms,
  // pinned to 12 digits.
  const struct {
    double t, g;
  } table[] = {
      {0.0, 0.172218587632},   {0.1, 0.239623059039},  {0.25, 0.255469926649},
      {0.4, 0.090900151996},   {0.5, -0.587991037587}, {0.75, -0.133692995487},
      {0.9, 0.070776705156},   {1.3, 0.228645604106},  {2.25, 0.255469926649},
      {-0.6, 0.090900151996},
  };
  for (const auto& row : table)
    CHECK(g_kernel(row.t) == Catch::Approx(row.g).margin(1e-9));
}

TEST_CASE("g kernel reduction to [0,1) is bit-identical") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const double r = x - std::floor(x);
    REQUIRE(g_kernel(x) == g_kernel(r));
    // reducing an already reduced argument is a no-op
    REQUIRE(g_kernel(r) == g_kernel(r - std::floor(r)));
  }
}

TEST_CASE("g kernel is 1-periodic within the evaluation accuracy") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double t = u(rng);
    REQUIRE(std::abs(g_kernel(t + 1.0) - g_kernel(t)) <= 1e-6);
  }
}

TEST_CASE("g kernel has zero mean and is not identically zero") {
  double mean = 0, peak = 0;
  const int n = 512;
  for (int i = 0; i < n; ++i) {
    const double g = g_kernel((i + 0.5) / n);
    mean += g;
    peak = std::max(peak, std::abs(g));
  }
  mean /= n;
  CHECK(std::abs(mean) <= 1e-4);
  CHECK(peak > 0.01);
  CHECK(peak == Catch::Approx(0.585975069854).margin(1e-9));
}

TEST_CASE("g kernel square-root cusp at the half-period jump") {
  // Below t = 1/2 the kernel rises like 2 sqrt(2 e) above the jump value.
  const double e = 1e-3;
  const double q = (g_kernel(0.5 - e) - g_kernel(0.5)) / std::sqrt(e);
  CHECK(q == Catch::Approx(2.76308889).margin(1e-6));
  CHECK(q > 2.0 * std::sqrt(2.0) - 0.25);
  CHECK(q < 2.0 * std::sqrt(2.0) + 0.25);
}

TEST_CASE("g kernel sampled Hoelder-1/2 quotient stays bounded") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  std::uniform_real_distribution<double> ud(std::log(1e-4), std::log(1e-1));
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const double t = ut(rng);
    const double d = std::exp(ud(rng));
    worst = std::max(worst, std::abs(g_kernel(t + d) - g_kernel(t)) / std::sqrt(d));
  }
  INFO("max sampled quotient " << worst);
  CHECK(worst < 4.0);   // the cusp slope 2 sqrt(2) is the expected ceiling
  CHECK(worst > 0.5);   // the sample actually straddles real variation
}

TEST_CASE("g kernel rejects inadequate resolution, degrades gracefully near it") {
  CHECK_THROWS_AS(g_kernel(0.3, GKernelParams{5, 10}), Error);
  CHECK_THROWS_AS(g_kernel(0.3, GKernelParams{40, 3}), Error);
  try {
    g_kernel(0.3, GKernelParams{5, 10});
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::resolution);
  }
  // a short but admissible split still meets the 1e-5 accuracy contract
  CHECK(g_kernel(0.25, GKernelParams{12, 4}) ==
        Catch::Approx(0.255469926649).margin(1e-5));
}

TEST_CASE("well action: frozen scale values, homogeneity, and dS/dE") {
  CHECK(classical_action_scale(2) == Catch::Approx(6.189465953414474).epsilon(1e-11));
  CHECK(classical_action_scale(3) == Catch::Approx(5.254080530014).margin(1e-8));

  // S(nu, sqrt(c) k, c W) = c^{1/2 + 1/(2 nu)} S(nu, k, W)
  const double base = well_action(EffectiveModel{2, 0.4, 1.0});
  const double scaled = well_action(EffectiveModel{2, 0.8, 4.0});
  CHECK(scaled == Catch::Approx(std::pow(4.0, 0.75) * base).epsilon(1e-9));

  // the action derivative in energy is the orbit period
  const double xi2 = -0.4, W = 1.0;
  for (const double E : {-0.3, -0.15, 0.0, 0.2, 0.4}) {
    const double dE = 1e-5;
    const double sp = well_action(EffectiveModel{2, xi2, W + 2 * (E + dE)});
    const double sm = well_action(EffectiveModel{2, xi2, W + 2 * (E - dE)});
    const double dSdE = (sp - sm) / (2 * dE);
    const double T = std::sqrt(2.0) * period_T(EffectiveModel{2, xi2, W + 2 * E});
    CHECK(dSdE == Catch::Approx(T).epsilon(1e-6));
  }
}

TEST_CASE("landau strip: level sum and closed form agree") {
  const struct {
    int nu;
    double Wt, hbar;
  } cases[] = {{2, 1.0, 0.05}, {2, 1.0, 0.02}, {3, 1.0, 0.02}, {4, 1.5, 0.03}};
  for (const auto& c : cases) {
    const LandauStrip ls = landau_strip_integral(c.nu, c.Wt, c.hbar);
    const double s = double(c.nu) / (c.nu - 1);
    CHECK(ls.value == Catch::Approx(ls.closed_form).epsilon(1e-13));
    CHECK(ls.smooth_part == Catch::Approx(std::pow(c.Wt / c.hbar, s)).epsilon(1e-15));
  }
  // nu = 2: (1 - 1/4) zeta(2) = pi^2/8
  const LandauStrip l2 = landau_strip_integral(2, 1.0, 0.05);
  CHECK(l2.closed_form ==
        Catch::Approx(M_PI * M_PI / 8.0 * std::pow(1.0 / 0.05, 2.0)).epsilon(1e-13));

  CHECK(zeta_series(2.0) == Catch::Approx(M_PI * M_PI / 6.0).epsilon(1e-13));
  CHECK(zeta_series(1.5) == Catch::Approx(2.612375348685488).epsilon(1e-12));
}

TEST_CASE("n0 strip integral: frozen values and support window") {
  const StripCount a05 = n0_strip_integral(2, 1.0, 0.05);
  CHECK(a05.value == Catch::Approx(493.514452995).margin(1e-6));
  CHECK(a05.levels == 28);
  CHECK(a05.xi2_min == Catch::Approx(-0.9749).margin(2e-3));
  // the lowest level leaves the split wells at xi2 = Wt^2 / (2 hbar^2)
  CHECK(a05.xi2_max == Catch::Approx(200.0).margin(0.05));

  const StripCount a02 = n0_strip_integral(2, 1.0, 0.02);
  CHECK(a02.value == Catch::Approx(3084.234878693).margin(1e-5));
  CHECK(a02.levels == 70);
  CHECK(a02.xi2_max == Catch::Approx(1250.0).margin(0.05));

  const StripCount b02 = n0_strip_integral(3, 1.0, 0.02);
  CHECK(b02.value == Catch::Approx(398.089211168).margin(1e-6));
  CHECK(b02.xi2_min == Catch::Approx(-b02.xi2_max).epsilon(1e-12));
}

TEST_CASE("pointwise n0 agrees with the grid count and vanishes off-window") {
  // merged well, split pair, and an odd-exponent well, each against the
  // finite-difference count of the same operator
  const struct {
    int nu;
    double xi2;
    long slack;  // split wells may disagree by one per well
  } probes[] = {{2, -0.5, 1}, {2, 3.0, 2}, {3, 0.7, 1}};
  for (const auto& p : probes) {
    const long n0 = n0_of_xi2(p.nu, 1.0, 0.05, p.xi2);
    const AuxOperator1D op = AuxOperator1D::with_walls(p.nu, 0.05, p.xi2, 1.0, 0.0);
    const EigenCount fd = fd_eigencount(op, 0.0);
    INFO("nu " << p.nu << " xi2 " << p.xi2 << ": n0 " << n0 << " fd " << fd.count);
    CHECK(std::labs(n0 - fd.count) <= p.slack);
  }

  // split configuration counts both wells
  CHECK(n0_of_xi2(2, 1.0, 0.05, 3.0) % 2 == 0);
  CHECK(n0_of_xi2(2, 1.0, 0.05, 3.0) > 0);

  // outside the support certificate the count is zero
  CHECK(n0_of_xi2(2, 1.0, 0.05, 201.0) == 0);
  CHECK(n0_of_xi2(2, 1.0, 0.05, -1.2) == 0);

  // deepening the well never loses states
  CHECK(n0_of_xi2(2, 1.4, 0.05, -0.3) >= n0_of_xi2(2, 1.0, 0.05, -0.3));
}

TEST_CASE("correction term: frozen values, defining identity, threshold shift") {
  const CorrectionTerm c05 = correction_term(2, 1.0, 0.05, 0.01);
  CHECK(c05.n0_integral == Catch::Approx(493.514452995).margin(1e-6));
  CHECK(c05.strip_integral == Catch::Approx(493.480220054).margin(1e-6));
  CHECK(c05.strip_integral == Catch::Approx(c05.strip_closed_form).epsilon(1e-13));
  CHECK(c05.value ==
        Catch::Approx((c05.n0_integral - c05.strip_integral) / (kTwoPi * 0.01)).epsilon(1e-12));
  CHECK(c05.n0_integral - c05.strip_integral == Catch::Approx(0.034232940).margin(2e-6));

  const CorrectionTerm c02 = correction_term(2, 1.0, 0.02, 0.01);
  CHECK(c02.n0_integral - c02.strip_integral == Catch::Approx(-0.016496648).margin(2e-6));
  const CorrectionTerm d02 = correction_term(3, 1.0, 0.02, 0.01);
  CHECK(d02.n0_integral - d02.strip_integral == Catch::Approx(0.044382206).margin(2e-6));

  // both integrals see only W + 2 tau
  const CorrectionTerm shifted = correction_term(2, 0.8, 0.05, 0.01, 0.1);
  CHECK(shifted.value == c05.value);
  CHECK(shifted.n0_integral == c05.n0_integral);

  CHECK_THROWS_AS(correction_term(2, 1.0, 0.05, 0.0), Error);
  CHECK_THROWS_AS(correction_term(2, -1.0, 0.05, 0.01), Error);
  CHECK_THROWS_AS(correction_term(1, 1.0, 0.05, 0.01), Error);
  CHECK_THROWS_AS(correction_term(2, 0.2, 0.05, 0.01, -0.2), Error);
}

TEST_CASE("smoothing both counts makes the subtraction vanish") {
  const struct {
    int nu;
    double hbar;
  } cases[] = {{2, 0.05}, {2, 0.02}, {3, 0.02}};
  const double h = 0.01;
  for (const auto& c : cases) {
    const double s = double(c.nu) / (c.nu - 1);
    const double smooth_strip = std::pow(1.0 / c.hbar, s);
    const double r = correction_smooth_residual(c.nu, 1.0, c.hbar, h);
    INFO("nu " << c.nu << " hbar " << c.hbar << ": residual " << r * kTwoPi * h
               << " against " << smooth_strip);
    CHECK(std::abs(r) * kTwoPi * h <= 1e-4 * smooth_strip);
  }
}

TEST_CASE("closed form is the kernel times the stated prefactor") {
  const double hbar = 0.05, h = 0.01, kappa = -0.116, S0 = 6.25;
  CHECK(closed_form_correction(2, 1.0, hbar, h, kappa, S0) ==
        Catch::Approx(kappa / h * std::sqrt(hbar) * g_kernel(S0 / (kTwoPi * hbar)))
            .epsilon(1e-15));
  // W enters through W^{1/8} and the action W^{3/4} for nu = 2
  const double manual = kappa / h * std::sqrt(hbar) * std::pow(16.0, 0.125) *
                        g_kernel(std::pow(16.0, 0.75) * S0 / (kTwoPi * hbar));
  CHECK(closed_form_correction(2, 16.0, hbar, h, kappa, S0) ==
        Catch::Approx(manual).epsilon(1e-15));
}

TEST_CASE("4d correction thins one 2d slice per transverse level") {
  // W_beta = V - (2 beta + 1) mu h f2 = 1 - 0.16 (2 beta + 1): three nonempty wells
  const auto terms = correction_terms_4d(2, 1.0, 0.05, 0.01, 20.0, 0.8);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0].value == correction_term(2, 1.0 - 0.16, 0.05, 0.01).value);
  CHECK(terms[1].value == correction_term(2, 1.0 - 0.48, 0.05, 0.01).value);
  CHECK(terms[2].value == correction_term(2, 1.0 - 0.80, 0.05, 0.01).value);
  CHECK_THROWS_AS(correction_terms_4d(2, 1.0, 0.05, 0.01, 20.0, 0.0), Error);
}

TEST_CASE("correction sweep: amplitude scale, period, and fitted kappa") {
  const CorrectionFit fit = fit_correction(2, 0.05);
  CHECK(fit.raw_amplitude == Catch::Approx(0.068607267).margin(1e-7));
  CHECK(fit.frequency == Catch::Approx(0.999).margin(1e-9));
  CHECK(std::abs(fit.mean_delta) < 0.2 * fit.raw_amplitude);
  CHECK(std::abs(fit.kappa) > 0.10);
  CHECK(std::abs(fit.kappa) < 0.13);
  CHECK(fit.S0 / fit.classical_S0 > 0.97);
  CHECK(fit.S0 / fit.classical_S0 < 1.03);
  CHECK(fit.rms < 0.7 * fit.raw_amplitude);
  CHECK(fit.amplitude > 0.3 * fit.raw_amplitude);
  CHECK(fit.amplitude < 2.0 * fit.raw_amplitude);
  REQUIRE(fit.W.size() == 121);
  REQUIRE(fit.delta.size() == 121);
  CHECK(fit.classical_S0 == Catch::Approx(6.189465953414474).epsilon(1e-11));

  // halving hbar leaves amplitude / sqrt(hbar) nearly unchanged
  const CorrectionFit half = fit_correction(2, 0.025);
  CHECK(half.raw_amplitude == Catch::Approx(0.048445491).margin(1e-7));
  CHECK(half.frequency == Catch::Approx(1.001).margin(1e-9));
  const double p = std::log(fit.raw_amplitude / half.raw_amplitude) / std::log(2.0);
  INFO("amplitude exponent " << p);
  CHECK(p > 0.35);
  CHECK(p < 0.65);

  CHECK_THROWS_AS(fit_correction(2, 0.05, 8), Error);
  CHECK_THROWS_AS(fit_correction(2, 0.05, 121, 0.3), Error);
}

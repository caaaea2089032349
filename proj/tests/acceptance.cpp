// Acceptance gate: each numbered check prints exactly one PASS/FAIL line with
// the measured quantity and its pinned tolerance. Exit code = number of
// failures. Informational NOTE lines are not counted.
#include <lapacke.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magweyl/correction.hpp"
#include "magweyl/dynamics.hpp"
#include "magweyl/field_geometry.hpp"
#include "magweyl/field_io.hpp"
#include "magweyl/weyl.hpp"

using namespace magweyl;
using json = nlohmann::json;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void line(int idx, bool ok, double secs, const std::string& what) {
  std::printf("[%2d] %s  %6.2fs  %s\n", idx, ok ? "PASS" : "FAIL", secs, what.c_str());
  if (!ok) ++g_failures;
}

void note(const std::string& what) { std::printf("     note:     %s\n", what.c_str()); }

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Vec pt(std::initializer_list<double> v) {
  Vec x(static_cast<long>(v.size()));
  long i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const char* bin = std::getenv("MAGWEYL_CLI");
  CliResult r;
  if (!bin) return r;
  static int seq = 0;
  const std::string tag = "/tmp/magweyl_accept_" + std::to_string(++seq);
  const int status =
      std::system((std::string(bin) + " " + args + " >" + tag + ".out 2>/dev/null").c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(tag + ".out", std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

// Dense oracle: full eigensolve of the same tridiagonal discretization.
std::vector<double> dense_spectrum(const AuxOperator1D& op, long n) {
  const double dx = 2 * op.L / (n + 1);
  std::vector<double> d(n), e(n > 1 ? n - 1 : 0);
  for (long i = 0; i < n; ++i)
    d[i] = op.hbar * op.hbar / (dx * dx) + op.potential(-op.L + (i + 1) * dx);
  std::fill(e.begin(), e.end(), -0.5 * op.hbar * op.hbar / (dx * dx));
  if (LAPACKE_dstev(LAPACK_COL_MAJOR, 'N', (lapack_int)n, d.data(), e.data(), nullptr, 1) != 0)
    d.assign(n, std::numeric_limits<double>::quiet_NaN());
  return d;
}

long dense_count_below(const std::vector<double>& s, double tau) {
  return std::lower_bound(s.begin(), s.end(), tau) - s.begin();
}

// 1: drift-reversal momentum through the CLI, wall clock under 5 s
void c1() {
  Timer T;
  bool ok = true;
  double k2 = -1;
  auto r2 = run_cli("kstar --nu 2");
  if (r2.code != 0)
    ok = false;
  else {
    k2 = json::parse(r2.out, nullptr, false)["kstar"].get<double>();
    ok = k2 >= 0.64 && k2 <= 0.66;
  }
  auto r3 = run_cli("kstar --nu 3");
  const double k3 =
      r3.code == 0 ? json::parse(r3.out, nullptr, false)["kstar"].get<double>() : -1.0;
  ok = ok && k3 == 0.0;
  const double secs = T.secs();
  ok = ok && secs < 5.0;
  line(1, ok, secs,
       fmt("drift reversal via CLI: k*(nu=2) = %.6f in [0.64, 0.66]; k*(nu=3) = %g exactly 0; "
           "< 5 s",
           k2, k3));
}

// 2: per-period drift increment changes sign exactly at k*
void c2() {
  Timer T;
  const double ks = find_kstar(2).k;
  bool ok = true;
  int checked = 0;
  for (int i = 1; i <= 30; ++i) {
    const double k = 0.05 * i;  // (0, 1.5]
    if (std::abs(k - ks) <= 0.02) continue;
    double I;
    try {
      I = drift_increment_I({2, k, 1.0});
    } catch (const Error& e) {
      // k = 1: the zero level runs through the degenerate critical point and
      // the increment diverges; the sign law holds in the limit sense
      if (e.kind() != ErrorKind::divergence || !e.has_estimate()) throw;
      I = e.estimate();
    }
    ok = ok && (I > 0) == (k > ks) && I != 0.0;
    ++checked;
  }
  const double secs = T.secs();
  ok = ok && secs < 10.0;
  line(2, ok, secs,
       fmt("sign(I(k)) = sign(k - k*) at %d grid momenta, step 0.05 on (0, 1.5] minus "
           "k* +/- 0.02; < 10 s",
           checked));
}

// 3: constant-field orbit radius sqrt(2E)/(mu f) to 1e-6 relative
void c3() {
  Timer T;
  const double E = 0.25;
  double worst_rel = 0;
  bool ok = true;
  for (double mu : {10.0, 100.0}) {
    auto sys = constant_field(2, {1.0});
    sys.V = Expr::parse("0.5");  // V = 2E puts the dressed orbit on energy E
    sys.V_src = "0.5";
    sys.mu = mu;
    sys.finalized = false;
    sys.ensure();
    const Vec x0 = pt({0.02, -0.01});
    const Vec p0 = pt({0.0, std::sqrt(2 * E)});
    PhasePoint z0{x0, p0};
    for (int j = 0; j < 2; ++j) z0.xi[j] += mu * sys.A[j].eval(x0);
    const double radius = std::sqrt(2 * E) / mu;
    const Vec center = pt({x0[0] + p0[1] / mu, x0[1] - p0[0] / mu});
    auto s = integrate_trajectory(sys, z0, 2 * M_PI / mu, 1e-10, 2 * M_PI / mu / 257);
    for (const auto& z : s.z)
      worst_rel = std::max(worst_rel, std::abs((z.x - center).norm() - radius) / radius);
    ok = ok && !s.truncated;
  }
  ok = ok && worst_rel < 1e-6;
  line(3, ok, T.secs(),
       fmt("cyclotron radius = sqrt(2E)/(mu f) at mu in {10, 100}: worst rel. dev. %.2e < 1e-6",
           worst_rel));
}

// 4: guiding-center deviation from the drift ODE scales like mu^{-2}
void c4() {
  Timer T;
  auto sys = system_from_json(
      json::parse(R"js({"potential": ["0", "x1 + 0.15*x1^2"], "scalar": "1"})js"));
  auto scan = guiding_center_error_scan(sys, {pt({0.1, 0.05}), pt({0, 1})}, {25, 50, 100, 200},
                                        {10, 20, 40, 80});
  const double secs = T.secs();
  const bool ok = scan.slope > -2.3 && scan.slope < -1.7 && secs < 120.0;
  line(4, ok, secs,
       fmt("guiding-center deviation log-log slope %.3f in -2 +/- 0.3 over mu in "
           "{25, 50, 100, 200}; < 2 min",
           scan.slope));
}

// 5: 4D model exact integrals, and the w-drift halves when mu doubles
void c5() {
  Timer T;
  const Vec y100 = model4d_initial(100.0, 0.6, 0.8, 0.1, 0.5, 0.4, 0.3);
  auto r100 = model4d_invariants(100.0, y100, 10.0, 1e-12);
  const Vec y200 = model4d_initial(200.0, 0.6, 0.8, 0.1, 0.5, 0.4, 0.3);
  auto r200 = model4d_invariants(200.0, y200, 10.0, 1e-12);
  const double ratio = r200.max_dw / r100.max_dw;
  const bool ok = !r100.truncated && !r200.truncated && r100.max_dxi2 <= 1e-9 &&
                  r100.max_dvartheta <= 1e-9 && ratio >= 0.35 && ratio <= 0.65;
  line(5, ok, T.secs(),
       fmt("4D model at mu=100, T=10: max |d xi2| %.1e and max |d vartheta| %.1e <= 1e-9; "
           "w-drift ratio (mu 200/100) %.3f in 0.5 +/- 30%%",
           r100.max_dxi2, r100.max_dvartheta, ratio));
}

// 6: helical magnetic line keeps rho and x2 + rho^2 theta / 2
void c6() {
  Timer T;
  const double rho0 = 0.8;
  auto r = magnetic_line(roussarie4d(), pt({0.0, 0.0, rho0, 0.0}), 10.0, 0.01);
  double theta_prev = 0.0, unwound = 0.0;
  double drho = 0, dinv = 0;
  for (size_t i = 1; i < r.x.size(); ++i) {
    const double rho = std::hypot(r.x[i][2], r.x[i][3]);
    double th = std::atan2(r.x[i][3], r.x[i][2]);
    while (th - theta_prev > M_PI) th -= 2 * M_PI;
    while (th - theta_prev < -M_PI) th += 2 * M_PI;
    unwound += th - theta_prev;
    theta_prev = th;
    drho = std::max(drho, std::abs(rho - rho0));
    dinv = std::max(dinv, std::abs(r.x[i][1] + rho * rho * unwound / 2));
  }
  const bool ok = !r.truncated && drho <= 1e-6 && dinv <= 1e-5;
  line(6, ok, T.secs(),
       fmt("helix over arc 10: max |d rho| %.1e <= 1e-6, max |d(x2 + rho^2 theta/2)| %.1e <= 1e-5",
           drho, dinv));
}

// 7: Sturm counts equal dense-diagonalization counts; quantization within one
void c7() {
  Timer T;
  std::mt19937 rng(777001);
  std::uniform_real_distribution<double> uxi(-1.5, -0.05), uw(0.5, 2.0), utau(0.0, 0.3),
      uh(0.01, 0.05);
  std::uniform_int_distribution<long> un(200, 2000);
  int sturm_ok = 0, bs_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int nu = (trial % 2) ? 3 : 2;
    double xi2 = uxi(rng);
    if (nu == 3) xi2 += 1.0;
    const double W = uw(rng), tau = utau(rng), hbar = uh(rng);
    auto op = AuxOperator1D::with_walls(nu, hbar, xi2, W, tau);
    const long n = un(rng);
    if (detail::sturm_count(op, tau, n) == dense_count_below(dense_spectrum(op, n), tau))
      ++sturm_ok;
    const long fd = fd_eigencount(op, tau).count;
    const long bs = bohr_sommerfeld_eigenvalues(op, tau).count;
    if (std::labs(fd - bs) <= 1) ++bs_ok;
  }
  const bool ok = sturm_ok == 50 && bs_ok == 50;
  line(7, ok, T.secs(),
       fmt("50 random wells: Sturm count == dense count %d/50 (exact, N <= 2000); "
           "quantization count within +/-1 of the grid count %d/50 (hbar <= 0.05)",
           sturm_ok, bs_ok));
}

// 8: planar density == staircase closed form; d=3 against a brute level sum
void c8() {
  Timer T;
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double f = 0.2 + 2.8 * U(rng), V = 2.0 * U(rng), tau = 2.0 * U(rng);
    const double mu = 1.0 + 49.0 * U(rng), h = 0.01 + 0.5 * U(rng), g = 0.5 + 1.5 * U(rng);
    if (magnetic_weyl_density({2, 1, {f}, V, tau, mu, h, g}).value ==
        landau_density_2d(f, V, g, mu, h, tau))
      ++exact;
  }
  double worst3 = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const double f = 0.2 + 2.8 * U(rng), V = 2.0 * U(rng), tau = 2.0 * U(rng);
    const double mu = 1.0 + 9.0 * U(rng), h = 0.05 + 0.3 * U(rng), g = 0.5 + 1.5 * U(rng);
    double brute = 0;
    for (long a = 0; a < 4000; ++a) {
      const double arg = 2 * tau + V - (2 * a + 1) * f * mu * h;
      if (arg > 0) brute += std::sqrt(arg);
    }
    brute *= 2.0 / (4 * M_PI * M_PI) * mu / (h * h) * f * std::sqrt(g);
    const double got = magnetic_weyl_density({3, 1, {f}, V, tau, mu, h, g}).value;
    if (brute != 0) worst3 = std::max(worst3, std::abs(got - brute) / std::abs(brute));
  }
  const bool ok = exact == 100 && worst3 <= 1e-12;
  line(8, ok, T.secs(),
       fmt("planar density == closed form at %d/100 random points (bitwise); "
           "d=3 vs. brute level sum worst rel. dev. %.1e <= 1e-12",
           exact, worst3));
}

// 9: oscillation profile: periodic, zero mean, nontrivial, Hoelder-1/2 bounded
void c9() {
  Timer T;
  std::mt19937 rng(9090);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> shift(-3, 3);
  double dper = 0;
  for (int i = 0; i < 50; ++i) {
    const double t = U(rng);
    dper = std::max(dper, std::abs(g_kernel(t + shift(rng)) - g_kernel(t)));
  }
  double mean = 0, peak = 0;
  const int N = 512;
  for (int i = 0; i < N; ++i) {
    const double v = g_kernel((i + 0.5) / N);
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  mean /= N;
  double quot = 0;
  for (int i = 0; i < 200; ++i) {
    const double t = U(rng);
    const double d = std::pow(10.0, -4.0 + 3.0 * U(rng));
    quot = std::max(quot, std::abs(g_kernel(t + d) - g_kernel(t)) / std::sqrt(d));
  }
  const bool ok = dper <= 1e-6 && std::abs(mean) <= 1e-4 && peak > 0.01 && quot < 4.0;
  line(9, ok, T.secs(),
       fmt("oscillation profile: periodicity dev %.1e <= 1e-6, |mean| %.1e <= 1e-4, "
           "peak %.3f > 0.01, sampled C^{1/2} quotient %.2f < 4",
           dper, std::abs(mean), peak, quot));
}

// 10: correction amplitude scales like hbar^{1/2}; unit period in the action
void c10() {
  Timer T;
  const double hbars[] = {0.05, 0.025, 0.0125};
  double la[3], lh[3], freq[3];
  CorrectionFit finest{};
  for (int i = 0; i < 3; ++i) {
    const auto fit = fit_correction(2, hbars[i]);
    la[i] = std::log(fit.raw_amplitude);
    lh[i] = std::log(hbars[i]);
    freq[i] = fit.frequency;
    if (i == 2) finest = fit;
  }
  // least-squares slope of log-amplitude against log-hbar
  double sh = 0, sa = 0, shh = 0, sha = 0;
  for (int i = 0; i < 3; ++i) sh += lh[i], sa += la[i], shh += lh[i] * lh[i], sha += lh[i] * la[i];
  const double p = (3 * sha - sh * sa) / (3 * shh - sh * sh);
  bool freq_ok = true;
  for (double f : freq) freq_ok = freq_ok && f >= 0.95 && f <= 1.05;
  const double secs = T.secs();
  const bool ok = p >= 0.35 && p <= 0.65 && freq_ok && secs < 600.0;
  line(10, ok, secs,
       fmt("correction amplitude ~ hbar^p with p = %.3f in 0.5 +/- 0.15 over hbar in "
           "{0.05, 0.025, 0.0125}; action-variable period in [0.95, 1.05] (got %.3f, %.3f, %.3f); "
           "< 10 min",
           p, freq[0], freq[1], freq[2]));
  note(fmt("finest sweep: fitted S0 / classical action = %.5f (the 1%% agreement is observed, "
           "not asserted)",
           finest.S0 / finest.classical_S0));
  note(fmt("finest sweep: residual rms / fitted amplitude = %.2f; the sub-0.1 regime is not "
           "reached at these hbar",
           finest.rms / finest.amplitude));
}

}  // namespace

int main() {
  Timer total;
  c1();
  c2();
  c3();
  c4();
  c5();
  c6();
  c7();
  c8();
  c9();
  c10();
  std::printf("acceptance: %d/10 passed  (%.1fs total)\n", 10 - g_failures, total.secs());
  return g_failures;
}

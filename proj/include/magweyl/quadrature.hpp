#pragma once

// Gauss-Legendre rules plus the two integration patterns this project leans
// on: endpoint square-root singularities handled by the x = c + a sin(theta)
// substitution, and a plain adaptive Simpson used as an independent check.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "magweyl/types.hpp"

namespace magweyl {

struct GaussRule {
  std::vector<double> node;    // on (-1, 1)
  std::vector<double> weight;
};

// Newton iteration on Legendre P_n; nodes to full double precision.
inline GaussRule make_gauss_rule(int n) {
  GaussRule r;
  r.node.resize(n);
  r.weight.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi-style initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    p0 = 1;
    p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1);
    r.node[i] = -x;
    r.node[n - 1 - i] = x;
    r.weight[i] = r.weight[n - 1 - i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  return r;
}

inline const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

template <class F>
double gauss_integrate(F&& f, double a, double b, int n) {
  const GaussRule& r = gauss_rule(n);
  const double c = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < n; ++i) s += r.weight[i] * f(c + half * r.node[i]);
  return s * half;
}

// integrand with inverse-square-root endpoint behaviour on (lo, hi):
// substitute x = c + a sin(theta); the Jacobian a cos(theta) cancels the
// singularity when the vanishing factor under the sqrt is simple at both ends.
// Doubles the rule size until successive values agree to rel_tol; throws
// `resolution` (carrying the last value) if the cap is hit without settling.
template <class F>
double sqrt_well_integrate(F&& f, double lo, double hi, double rel_tol = 1e-9,
                           double abs_tol = 0, int n0 = 256, int n_cap = 8192) {
  const double c = 0.5 * (hi + lo), a = 0.5 * (hi - lo);
  auto eval = [&](int n) {
    const GaussRule& r = gauss_rule(n);
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double th = 0.5 * M_PI * r.node[i];
      const double x = c + a * std::sin(th);
      s += r.weight[i] * f(x) * a * std::cos(th);
    }
    return s * 0.5 * M_PI;
  };
  double prev = eval(n0);
  for (int n = 2 * n0; n <= n_cap; n *= 2) {
    const double cur = eval(n);
    const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
    if (std::abs(cur - prev) <= std::max(rel_tol * scale, abs_tol)) return cur;
    prev = cur;
  }
  throw Error(ErrorKind::resolution, "well integral did not settle under doubling", prev);
}

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0) return left + right;
  if (std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson_rec(f, a, lm, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_rec(f, m, rm, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace magweyl

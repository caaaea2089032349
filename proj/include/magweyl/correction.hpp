#pragma once

// Spectral correction for the degenerate strip. The operator reduces on the
// strip to a family of 1D wells indexed by the conserved momentum xi2; the
// correction is the mismatch between the exact quantization count of that
// family and the Landau-strip density it replaces:
//
//   correction = (2 pi h)^{-1} ( \int n0(xi2) dxi2  -  \int strip density dx1 )
//
// Both integrals are evaluated branch-exactly: each quantization level
// contributes the measure of the xi2-interval (resp. x1-interval) where it is
// occupied, so no staircase is ever pushed through a quadrature rule. The
// oscillating part of the mismatch is carried by the sawtooth kernel G below.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "magweyl/dynamics.hpp"
#include "magweyl/quadrature.hpp"
#include "magweyl/types.hpp"
#include "magweyl/weyl.hpp"

namespace magweyl {

// ---------------------------------------------------------------------------
// sawtooth kernel  G(t) = int_R saw(t + eta^2/2) d eta,  saw(z) = z - round(z)
// ---------------------------------------------------------------------------

namespace detail {

inline double saw(double z) { return z - std::floor(z + 0.5); }

// binomial(-1/2, j)
inline double binom_half(int j) {
  double r = 1;
  for (int i = 0; i < j; ++i) r *= (-0.5 - i) / (i + 1);
  return r;
}

// sum_{k >= u0} (k + 1/2)^{-s} by Euler-Maclaurin; u0 integer, s > 1
inline double hurwitz_half_tail(double s, double u0) {
  const double a = u0 + 0.5;
  const double head = std::pow(a, 1 - s) / (s - 1);
  const double f0 = std::pow(a, -s);
  const double f1 = -s * std::pow(a, -s - 1);
  const double f3 = -s * (s + 1) * (s + 2) * std::pow(a, -s - 3);
  return head + 0.5 * f0 - f1 / 12.0 + f3 / 720.0;
}

template <class F>
double gl24(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return gauss_integrate(f, a, b, 24);
}

}  // namespace detail

struct GKernelParams {
  int cutoff = 40;      // head/tail split in the integrated variable u = eta^2/2
  int tail_terms = 10;  // Taylor order of the period-summed tail
};

// Evaluated after reducing t mod 1, so g_kernel(t + 1) == g_kernel(t) exactly.
// Head: u = w^2 removes the endpoint singularity; panels split at the sawtooth
// jumps u = m + 1/2 - t and subdivided to unit w-length. Tail: each unit
// period contributes moments of (v - 1/2)^j against a Hurwitz-type sum.
inline double g_kernel(double t, const GKernelParams& gp = {}) {
  if (gp.cutoff < 10 || gp.tail_terms < 4)
    throw Error(ErrorKind::resolution, "sawtooth kernel cutoff too small for the target accuracy");
  t -= std::floor(t);       // the only use of t below is through saw(t + .)
  if (t >= 1.0) t = 0.0;    // x - floor(x) can round up to 1 for tiny x < 0

  const double U = gp.cutoff;
  auto g = [&](double w) { return 2.0 * detail::saw(t + w * w); };

  // panel edges: 0, the sawtooth jumps u = m + 1/2 - t inside (0, U), then U
  std::vector<double> pts{0.0};
  for (long m = 0;; ++m) {
    const double uj = static_cast<double>(m) + 0.5 - t;
    if (uj >= U) break;
    if (uj > 0) pts.push_back(uj);
  }
  pts.push_back(U);

  double head = 0;
  for (size_t p = 0; p + 1 < pts.size(); ++p) {
    const double wa = std::sqrt(pts[p]), wb = std::sqrt(pts[p + 1]);
    const int nsub = std::max(1, static_cast<int>(std::ceil(wb - wa)));
    for (int i = 0; i < nsub; ++i)
      head += detail::gl24(g, wa + (wb - wa) * i / nsub, wa + (wb - wa) * (i + 1) / nsub);
  }

  double tail = 0;
  double last_term = 0;
  double vstar = 0.5 - t;  // jump of saw(t + v) inside the unit period
  if (vstar < 0) vstar += 1.0;
  for (int j = 1; j <= gp.tail_terms; ++j) {
    auto mj = [&](double v) { return detail::saw(t + v) * std::pow(v - 0.5, j); };
    const double M = detail::gl24(mj, 0.0, vstar) + detail::gl24(mj, vstar, 1.0);
    last_term = M * detail::binom_half(j) * detail::hurwitz_half_tail(j + 0.5, U);
    tail += last_term;
  }
  if (std::abs(last_term) > 1e-6)
    throw Error(ErrorKind::resolution, "sawtooth kernel tail did not decay; raise the cutoff",
                std::abs(last_term));
  return std::sqrt(2.0) * (head + tail);
}

// ---------------------------------------------------------------------------
// well action of the reduced 1D well
// ---------------------------------------------------------------------------

namespace detail {

// S = 2 int sqrt(cV)+ dx over [lo, hi]; fixed-size rule for bisection loops
// (the integrand is smooth after the sine substitution, so 512 nodes sit far
// below the bisection's own placement error).
inline double action_fixed(const EffectiveModel& m, double lo, double hi, int n = 512) {
  if (!(hi > lo)) return 0.0;
  const GaussRule& r = gauss_rule(n);
  const double c = 0.5 * (hi + lo), a = 0.5 * (hi - lo);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double th = 0.5 * M_PI * r.node[i];
    const double x = c + a * std::sin(th);
    const double cv = std::max(effective_potential(m, x), 0.0);
    s += r.weight[i] * std::sqrt(cv) * a * std::cos(th);
  }
  return s * M_PI;  // (pi/2 Jacobian) x (leading 2)
}

}  // namespace detail

// Certified action over the selected well (doubling ladder).
inline double well_action(const EffectiveModel& m, bool left_well = false) {
  const TurningPoints tp = turning_points(m, left_well);
  if (!(tp.hi > tp.lo)) return 0.0;
  auto f = [&](double x) { return std::sqrt(std::max(effective_potential(m, x), 0.0)); };
  return 2 * sqrt_well_integrate(f, tp.lo, tp.hi, 1e-11, 1e-13);
}

// Zero-energy action at the stationary momentum k*, W = 1: the scale S0 that
// sets the oscillation frequency of the correction.
inline double classical_action_scale(int nu) {
  const double kst = find_kstar(nu, 1.0).k;
  return well_action({nu, kst, 1.0});
}

// ---------------------------------------------------------------------------
// branch-exact level integrals over the strip
// ---------------------------------------------------------------------------

struct StripCount {
  double value = 0;    // integral of n0 over xi2
  double xi2_min = 0;  // support certificate: n0 == 0 outside [xi2_min, xi2_max]
  double xi2_max = 0;
  long levels = 0;     // quantization levels that contributed
};

namespace detail {

// increasing branch: locate f(x) == target within [a, b]
template <class F>
double bisect_up(F&& f, double a, double b, double target) {
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    (f(m) < target ? a : b) = m;
  }
  return 0.5 * (a + b);
}
template <class F>
double bisect_down(F&& f, double a, double b, double target) {
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    (f(m) > target ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Integral of the quantization count n0(xi2) of the reduced well family,
// computed level by level: each level n contributes the measure of
// { xi2 : S(xi2) > 2 pi hbar (n + 1/2) }, with multiplicity two where the
// well is split (even nu beyond the merge point) so both parities count.
inline StripCount n0_strip_integral(int nu, double Wt, double hbar) {
  if (nu < 2) throw Error(ErrorKind::domain, "model exponent nu must be >= 2");
  if (!(Wt > 0)) throw Error(ErrorKind::domain, "well height must be positive");
  if (!(hbar > 0) || !(hbar < 1))
    throw Error(ErrorKind::domain, "effective Planck parameter must sit in (0, 1)");

  const double tp2 = 2 * M_PI * hbar;
  StripCount out;

  auto action_at = [&](double k) {
    const EffectiveModel m{nu, k, Wt};
    const TurningPoints tp = turning_points(m);
    return detail::action_fixed(m, tp.lo, tp.hi);
  };

  if (nu % 2 == 0) {
    const double sW = std::sqrt(Wt);
    const double kst = find_kstar(nu, Wt).k;
    const double s_max = well_action({nu, kst, Wt});
    // at k = sW the census degenerates to the right half; the full merged
    // action is twice that by symmetry of the even well
    const double s_boundary = 2 * action_at(sW);
    const double s_right_boundary = 0.5 * s_boundary;

    for (long n = 0;; ++n) {
      const double sn = tp2 * (n + 0.5);
      if (!(sn < s_max)) break;
      const double lo = detail::bisect_up(action_at, -sW, kst, sn);
      const double hi = s_boundary > sn ? sW : detail::bisect_down(action_at, kst, sW, sn);
      out.value += hi - lo;
      ++out.levels;
      if (n == 0) out.xi2_min = lo, out.xi2_max = hi;
    }
    for (long n = 0;; ++n) {
      const double sn = tp2 * (n + 0.5);
      if (!(sn < s_right_boundary)) break;
      double b = 2 * sW;
      while (action_at(b) > sn) b *= 1.7;
      const double hi = detail::bisect_down(action_at, sW, b, sn);
      out.value += 2 * (hi - sW);  // split well: both parities occupy the level
      ++out.levels;
      if (n == 0) out.xi2_max = hi;
    }
  } else {
    const double s_max = well_action({nu, 0.0, Wt});
    for (long n = 0;; ++n) {
      const double sn = tp2 * (n + 0.5);
      if (!(sn < s_max)) break;
      double b = 1.0;
      while (action_at(b) > sn) b *= 1.7;
      const double hi = detail::bisect_down(action_at, 0.0, b, sn);
      out.value += 2 * hi;  // S is even in xi2 for the odd-exponent well
      ++out.levels;
      if (n == 0) out.xi2_min = -hi, out.xi2_max = hi;
    }
  }
  return out;
}

// Pointwise count n0(xi2): same level convention as the strip integral.
inline long n0_of_xi2(int nu, double Wt, double hbar, double xi2) {
  if (!(Wt > 0) || !(hbar > 0)) throw Error(ErrorKind::domain, "need Wt > 0 and hbar > 0");
  const EffectiveModel m{nu, xi2, Wt};
  if (nu % 2 == 0 && xi2 <= -std::sqrt(Wt)) return 0;
  const TurningPoints tp = turning_points(m);
  if (!(tp.hi > tp.lo)) return 0;
  const double S = detail::action_fixed(m, tp.lo, tp.hi);
  const long mult = tp.census == WellCensus::two_wells ? 2 : 1;
  return mult * detail::count_below(S, M_PI * hbar);
}

// ---------------------------------------------------------------------------
// Landau-strip integral (the density the count is measured against)
// ---------------------------------------------------------------------------

inline double zeta_series(double s) {
  if (!(s > 1)) throw Error(ErrorKind::domain, "zeta series needs s > 1");
  const int M = 20000;
  double sum = 0;
  for (int k = M - 1; k >= 1; --k) sum += std::pow(k, -s);
  const double a = M;
  return sum + std::pow(a, 1 - s) / (s - 1) + 0.5 * std::pow(a, -s) +
         s * std::pow(a, -s - 1) / 12.0 - s * (s + 1) * (s + 2) * std::pow(a, -s - 3) / 720.0;
}

struct LandauStrip {
  double value = 0;        // level-sum route
  double closed_form = 0;  // (2/nu) (Wt/hbar)^s (1 - 2^{-s}) zeta(s)
  double smooth_part = 0;  // midpoint-smoothed count over its support: (Wt/hbar)^s
};

// Integral over the strip of |x1|^{nu-1} N(x1), N the Landau count with
// thresholds (2n+1) hbar |x1|^{nu-1}: level n occupies |x1| < y_n and
// contributes the exact measure 2 y_n^nu / nu.
inline LandauStrip landau_strip_integral(int nu, double Wt, double hbar) {
  if (nu < 2 || !(Wt > 0) || !(hbar > 0))
    throw Error(ErrorKind::domain, "landau strip: need nu >= 2, Wt > 0, hbar > 0");
  const double s = static_cast<double>(nu) / (nu - 1);
  const double scale = (2.0 / nu) * std::pow(Wt / hbar, s);

  LandauStrip out;
  const int head = 64;
  double sum = 0;
  for (int n = head - 1; n >= 0; --n) sum += std::pow(2.0 * n + 1.0, -s);
  // remaining levels: sum_{n >= head} (2n+1)^{-s} = 2^{-s} sum_{k >= head} (k+1/2)^{-s}
  sum += std::pow(2.0, -s) * detail::hurwitz_half_tail(s, head);
  out.value = scale * sum;
  out.closed_form = scale * (1 - std::pow(2.0, -s)) * zeta_series(s);
  out.smooth_part = std::pow(Wt / hbar, s);
  return out;
}

// ---------------------------------------------------------------------------
// the correction term itself
// ---------------------------------------------------------------------------

struct CorrectionTerm {
  double value = 0;             // (n0 integral - strip integral) / (2 pi h)
  double n0_integral = 0;
  double strip_integral = 0;    // level-sum route (used in the subtraction)
  double strip_closed_form = 0; // zeta route, cross-check
  double xi2_min = 0, xi2_max = 0;
  long levels = 0;
};

inline CorrectionTerm correction_term(int nu, double W, double hbar, double h, double tau = 0) {
  if (!(h > 0) || !(h < 1)) throw Error(ErrorKind::domain, "semiclassical h must sit in (0, 1)");
  const double Wt = W + 2 * tau;
  if (!(Wt > 0)) throw Error(ErrorKind::domain, "counted range is empty: W + 2 tau <= 0");

  const StripCount a = n0_strip_integral(nu, Wt, hbar);
  const LandauStrip b = landau_strip_integral(nu, Wt, hbar);
  CorrectionTerm out;
  out.n0_integral = a.value;
  out.strip_integral = b.value;
  out.strip_closed_form = b.closed_form;
  out.xi2_min = a.xi2_min;
  out.xi2_max = a.xi2_max;
  out.levels = a.levels;
  out.value = (a.value - b.value) / (2 * M_PI * h);
  return out;
}

// Self-consistency of the subtraction: replace the count n0 by its smooth
// part S(xi2)/(2 pi hbar) integrated over the support window, and the strip
// staircase by its midpoint smoothing over its own support. Both describe the
// same truncated phase volume (the support edges S_right = pi hbar and
// hbar |x1|^{nu-1} = Wt coincide), so the residual vanishes up to quadrature.
inline double correction_smooth_residual(int nu, double W, double hbar, double h, double tau = 0) {
  if (!(h > 0) || !(h < 1)) throw Error(ErrorKind::domain, "semiclassical h must sit in (0, 1)");
  const double Wt = W + 2 * tau;
  if (!(Wt > 0)) throw Error(ErrorKind::domain, "counted range is empty: W + 2 tau <= 0");
  const double tp2 = 2 * M_PI * hbar;
  const double edge = M_PI * hbar;  // smallest quantization level
  const double smooth_strip = landau_strip_integral(nu, Wt, hbar).smooth_part;
  const double area_tol = 1e-10 * tp2 * smooth_strip;

  auto action_at = [&](double k) {
    const EffectiveModel m{nu, k, Wt};
    const TurningPoints tp = turning_points(m);
    return detail::action_fixed(m, tp.lo, tp.hi);
  };

  double area = 0;  // integral of the smooth count over the support window
  if (nu % 2 == 0) {
    const double sW = std::sqrt(Wt);
    const double kst = find_kstar(nu, Wt).k;
    const double lo = detail::bisect_up(action_at, -sW, kst, edge);
    // stop a hair short of the merge point: the evaluator switches to the
    // half well exactly there
    area += adaptive_simpson(action_at, lo, sW * (1 - 1e-12), area_tol);
    double b = 2 * sW;
    while (action_at(b) > edge) b *= 1.7;
    const double hi = detail::bisect_down(action_at, sW, b, edge);
    // split well carries multiplicity two; sigma = sqrt(xi2) tames the tail
    auto tail = [&](double sig) { return 2 * action_at(sig * sig) * 2 * sig; };
    area += adaptive_simpson(tail, std::sqrt(sW * (1 + 1e-12)), std::sqrt(hi), area_tol);
  } else {
    double b = 1.0;
    while (action_at(b) > edge) b *= 1.7;
    const double hi = detail::bisect_down(action_at, 0.0, b, edge);
    const double split = std::min(hi, std::max(1.0, 2 * std::sqrt(Wt)));
    area += 2 * adaptive_simpson(action_at, 0.0, split, area_tol);
    if (hi > split) {
      auto tail = [&](double sig) { return action_at(sig * sig) * 2 * sig; };
      area += 2 * adaptive_simpson(tail, std::sqrt(split), std::sqrt(hi), area_tol);
    }
  }
  const double smooth_n0 = area / tp2;
  return (smooth_n0 - smooth_strip) / (2 * M_PI * h);
}

// Closed-form oscillation of the correction: kappa h^{-1} hbar^{1/2}
// W^{1/4 - 1/(4 nu)} G(S0 W^{1/2 + 1/(2 nu)} / (2 pi hbar)).
inline double closed_form_correction(int nu, double W, double hbar, double h, double kappa,
                                     double S0, const GKernelParams& gp = {}) {
  if (nu < 2 || !(W > 0) || !(hbar > 0) || !(h > 0))
    throw Error(ErrorKind::domain, "closed-form correction: bad parameters");
  const double amp_exp = 0.25 - 0.25 / nu;
  const double act_exp = 0.5 + 0.5 / nu;
  const double arg = S0 * std::pow(W, act_exp) / (2 * M_PI * hbar);
  return kappa / h * std::sqrt(hbar) * std::pow(W, amp_exp) * g_kernel(arg, gp);
}

// 4D strip: one 2D correction per transverse Landau level, truncated when the
// effective well empties.
inline std::vector<CorrectionTerm> correction_terms_4d(int nu, double V, double hbar, double h,
                                                       double mu, double f2, double tau = 0) {
  if (!(mu > 0) || !(f2 > 0)) throw Error(ErrorKind::domain, "need mu > 0 and f2 > 0");
  std::vector<CorrectionTerm> out;
  for (long beta = 0;; ++beta) {
    const double Wb = V - (2 * beta + 1) * mu * h * f2;
    if (!(Wb + 2 * tau > 0)) break;
    out.push_back(correction_term(nu, Wb, hbar, h, tau));
  }
  return out;
}

// ---------------------------------------------------------------------------
// eigenvalue counting for one reduced well (fixed xi2)
// ---------------------------------------------------------------------------

// 0.5 (hbar^2 D^2 + (xi2 - x^nu/nu)^2 - W) on [-L, L] with Dirichlet walls.
struct AuxOperator1D {
  int nu = 2;
  double hbar = 0.02;
  double xi2 = 0;
  double W = 1;
  double L = 0;

  double potential(double x) const {
    const double u = detail::ipow(x, nu) / nu;
    return 0.5 * ((xi2 - u) * (xi2 - u) - W);
  }
  double potential_floor() const {
    // the lowest reachable value of the potential
    if (nu % 2 == 0 && xi2 < 0) return 0.5 * (xi2 * xi2 - W);
    return -0.5 * W;
  }

  // wall placement with a forbidden margin: potential(+-L) >= tau_max + 1
  static AuxOperator1D with_walls(int nu, double hbar, double xi2, double W, double tau_max) {
    if (nu < 2 || !(hbar > 0) || !(W > 0))
      throw Error(ErrorKind::domain, "reduced well: need nu >= 2, hbar > 0, W > 0");
    const double reach = std::abs(xi2) + std::sqrt(std::max(W + 2 * tau_max, 0.0) + 2.0);
    AuxOperator1D op;
    op.nu = nu;
    op.hbar = hbar;
    op.xi2 = xi2;
    op.W = W;
    op.L = std::pow(nu * (reach + 0.5), 1.0 / nu);
    return op;
  }
};

namespace detail {

// Sturm pivot count of eigenvalues strictly below tau for the three-point
// Dirichlet discretization with n interior points.
template <class Potential>
long sturm_count(double L, double hbar, const Potential& pot, double tau, long n) {
  const double dx = 2 * L / (n + 1);
  const double off = -0.5 * hbar * hbar / (dx * dx);
  const double diag0 = hbar * hbar / (dx * dx);
  long below = 0;
  double q = 1;
  for (long i = 1; i <= n; ++i) {
    const double x = -L + i * dx;
    const double d = diag0 + pot(x) - tau;
    q = (i == 1) ? d : d - off * off / q;
    if (q == 0) q = std::numeric_limits<double>::min();  // graze resolves upward
    if (q < 0) ++below;
  }
  return below;
}

inline long sturm_count(const AuxOperator1D& op, double tau, long n) {
  return sturm_count(op.L, op.hbar, [&op](double x) { return op.potential(x); }, tau, n);
}

}  // namespace detail

struct EigenCount {
  long count = 0;
  double tau = 0;
  long grid_points = 0;  // interior points of the accepted grid
  bool grazing = false;  // an eigenvalue sits within 1e-9 of the threshold
};

// Grid-doubling count for any confining potential on [-L, L]: accepted once two
// successive grids agree; a count that never stabilizes is reported with both
// disagreeing values.
template <class Potential>
EigenCount fd_eigencount(double L, double hbar, const Potential& pot, double tau,
                         long n0 = 400, long n_cap = 60000) {
  if (!(hbar > 0) || !(L > 0))
    throw Error(ErrorKind::domain, "grid count: need hbar > 0, L > 0");
  if (!(pot(L) >= tau + 1) || !(pot(-L) >= tau + 1))
    throw Error(ErrorKind::domain, "Dirichlet walls sit inside the counted range; enlarge L");

  long n = std::max<long>(n0, 50);
  if (2 * n > n_cap) throw Error(ErrorKind::domain, "grid cap below the starting grid");
  long coarse = detail::sturm_count(L, hbar, pot, tau, n);
  for (;;) {
    const long fine = detail::sturm_count(L, hbar, pot, tau, 2 * n);
    if (fine == coarse) {
      EigenCount out;
      out.count = fine;
      out.tau = tau;
      out.grid_points = 2 * n;
      out.grazing = detail::sturm_count(L, hbar, pot, tau + 1e-9, 2 * n) !=
                    detail::sturm_count(L, hbar, pot, tau - 1e-9, 2 * n);
      return out;
    }
    if (4 * n > n_cap)
      throw Error(ErrorKind::resolution, "eigenvalue count kept changing under grid refinement",
                  coarse, fine);
    coarse = fine;
    n *= 2;
  }
}

inline EigenCount fd_eigencount(const AuxOperator1D& op, double tau, long n0 = 400,
                                long n_cap = 60000) {
  if (op.nu < 2 || !(op.hbar > 0) || !(op.W > 0) || !(op.L > 0))
    throw Error(ErrorKind::domain, "reduced well: need nu >= 2, hbar > 0, W > 0, L > 0");
  return fd_eigencount(
      op.L, op.hbar, [&op](double x) { return op.potential(x); }, tau, n0, n_cap);
}

struct BohrSommerfeld {
  std::vector<double> energies;  // ascending, all strictly below tau
  long count = 0;
  double action_at_tau = 0;      // certificate: the action window actually used
};

// Quantized energies from S(E) = 2 pi hbar (n + 1/2), S the well action at
// Wt = W + 2E. Valid for a single classically connected well; the split even
// configuration (xi2 > 0) hides a barrier inside the counted range and is
// refused.
inline BohrSommerfeld bohr_sommerfeld_eigenvalues(const AuxOperator1D& op, double tau) {
  if (op.nu < 2 || !(op.hbar > 0) || !(op.W > 0))
    throw Error(ErrorKind::domain, "reduced well: need nu >= 2, hbar > 0, W > 0");
  const double floor = op.potential_floor();
  BohrSommerfeld out;
  if (!(tau > floor)) return out;  // nothing below the well bottom
  if (op.nu % 2 == 0 && op.xi2 > 0)
    throw Error(ErrorKind::multi_well,
                "well is split by an interior barrier; use the grid count instead");

  auto action_of = [&](double e) { return well_action({op.nu, op.xi2, op.W + 2 * e}); };
  out.action_at_tau = action_of(tau);
  out.count = detail::count_below(out.action_at_tau, M_PI * op.hbar);
  out.energies.reserve(out.count);
  for (long n = 0; n < out.count; ++n) {
    const double target = 2 * M_PI * op.hbar * (n + 0.5);
    double a = floor, b = tau;
    for (int i = 0; i < 60; ++i) {
      const double m = 0.5 * (a + b);
      (action_of(m) < target ? a : b) = m;
    }
    out.energies.push_back(0.5 * (a + b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// sweep-and-fit against the closed form
// ---------------------------------------------------------------------------

struct CorrectionFit {
  double kappa = 0, S0 = 0, offset = 0;
  double rms = 0;         // residual of the best fit
  double amplitude = 0;   // half peak-to-peak of the fitted oscillation
  double raw_amplitude = 0;  // sqrt(2) x std of the detrended sweep
  double frequency = 0;   // dominant frequency in the action variable
  double mean_delta = 0;  // mean of the sweep before detrending
  double classical_S0 = 0;
  std::vector<double> W;      // sweep grid
  std::vector<double> delta;  // n0 integral minus strip integral at each W
};

namespace detail {

// least squares for y ~ c0 * b + c1 (two-parameter, closed form)
struct LineFit {
  double c0 = 0, c1 = 0, rms = 0;
};
inline LineFit fit_scaled_offset(const std::vector<double>& b, const std::vector<double>& y) {
  const size_t n = b.size();
  double sb = 0, sy = 0, sbb = 0, sby = 0;
  for (size_t i = 0; i < n; ++i) sb += b[i], sy += y[i], sbb += b[i] * b[i], sby += b[i] * y[i];
  const double det = n * sbb - sb * sb;
  LineFit f;
  if (det == 0) return f;
  f.c0 = (n * sby - sb * sy) / det;
  f.c1 = (sy * sbb - sb * sby) / det;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.c0 * b[i] - f.c1;
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

// quadratic detrend in the phase variable; returns the residual
inline std::vector<double> detrend_quadratic(const std::vector<double>& x,
                                             const std::vector<double>& y) {
  const size_t n = x.size();
  double m[3][4] = {};
  for (size_t i = 0; i < n; ++i) {
    const double p[3] = {1.0, x[i], x[i] * x[i]};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += p[r] * p[c];
      m[r][3] += p[r] * y[i];
    }
  }
  for (int col = 0; col < 3; ++col) {  // tiny Gaussian elimination, partial pivot
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    for (int c = 0; c < 4; ++c) std::swap(m[col][c], m[piv][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == col || m[col][col] == 0) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = 0; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  const double a0 = m[0][3] / m[0][0], a1 = m[1][3] / m[1][1], a2 = m[2][3] / m[2][2];
  std::vector<double> res(n);
  for (size_t i = 0; i < n; ++i) res[i] = y[i] - (a0 + a1 * x[i] + a2 * x[i] * x[i]);
  return res;
}

}  // namespace detail

// Sweep W over the requested number of oscillation periods, compute the
// branch-exact mismatch at each sample, and fit kappa and S0 of the closed
// form (S0 scanned around the classical action scale, kappa by least squares
// with a free offset absorbing the smooth remainder).
inline CorrectionFit fit_correction(int nu, double hbar, int samples = 121,
                                    double periods = 4.0) {
  if (samples < 16) throw Error(ErrorKind::domain, "fit needs at least 16 sweep samples");
  if (!(periods > 0.5)) throw Error(ErrorKind::domain, "fit needs at least half a period");

  CorrectionFit fit;
  fit.classical_S0 = classical_action_scale(nu);
  const double act_exp = 0.5 + 0.5 / nu;
  const double amp_exp = 0.25 - 0.25 / nu;
  const double a0 = fit.classical_S0 / (2 * M_PI * hbar);
  const double w1 = std::pow((a0 + periods) / a0, 1.0 / act_exp);

  fit.W.resize(samples);
  fit.delta.resize(samples);
  std::vector<double> phase(samples);
  for (int i = 0; i < samples; ++i) {
    const double w = 1.0 + (w1 - 1.0) * i / (samples - 1);
    fit.W[i] = w;
    fit.delta[i] = n0_strip_integral(nu, w, hbar).value -
                   landau_strip_integral(nu, w, hbar).value;
    phase[i] = fit.classical_S0 * std::pow(w, act_exp) / (2 * M_PI * hbar);
    fit.mean_delta += fit.delta[i];
  }
  fit.mean_delta /= samples;

  // amplitude and dominant frequency of the detrended sweep
  const std::vector<double> resid = detail::detrend_quadratic(phase, fit.delta);
  double ss = 0;
  for (double r : resid) ss += r * r;
  fit.raw_amplitude = std::sqrt(2.0 * ss / samples);
  double best_pow = -1;
  for (int fi = 0; fi <= 2200; ++fi) {
    const double f = 0.3 + fi * 0.001;
    double re = 0, im = 0;
    for (int i = 0; i < samples; ++i) {
      const double ang = 2 * M_PI * f * (phase[i] - phase[0]);
      re += resid[i] * std::cos(ang);
      im -= resid[i] * std::sin(ang);
    }
    const double p = re * re + im * im;
    if (p > best_pow) best_pow = p, fit.frequency = f;
  }

  // scan S0, least squares for kappa and offset at each candidate
  std::vector<double> basis(samples);
  double best_rms = std::numeric_limits<double>::infinity();
  for (int si = 0; si < 241; ++si) {
    const double s0 = fit.classical_S0 * (0.97 + 0.06 * si / 240.0);
    for (int i = 0; i < samples; ++i) {
      const double arg = s0 * std::pow(fit.W[i], act_exp) / (2 * M_PI * hbar);
      basis[i] = 2 * M_PI * std::sqrt(hbar) * std::pow(fit.W[i], amp_exp) * g_kernel(arg);
    }
    const detail::LineFit lf = detail::fit_scaled_offset(basis, fit.delta);
    if (lf.rms < best_rms) {
      best_rms = lf.rms;
      fit.S0 = s0;
      fit.kappa = lf.c0;
      fit.offset = lf.c1;
    }
  }
  fit.rms = best_rms;

  // amplitude of the fitted oscillation (half peak-to-peak)
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < samples; ++i) {
    const double arg = fit.S0 * std::pow(fit.W[i], act_exp) / (2 * M_PI * hbar);
    const double osc =
        2 * M_PI * fit.kappa * std::sqrt(hbar) * std::pow(fit.W[i], amp_exp) * g_kernel(arg);
    lo = std::min(lo, osc);
    hi = std::max(hi, osc);
  }
  fit.amplitude = 0.5 * (hi - lo);
  return fit;
}

}  // namespace magweyl

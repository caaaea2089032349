#pragma once

// Pointwise magnetic Weyl density: the Landau-lattice sum
//   Omega_{d-2r} (2pi)^{r-d} mu^r h^{r-d} sum_alpha (2E + V - sum_j (2a_j+1) f_j mu h)_+^{d/2-r}
//   * f_1...f_r sqrt(g)
// together with the 2D Landau staircase, its jump thresholds, and integration
// of the density against a cutoff on a box with refinement at the level jumps.
//
// Note the plus-part argument: the trailing potential term enters once, as
// 2E + V. A reading with a second "- V" tail would contradict the d = 2r
// staircase this sum must reduce to, so it is not implemented.

#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "magweyl/field_geometry.hpp"
#include "magweyl/quadrature.hpp"

namespace magweyl {

// volume of the unit ball in R^k
inline double omega_ball(int k) {
  switch (k) {
    case 0: return 1.0;
    case 1: return 2.0;
    case 2: return M_PI;
    case 3: return 4.0 * M_PI / 3.0;
    case 4: return M_PI * M_PI / 2.0;
    default: throw Error(ErrorKind::domain, "omega_ball: 0 <= k <= 4");
  }
}

struct WeylParams {
  int d = 2;               // space dimension
  int r = 1;               // half-rank of the magnetic form
  std::vector<double> f;   // intensities f_1..f_r, all positive
  double V = 0;            // scalar potential value at the point
  double E = 0;            // spectral threshold (tau)
  double mu = 1;
  double h = 0.1;
  double g = 1;            // metric determinant

  void validate() const {
    if (d < 1 || d > 4) throw Error(ErrorKind::domain, "weyl density: 1 <= d <= 4");
    if (r < 0 || 2 * r > d) throw Error(ErrorKind::domain, "weyl density: 0 <= 2r <= d");
    if (static_cast<int>(f.size()) != r)
      throw Error(ErrorKind::domain, "weyl density: need exactly r intensities");
    for (double fj : f)
      if (!(fj > 0)) throw Error(ErrorKind::domain, "weyl density: intensities must be positive");
    if (!(mu > 0) || !(g > 0)) throw Error(ErrorKind::domain, "weyl density: mu, g > 0");
    if (!(h > 0) || !(h < 1)) throw Error(ErrorKind::domain, "weyl density: h in (0,1)");
  }
};

struct DensityValue {
  double value = 0;
  int terms = 0;                 // lattice points with a positive plus-part
  double largest_discarded = 0;  // certificate: the truncation is exact, not approximate
};

namespace detail {

inline double pow_int(double x, int n) {
  double r = 1;
  for (int i = 0; i < std::abs(n); ++i) r *= x;
  return n < 0 ? 1.0 / r : r;
}

// #{a >= 0 : (2a+1) step < budget} in closed form. Near a degeneracy the count
// grows like 1/step, so looping is not an option; the two trailing guards pin
// the result to the exact float predicate `budget - (2a+1) step > 0` that the
// term walk uses, so the boundary convention cannot drift.
inline long count_below(double budget, double step) {
  if (!(step > 0)) throw Error(ErrorKind::degeneracy, "level spacing must be positive");
  if (!(budget > step)) return 0;
  long n = static_cast<long>(std::ceil(0.5 * (budget / step - 1.0)));
  while (n > 0 && !(budget - (2 * (n - 1) + 1) * step > 0)) --n;
  while (budget - (2 * n + 1) * step > 0) ++n;
  return n;
}

// The prefactor shared by every term; for d = 2r this is exactly the jump size
// of the counting staircase, which is why the staircase route multiplies the
// same number (bit-identical agreement is intended, not accidental).
inline double weyl_coefficient(const WeylParams& p) {
  double c = omega_ball(p.d - 2 * p.r) * pow_int(2 * M_PI, p.r - p.d) * pow_int(p.mu, p.r) *
             pow_int(p.h, p.r - p.d) * std::sqrt(p.g);
  for (double fj : p.f) c *= fj;
  return c;
}

}  // namespace detail

// The lattice sum. Enumeration walks coordinates in order, descending the
// remaining budget, so exactly the active set is visited: every discarded
// lattice point has a nonpositive plus-part argument by construction.
// Convention at the boundary: strictly positive arguments count. For d = 2r
// the power-0 plus-part is the Heaviside step with theta(0) = 0, matching a
// strictly-below eigenvalue count.
inline DensityValue magnetic_weyl_density(const WeylParams& p) {
  p.validate();
  DensityValue out;
  const double m = 2 * p.E + p.V;
  const double half_pow = 0.5 * p.d - p.r;

  double sum = 0;
  std::function<void(int, double)> walk = [&](int j, double budget) {
    if (j == p.r) {
      sum += std::pow(budget, half_pow);
      ++out.terms;
      return;
    }
    const double step = p.f[j] * p.mu * p.h;
    if (j == p.r - 1 && half_pow == 0) {
      // Heaviside terms: the innermost level is a pure count
      const long n = detail::count_below(budget, step);
      sum += static_cast<double>(n);
      out.terms += static_cast<int>(n);
      return;
    }
    for (long a = 0;; ++a) {
      const double arg = budget - (2 * a + 1) * step;
      if (!(arg > 0)) break;
      walk(j + 1, arg);
    }
  };
  if (p.r == 0) {
    if (m > 0) {
      sum = std::pow(m, half_pow);
      out.terms = 1;
    }
  } else if (m > 0) {
    walk(0, m);
  }
  out.value = detail::weyl_coefficient(p) * sum;
  return out;
}

// d = 2, r = 1 staircase: (2pi)^{-1} sum_n theta(2 tau + V - (2n+1) mu h f) mu h^{-1} f sqrt(g)
inline double landau_density_2d(double f, double V, double g, double mu, double h, double tau) {
  WeylParams p{2, 1, {f}, V, tau, mu, h, g};
  p.validate();
  const double m = 2 * tau + V;
  const double step = f * mu * h;  // same expression as the lattice walk, so the
                                   // two routes agree even at knife-edge thresholds
  return detail::weyl_coefficient(p) * static_cast<double>(detail::count_below(m, step));
}

// the staircase rises by exactly this amount at every threshold
inline double landau_jump_size(double f, double g, double mu, double h) {
  WeylParams p{2, 1, {f}, 0, 0, mu, h, g};
  p.validate();
  return detail::weyl_coefficient(p);
}

// thresholds 2 tau = (2n+1) mu h f - V, listed up to tau_max
inline std::vector<double> landau_jump_thresholds(double f, double V, double mu, double h,
                                                  double tau_max) {
  WeylParams p{2, 1, {f}, V, 0, mu, h, 1};
  p.validate();
  std::vector<double> out;
  for (long n = 0;; ++n) {
    const double tau = 0.5 * ((2 * n + 1) * mu * h * f - V);
    if (tau > tau_max) break;
    out.push_back(tau);
  }
  return out;
}

// density at a point of a field system: intensities, rank and sqrt(g) are read
// off the two-form there, the scalar enters as V
inline DensityValue density_at(const MagneticSystem& sys, const Vec& x, double mu, double h,
                               double E) {
  WeylParams p;
  p.d = sys.dim;
  p.V = sys.scalar_at(x);
  p.E = E;
  p.mu = mu;
  p.h = h;
  if (sys.dim == 2 && sys.identity_metric) {
    // planar fast path: the single intensity is |F12|, no eigensolve needed
    sys.ensure();
    const double f12 = std::abs(sys.dA[0][1].eval(x) - sys.dA[1][0].eval(x));
    p.r = 0;
    if (f12 > 1e-12) {
      p.r = 1;
      p.f = {f12};
    }
    return magnetic_weyl_density(p);
  }
  const Intensities in = intensity_eigenvalues(sys, x);
  p.r = in.rank / 2;
  p.f = in.f;
  p.g = in.sqrt_g * in.sqrt_g;
  return magnetic_weyl_density(p);
}

struct CutoffIntegral {
  double value = 0;
  bool converged = false;
  double rel_change = 0;  // last refinement-doubling change, the achieved estimate
  long cells = 0;         // leaf cells at the final depth
  int depth = 0;          // uniform depth reached
};

namespace detail {

// deterministic pairwise reduction; the result is independent of how the work
// was distributed across threads
inline double pairwise_sum(const std::vector<double>& v, size_t lo, size_t hi) {
  if (hi - lo <= 4) {
    double s = 0;
    for (size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

struct Cell {
  Vec lo, hi;
};

}  // namespace detail

// Integrates density_at(x) * psi(x) over the box [lo, hi]. Cells refine
// uniformly to `depth`; cells whose active term count varies across corners
// and center (a Landau jump passes through) refine further, up to two extra
// levels. The uniform depth doubles until the value settles to rel_tol; a
// non-settled result is returned with converged = false and the achieved
// change, not thrown.
inline CutoffIntegral integrate_density(const MagneticSystem& sys, const Vec& lo, const Vec& hi,
                                        const std::function<double(const Vec&)>& psi, double mu,
                                        double h, double E, double rel_tol = 1e-6,
                                        int max_depth = 7, int jobs = 1) {
  sys.ensure();
  const int d = sys.dim;
  if (lo.size() != d || hi.size() != d)
    throw Error(ErrorKind::usage, "integrate_density: box dimension must match the field");
  for (int j = 0; j < d; ++j)
    if (!(lo[j] < hi[j])) throw Error(ErrorKind::usage, "integrate_density: empty box");

  auto terms_at = [&](const Vec& x) { return density_at(sys, x, mu, h, E).terms; };

  // collect leaves at a given uniform depth (+ adaptive extra near jumps)
  auto leaves_at_depth = [&](int depth) {
    std::vector<detail::Cell> leaves;
    std::function<void(const detail::Cell&, int)> split = [&](const detail::Cell& c, int lvl) {
      bool refine = lvl < depth;
      if (!refine && lvl < depth + 2) {
        // probe corners and center for a change in the active level count
        const int t0 = terms_at(Vec(0.5 * (c.lo + c.hi)));
        for (long mask = 0; mask < (1L << d) && !refine; ++mask) {
          Vec corner(d);
          for (int j = 0; j < d; ++j) corner[j] = (mask >> j) & 1 ? c.hi[j] : c.lo[j];
          if (terms_at(corner) != t0) refine = true;
        }
      }
      if (!refine) {
        leaves.push_back(c);
        return;
      }
      // 2^d children
      for (long mask = 0; mask < (1L << d); ++mask) {
        detail::Cell ch;
        ch.lo = c.lo;
        ch.hi = c.hi;
        for (int j = 0; j < d; ++j) {
          const double mid = 0.5 * (c.lo[j] + c.hi[j]);
          if ((mask >> j) & 1)
            ch.lo[j] = mid;
          else
            ch.hi[j] = mid;
        }
        split(ch, lvl + 1);
      }
    };
    split({lo, hi}, 0);
    return leaves;
  };

  const GaussRule& rule = gauss_rule(4);
  auto cell_integral = [&](const detail::Cell& c) {
    // tensor Gauss-Legendre over the cell
    double s = 0;
    std::vector<int> idx(d, 0);
    while (true) {
      Vec x(d);
      double w = 1;
      for (int j = 0; j < d; ++j) {
        const double half = 0.5 * (c.hi[j] - c.lo[j]);
        x[j] = 0.5 * (c.lo[j] + c.hi[j]) + half * rule.node[idx[j]];
        w *= half * rule.weight[idx[j]];
      }
      s += w * density_at(sys, x, mu, h, E).value * psi(x);
      int j = d - 1;
      while (j >= 0 && ++idx[j] == 4) idx[j--] = 0;
      if (j < 0) break;
    }
    return s;
  };

  auto value_at_depth = [&](int depth, long& cells_out) {
    auto leaves = leaves_at_depth(depth);
    cells_out = static_cast<long>(leaves.size());
    std::vector<double> vals(leaves.size(), 0.0);
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(leaves.size())));
    if (nthreads == 1) {
      for (size_t i = 0; i < leaves.size(); ++i) vals[i] = cell_integral(leaves[i]);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&, t]() {
          for (size_t i = t; i < leaves.size(); i += nthreads) vals[i] = cell_integral(leaves[i]);
        });
      for (auto& th : pool) th.join();
    }
    return detail::pairwise_sum(vals, 0, vals.size());
  };

  CutoffIntegral out;
  long cells = 0;
  double prev = value_at_depth(1, cells);
  for (int depth = 2; depth <= max_depth; ++depth) {
    const double cur = value_at_depth(depth, cells);
    const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
    out.value = cur;
    out.depth = depth;
    out.cells = cells;
    out.rel_change = std::abs(cur - prev) / scale;
    if (out.rel_change <= rel_tol) {
      out.converged = true;
      return out;
    }
    prev = cur;
  }
  return out;  // converged stays false; rel_change is the achieved estimate
}

}  // namespace magweyl

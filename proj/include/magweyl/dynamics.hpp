#pragma once
// Classical side: the magnetic Hamiltonian flow, guiding-center drift, the 1D
// effective model (period, drift increment, critical momentum), and the
// special 3D / 4D diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "magweyl/field_geometry.hpp"
#include "magweyl/ode.hpp"
#include "magweyl/quadrature.hpp"

namespace magweyl {

// --- Hamiltonian flow ---------------------------------------------------------

// H = (sum g^{jk} (xi_j - mu A_j)(xi_k - mu A_k) - V) / 2
inline double hamiltonian_eval(const MagneticSystem& sys, const PhasePoint& z) {
  sys.ensure();
  const int d = sys.dim;
  Vec P(d);
  for (int j = 0; j < d; ++j) P[j] = z.xi[j] - sys.mu * sys.A[j].eval(z.x);
  double kin = 0;
  if (sys.identity_metric) {
    kin = P.squaredNorm();
  } else {
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) kin += sys.ginv[j][k].eval(z.x) * P[j] * P[k];
  }
  return 0.5 * (kin - sys.scalar_at(z.x));
}

// state layout y = [x; xi]
inline Vec flow_rhs(const MagneticSystem& sys, const Vec& y) {
  const int d = sys.dim;
  const Vec x = y.head(d);
  Vec P(d);
  for (int j = 0; j < d; ++j) P[j] = y[d + j] - sys.mu * sys.A[j].eval(x);

  Vec out(2 * d);
  if (sys.identity_metric) {
    // xdot = P; xidot_j = mu sum_k (d_j A_k) P_k + (d_j V)/2
    for (int j = 0; j < d; ++j) out[j] = P[j];
    for (int j = 0; j < d; ++j) {
      double s = 0.5 * sys.dV[j].eval(x);
      for (int k = 0; k < d; ++k) s += sys.mu * sys.dA[j][k].eval(x) * P[k];
      out[d + j] = s;
    }
    return out;
  }
  Mat G(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) G(j, k) = sys.ginv[j][k].eval(x);
  const Vec GP = G.topLeftCorner(d, d) * P;
  for (int j = 0; j < d; ++j) out[j] = GP[j];
  for (int j = 0; j < d; ++j) {
    double s = 0.5 * sys.dV[j].eval(x);
    for (int k = 0; k < d; ++k) {
      s += sys.mu * sys.dA[j][k].eval(x) * GP[k];
      for (int l = 0; l < d; ++l) s -= 0.5 * sys.dginv[j][k][l].eval(x) * P[k] * P[l];
    }
    out[d + j] = s;
  }
  return out;
}

struct TrajectorySample {
  std::vector<double> t;
  std::vector<PhasePoint> z;
  std::vector<double> H;
  std::map<std::string, std::vector<double>> channels;
  double energy_tol = 0;    // the bound the run promised
  double energy_drift = 0;  // what it actually did
  bool truncated = false;
};

inline TrajectorySample integrate_trajectory(const MagneticSystem& sys, const PhasePoint& z0,
                                             double T, double tol, double sample_dt = 0,
                                             double domain_radius =
                                                 std::numeric_limits<double>::infinity()) {
  sys.ensure();
  const int d = sys.dim;
  const double H0 = hamiltonian_eval(sys, z0);

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = 1e-3 * tol;
  opt.sample_dt = sample_dt;
  opt.invariant = [&sys, d](double, const Vec& y) {
    return hamiltonian_eval(sys, PhasePoint{y.head(d), y.tail(d)});
  };
  opt.invariant_tol = tol * std::max(1.0, std::abs(H0)) * T;
  if (std::isfinite(domain_radius))
    opt.stop_when = [d, domain_radius](double, const Vec& y) {
      return y.head(d).norm() > domain_radius;
    };

  auto rhs = [&sys](double, const Vec& y) { return flow_rhs(sys, y); };
  auto sol = integrate(rhs, 0.0, T, z0.packed(), opt);

  TrajectorySample s;
  s.t = sol.t;
  s.truncated = sol.truncated;
  s.energy_tol = opt.invariant_tol;
  for (const auto& y : sol.y) {
    PhasePoint z{y.head(d), y.tail(d)};
    s.H.push_back(hamiltonian_eval(sys, z));
    s.z.push_back(std::move(z));
  }
  for (double h : s.H) s.energy_drift = std::max(s.energy_drift, std::abs(h - H0));
  return s;
}

// --- guiding centers and drift -------------------------------------------------

namespace detail {
// gradient of (V + 2E)/f for planar fields with g = I; f = |F12|
struct PlanarDriftField {
  Expr F12, dF12_1, dF12_2, V, dV1, dV2;
  double mu, twoE;

  PlanarDriftField(const MagneticSystem& sys, double E) : mu(sys.mu), twoE(2 * E) {
    sys.ensure();
    F12 = sys.dA[0][1] - sys.dA[1][0];
    dF12_1 = F12.diff(0);
    dF12_2 = F12.diff(1);
    V = sys.V;
    dV1 = sys.dV[0];
    dV2 = sys.dV[1];
  }

  Vec operator()(const Vec& x) const {
    const double raw = F12.eval(x);
    if (std::abs(raw) < 1e-12)
      throw Error(ErrorKind::degeneracy,
                  "drift undefined where the form degenerates; use the model-zone analysis");
    const double s = raw >= 0 ? 1.0 : -1.0;
    const double f = s * raw;
    const double num = V.eval(x) + twoE;
    const double g1 = (f * dV1.eval(x) - num * s * dF12_1.eval(x)) / (f * f);
    const double g2 = (f * dV2.eval(x) - num * s * dF12_2.eval(x)) / (f * f);
    Vec c(2);
    c << g2, -g1;  // clockwise quarter turn of the gradient
    return c / (2 * mu);
  }
};
}  // namespace detail

// Secular velocity of the cyclotron center. Planar route assumes g = I at the
// point (callers pre-normalize); full-rank even-dimensional route inverts the
// two-form. The sign is fixed by the actual flow, which the scan test pins.
inline Vec drift_velocity(const MagneticSystem& sys, const Vec& x, double E) {
  sys.ensure();
  if (sys.dim == 2) return detail::PlanarDriftField(sys, E)(x);
  const Mat F = two_form(sys, x);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(F.topLeftCorner(sys.dim, sys.dim));
  lu.setThreshold(1e-8);
  if (lu.rank() < sys.dim)
    throw Error(ErrorKind::degeneracy,
                "drift undefined where the form degenerates; use the model-zone analysis");
  Vec dV(sys.dim);
  for (int j = 0; j < sys.dim; ++j) dV[j] = sys.dV[j].eval(x);
  return Vec(-lu.solve(dV) / (2 * sys.mu));
}

struct GuidingCenter {
  std::vector<double> t;  // window midpoints
  std::vector<Vec> x;     // period-averaged positions
};

// Average the position over each cyclotron period, with periods delimited by
// upward zero crossings of xi_1. 64 open-ended samples per window.
inline GuidingCenter extract_guiding_center(const MagneticSystem& sys, const PhasePoint& z0,
                                            double T, double tol = 1e-12) {
  sys.ensure();
  const int d = sys.dim;
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = 1e-3 * tol;
  opt.keep_dense = true;
  Event ev{[d](double, const Vec& y) { return y[d]; }, true};
  auto rhs = [&sys](double, const Vec& y) { return flow_rhs(sys, y); };
  auto sol = integrate(rhs, 0.0, T, z0.packed(), opt, &ev);
  if (sol.crossings.size() < 2)
    throw Error(ErrorKind::window, "trajectory too short to delimit a cyclotron period");

  GuidingCenter gc;
  for (size_t i = 0; i + 1 < sol.crossings.size(); ++i) {
    const double a = sol.crossings[i].t, b = sol.crossings[i + 1].t;
    Vec mean = Vec::Zero(d);
    for (int j = 0; j < 64; ++j) mean += sol.at(a + (b - a) * j / 64.0).head(d);
    gc.t.push_back(0.5 * (a + b));
    gc.x.push_back(mean / 64.0);
  }
  return gc;
}

struct DriftScanRow {
  double mu, T, deviation;
};
struct DriftScan {
  std::vector<DriftScanRow> rows;
  double slope = 0;  // d log(deviation) / d log(mu)
};

// Compare the extracted guiding center against the drift ODE started from the
// first extracted point. z0.xi is the kinetic momentum at z0.x; each run
// re-dresses it as xi = p + mu A(x) so the physical state is mu-independent.
inline DriftScan guiding_center_error_scan(const MagneticSystem& base, const PhasePoint& z0,
                                           const std::vector<double>& mu_list,
                                           const std::vector<double>& T_list,
                                           double tol = 1e-12) {
  if (mu_list.empty() || (T_list.size() != 1 && T_list.size() != mu_list.size()))
    throw Error(ErrorKind::usage, "need one horizon or one per mu");
  if (mu_list[0] < 10) throw Error(ErrorKind::usage, "mu_list entries must be 10 or above");
  for (size_t i = 1; i < mu_list.size(); ++i)
    if (mu_list[i] <= mu_list[i - 1])
      throw Error(ErrorKind::usage, "mu_list must be strictly increasing");

  DriftScan scan;
  for (size_t i = 0; i < mu_list.size(); ++i) {
    MagneticSystem sys = base;
    sys.mu = mu_list[i];
    sys.finalized = false;
    sys.ensure();
    const double T = T_list[T_list.size() == 1 ? 0 : i];

    PhasePoint dressed{z0.x, z0.xi};
    for (int j = 0; j < sys.dim; ++j) dressed.xi[j] += sys.mu * sys.A[j].eval(z0.x);
    const double E = hamiltonian_eval(sys, dressed);

    const GuidingCenter gc = extract_guiding_center(sys, dressed, T, tol);
    detail::PlanarDriftField drift(sys, E);
    OdeOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-15;
    opt.keep_dense = true;
    auto sol = integrate([&drift](double, const Vec& y) { return drift(y); }, gc.t.front(),
                         gc.t.back() + 1e-12, gc.x.front(), opt);
    double dev = 0;
    for (size_t j = 0; j < gc.t.size(); ++j)
      dev = std::max(dev, (gc.x[j] - sol.at(gc.t[j])).norm());
    scan.rows.push_back({mu_list[i], T, dev});
  }

  // least-squares slope in log-log
  const size_t n = scan.rows.size();
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : scan.rows) {
      const double lx = std::log(r.mu), ly = std::log(std::max(r.deviation, 1e-300));
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    scan.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return scan;
}

// --- the 1D effective model ----------------------------------------------------

struct EffectiveModel {
  int nu = 2;
  double k = 0;
  double W = 1;

  EffectiveModel(int nu_, double k_, double W_ = 1) : nu(nu_), k(k_), W(W_) {
    if (nu < 2) throw Error(ErrorKind::domain, "model exponent nu must be >= 2");
    if (!(W > 0)) throw Error(ErrorKind::domain, "well height W must be positive");
  }
};

namespace detail {
inline double ipow(double x, int n) {
  double r = 1;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}
// real nu-th root honoring sign for odd nu; even nu demands c >= 0
inline double signed_root(double c, int nu) {
  if (nu % 2 == 0) return std::pow(c, 1.0 / nu);  // caller guarantees c >= 0
  return c >= 0 ? std::pow(c, 1.0 / nu) : -std::pow(-c, 1.0 / nu);
}
}  // namespace detail

// cV(x1; k) = W - (k - x1^nu / nu)^2
inline double effective_potential(const EffectiveModel& m, double x1) {
  const double u = detail::ipow(x1, m.nu) / m.nu;
  return m.W - (m.k - u) * (m.k - u);
}

enum class WellCensus { single, merged, two_wells, degenerate, empty };

struct TurningPoints {
  double lo = 0, hi = 0;   // the selected well
  WellCensus census = WellCensus::single;
  bool degenerate = false;  // a turning point is a multiple root
};

// Classically allowed region of the effective potential. Even nu with
// k > sqrt(W) has symmetric wells; the right one is the default.
inline TurningPoints turning_points(const EffectiveModel& m, bool left_well = false) {
  const double sW = std::sqrt(m.W);
  const double c_lo = m.nu * (m.k - sW);  // x^nu at the inner boundary
  const double c_hi = m.nu * (m.k + sW);  // x^nu at the outer boundary
  TurningPoints tp;

  if (m.nu % 2 == 1) {
    tp.lo = detail::signed_root(c_lo, m.nu);
    tp.hi = detail::signed_root(c_hi, m.nu);
    tp.census = WellCensus::single;
    tp.degenerate = (c_lo == 0 || c_hi == 0);  // multiple root parked at x = 0
  } else {
    if (c_hi < 0) throw Error(ErrorKind::domain, "no classically allowed region for this k");
    if (c_hi == 0 || c_lo == 0) {
      tp.degenerate = true;
      tp.census = WellCensus::degenerate;
      tp.lo = c_lo == 0 ? 0 : detail::signed_root(std::max(c_lo, 0.0), m.nu);
      tp.hi = detail::signed_root(c_hi, m.nu);
      if (c_hi == 0) {  // single grazing point at the origin
        tp.lo = tp.hi = 0;
        return tp;
      }
    } else if (c_lo > 0) {
      tp.census = WellCensus::two_wells;
      tp.lo = detail::signed_root(c_lo, m.nu);
      tp.hi = detail::signed_root(c_hi, m.nu);
    } else {
      tp.census = WellCensus::merged;
      tp.hi = detail::signed_root(c_hi, m.nu);
      tp.lo = -tp.hi;
    }
    if (left_well) {
      if (tp.census != WellCensus::two_wells)
        throw Error(ErrorKind::domain, "no separate left well for this k");
      const double lo = -tp.hi, hi = -tp.lo;
      tp.lo = lo;
      tp.hi = hi;
    }
  }

  // bisection polish; the closed forms above already seed it to rounding
  auto polish = [&](double r) {
    if (std::abs(effective_potential(m, r)) <= 1e-13 * m.W) return r;
    double a = r - 1e-6 * (1 + std::abs(r)), b = r + 1e-6 * (1 + std::abs(r));
    double fa = effective_potential(m, a), fb = effective_potential(m, b);
    for (int w = 0; w < 60 && fa * fb > 0; ++w) {
      a -= (b - a), fa = effective_potential(m, a);
    }
    if (fa * fb > 0) return r;
    for (int i = 0; i < 100; ++i) {
      const double c = 0.5 * (a + b), fc = effective_potential(m, c);
      (fa * fc <= 0 ? b : a) = c;
      (fa * fc <= 0 ? fb : fa) = fc;
    }
    return 0.5 * (a + b);
  };
  if (!tp.degenerate) {
    tp.lo = polish(tp.lo);
    tp.hi = polish(tp.hi);
  }
  return tp;
}

namespace detail {
template <class F>
double well_quadrature(const EffectiveModel& m, const TurningPoints& tp, F&& numerator,
                       const char* what, double abs_tol = 0) {
  auto integrand = [&](double x) {
    const double cv = std::max(effective_potential(m, x), 0.0);
    return numerator(x) / std::sqrt(2 * cv);
  };
  if (tp.degenerate) {
    // log-divergent; the doubling ladder cannot settle, so surface the last
    // partial sum as the carried estimate
    try {
      const double v = sqrt_well_integrate(integrand, tp.lo, tp.hi, 1e-9, abs_tol);
      throw Error(ErrorKind::divergence, what, v);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::divergence) throw;
      throw Error(ErrorKind::divergence, what, e.has_estimate() ? e.estimate() : 0.0);
    }
  }
  return sqrt_well_integrate(integrand, tp.lo, tp.hi, 1e-9, abs_tol);
}
}  // namespace detail

// T(k) = 2 integral dx1 / sqrt(2 cV)
inline double period_T(const EffectiveModel& m, bool left_well = false) {
  const TurningPoints tp = turning_points(m, left_well);
  return 2 * detail::well_quadrature(m, tp, [](double) { return 1.0; },
                                     "period diverges at a degenerate turning point");
}

// I(k) = 2 integral (k - x1^nu/nu) dx1 / sqrt(2 cV)
inline double drift_increment_I(const EffectiveModel& m, bool left_well = false) {
  const TurningPoints tp = turning_points(m, left_well);
  return 2 * detail::well_quadrature(
                 m, tp, [&m](double x) { return m.k - detail::ipow(x, m.nu) / m.nu; },
                 "drift increment diverges at a degenerate turning point", 1e-10);
}

struct KStar {
  double k = 0;
  double dIdk = 0;  // finite-difference slope at the root, positive by the sign law
};

// Root of I(k) = 0: exactly 0 for odd nu (odd integrand over a symmetric
// well), bisection in (0, sqrt(W)) for even nu.
inline KStar find_kstar(int nu, double W = 1) {
  if (nu < 2) throw Error(ErrorKind::domain, "model exponent nu must be >= 2");
  const double sW = std::sqrt(W);
  const double h = 1e-4 * sW;
  if (nu % 2 == 1) {
    KStar r;
    r.k = 0;
    r.dIdk = (drift_increment_I({nu, h, W}) - drift_increment_I({nu, -h, W})) / (2 * h);
    return r;
  }
  double a = 1e-6 * sW, b = 0.98 * sW;
  double fa = drift_increment_I({nu, a, W}), fb = drift_increment_I({nu, b, W});
  if (fa * fb > 0) {
    b = 0.999 * sW;
    fb = drift_increment_I({nu, b, W});
    if (fa * fb > 0) throw Error(ErrorKind::domain, "no sign change of I(k) inside the well range");
  }
  while (b - a > 1e-10) {
    const double c = 0.5 * (a + b), fc = drift_increment_I({nu, c, W});
    (fa * fc <= 0 ? b : a) = c;
    (fa * fc <= 0 ? fb : fa) = fc;
  }
  KStar r;
  r.k = 0.5 * (a + b);
  r.dIdk = (drift_increment_I({nu, r.k + h, W}) - drift_increment_I({nu, r.k - h, W})) / (2 * h);
  return r;
}

// scaled picture: y = mu^{1/nu} x, momenta unchanged, time sped up by mu^{1/nu}
struct UnitMuScaling {
  double space = 1, time = 1;
};
inline UnitMuScaling unit_mu_scaling(double mu, int nu) {
  if (!(mu > 0) || nu < 2) throw Error(ErrorKind::domain, "need mu > 0 and nu >= 2");
  const double s = std::pow(mu, 1.0 / nu);
  return {s, s};
}
inline PhasePoint scale_to_unit_mu(const PhasePoint& z, double mu, int nu) {
  return {Vec(z.x * unit_mu_scaling(mu, nu).space), z.xi};
}
inline PhasePoint unscale_from_unit_mu(const PhasePoint& z, double mu, int nu) {
  return {Vec(z.x / unit_mu_scaling(mu, nu).space), z.xi};
}

struct ModelRun {
  std::vector<double> t;
  std::vector<Vec> y;        // (x1, x2, xi1); xi2 = k is exact by construction
  int periods = 0;           // full xi1-periods observed
  double dx2_per_period = 0; // mean drift per period
  double dx2_unitmu = 0;     // same increment in unit-coupling coordinates (x -> mu^{1/nu} x)
  double x1_period = 0;      // mean period length in time
  double path_length = 0;    // arc length of (x1, x2) over the run
  double energy_drift = 0;
};

// Integrate the planar model H = (xi1^2 + (k - mu x1^nu/nu)^2 - V(x1))/2 with
// V = W - alpha x1, starting on the zero-energy manifold at the momentum-matched
// x1. Periods are delimited by upward crossings of xi1.
inline ModelRun simulate_model(int nu, double mu, double k, double T, double alpha = 0,
                               double W = 1, double tol = 1e-10) {
  if (nu < 2 || !(mu > 0)) throw Error(ErrorKind::domain, "need nu >= 2 and mu > 0");
  auto u = [nu, mu](double x1) { return mu * detail::ipow(x1, nu) / nu; };

  double x1c = 0;
  if (k > 0)
    x1c = std::pow(nu * k / mu, 1.0 / nu);
  else if (k < 0 && nu % 2 == 1)
    x1c = -std::pow(-nu * k / mu, 1.0 / nu);
  const double xi1_0 = std::sqrt(W);
  const double E0 = 0.5 * (xi1_0 * xi1_0 + detail::ipow(k - u(x1c), 2) - (W - alpha * x1c));

  auto rhs = [&](double, const Vec& y) {
    const double P2 = k - u(y[0]);
    Vec d(3);
    d << y[2], P2, mu * P2 * detail::ipow(y[0], nu - 1) - 0.5 * alpha;
    return d;
  };
  auto energy = [&](const Vec& y) {
    const double P2 = k - u(y[0]);
    return 0.5 * (y[2] * y[2] + P2 * P2 - (W - alpha * y[0]));
  };

  Vec y0(3);
  y0 << x1c, 0.0, xi1_0;
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = 1e-3 * tol;
  opt.keep_dense = true;
  Event ev{[](double, const Vec& y) { return y[2]; }, true};
  auto sol = integrate(rhs, 0.0, T, y0, opt, &ev);

  ModelRun run;
  run.t = sol.t;
  run.y = sol.y;
  for (const auto& y : sol.y)
    run.energy_drift = std::max(run.energy_drift, std::abs(energy(y) - E0));

  const auto& cr = sol.crossings;
  if (cr.size() < 2)
    throw Error(ErrorKind::window, "horizon too short: fewer than two drift periods observed");
  run.periods = static_cast<int>(cr.size()) - 1;
  double dx2 = 0;
  for (size_t i = 0; i + 1 < cr.size(); ++i) dx2 += cr[i + 1].y[1] - cr[i].y[1];
  run.dx2_per_period = dx2 / run.periods;
  run.dx2_unitmu = std::pow(mu, 1.0 / nu) * run.dx2_per_period;
  run.x1_period = (cr.back().t - cr.front().t) / run.periods;

  // arc length of the planar trace on a fine uniform grid
  const int nseg = 256 * run.periods;
  Vec prev = sol.at(cr.front().t);
  for (int i = 1; i <= nseg; ++i) {
    Vec cur = sol.at(cr.front().t + (cr.back().t - cr.front().t) * i / nseg);
    run.path_length += std::hypot(cur[0] - prev[0], cur[1] - prev[1]);
    prev = cur;
  }
  return run;
}

// --- 3D: magnetic moment and effective potential --------------------------------

// adiabatic invariant p_perp^2 / (2 mu |B|) for d = 3, g = I
inline double magnetic_moment(const MagneticSystem& sys, const PhasePoint& z) {
  if (sys.dim != 3) throw Error(ErrorKind::usage, "magnetic moment needs d = 3");
  sys.ensure();
  const Mat F = two_form(sys, z.x);
  Vec B(3);
  B << F(1, 2), -F(0, 2), F(0, 1);
  const double nb = B.norm();
  if (nb < 1e-12) throw Error(ErrorKind::degeneracy, "field vanishes: no cyclotron plane");
  Vec p(3);
  for (int j = 0; j < 3; ++j) p[j] = z.xi[j] - sys.mu * sys.A[j].eval(z.x);
  const double par = p.dot(B) / nb;
  return (p.squaredNorm() - par * par) / (2 * sys.mu * nb);
}

// V_eff = V - M^2 / f for the 1D motion along the field line
inline double effective_potential_3d(const std::function<double(const Vec&)>& f,
                                     const std::function<double(const Vec&)>& V, double M,
                                     const Vec& x) {
  const double fx = f(x);
  if (!(fx > 0)) throw Error(ErrorKind::degeneracy, "intensity must be positive here");
  return V(x) - M * M / fx;
}

// --- 4D model: (x1, x2, rho, theta) with momenta (xi1, xi2, varrho, vartheta) ----

// 2H = xi1^2 + (xi2 - mu w)^2 + varrho^2 + rho^{-2}(vartheta - mu q)^2 - 1,
// w = x1 - rho^2/2, q = (x1 - rho^2/4) rho^2
inline double model4d_energy(double mu, const Vec& y) {
  const double x1 = y[0], rho = y[2];
  const double w = x1 - 0.5 * rho * rho;
  const double q = (x1 - 0.25 * rho * rho) * rho * rho;
  const double P2 = y[5] - mu * w;
  const double Pt = y[7] - mu * q;
  return 0.5 * (y[4] * y[4] + P2 * P2 + y[6] * y[6] + Pt * Pt / (rho * rho) - 1.0);
}

inline Vec model4d_rhs(double mu, const Vec& y) {
  const double x1 = y[0], rho = y[2], xi1 = y[4], vr = y[6];
  const double w = x1 - 0.5 * rho * rho;
  const double q = (x1 - 0.25 * rho * rho) * rho * rho;
  const double P2 = y[5] - mu * w;
  const double Pt = y[7] - mu * q;
  Vec d(8);
  d[0] = xi1;
  d[1] = P2;
  d[2] = vr;
  d[3] = Pt / (rho * rho);
  d[4] = mu * (P2 + Pt);
  d[5] = 0;
  d[6] = -mu * P2 * rho + mu * Pt * (2 * rho * x1 - rho * rho * rho) / (rho * rho) +
         Pt * Pt / (rho * rho * rho);
  d[7] = 0;
  return d;
}

// zero-energy state with prescribed kinetic data; xi2 and vartheta are dressed
inline Vec model4d_initial(double mu, double x1, double rho, double theta, double xi1,
                           double varrho, double P2) {
  const double rest = 1.0 - xi1 * xi1 - P2 * P2 - varrho * varrho;
  if (rest < 0) throw Error(ErrorKind::domain, "kinetic data exceed the energy shell");
  const double Pt = std::sqrt(rest) * rho;
  const double w = x1 - 0.5 * rho * rho;
  const double q = (x1 - 0.25 * rho * rho) * rho * rho;
  Vec y(8);
  y << x1, 0.0, rho, theta, xi1, P2 + mu * w, varrho, Pt + mu * q;
  return y;
}

struct Model4dReport {
  double max_dxi2 = 0;      // exact integral, must sit at integrator noise
  double max_dvartheta = 0; // same
  double max_dw = 0;        // x1 - rho^2/2, preserved modulo O(1/mu)
  bool truncated = false;   // hit the polar-coordinate singularity
};

inline Model4dReport model4d_invariants(double mu, const Vec& y0, double T, double tol = 1e-12) {
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = 1e-3 * tol;
  opt.stop_when = [](double, const Vec& y) { return y[2] < 1e-3; };
  auto sol = integrate([mu](double, const Vec& y) { return model4d_rhs(mu, y); }, 0.0, T, y0, opt);

  Model4dReport rep;
  rep.truncated = sol.truncated;
  const double w0 = y0[0] - 0.5 * y0[2] * y0[2];
  for (const auto& y : sol.y) {
    rep.max_dxi2 = std::max(rep.max_dxi2, std::abs(y[5] - y0[5]));
    rep.max_dvartheta = std::max(rep.max_dvartheta, std::abs(y[7] - y0[7]));
    rep.max_dw = std::max(rep.max_dw, std::abs(y[0] - 0.5 * y[2] * y[2] - w0));
  }
  return rep;
}

}  // namespace magweyl

#pragma once

// Adaptive Dormand-Prince 5(4) with FSAL, continuous (dense) output, upward
// zero-crossing events refined on the interpolant, an invariant monitor that
// restarts the whole integration at a 10x tighter tolerance when a conserved
// quantity drifts, and a stop predicate for domain exits.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "magweyl/types.hpp"

namespace magweyl {

using Rhs = std::function<Vec(double, const Vec&)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0;  // 0 -> heuristic
  std::function<double(double, const Vec&)> invariant;  // monitored first integral
  double invariant_tol = 1e-9;
  int max_retries = 4;  // tolerance tightenings before giving up
  std::function<bool(double, const Vec&)> stop_when;  // true -> truncate here
  double sample_dt = 0;  // 0 -> record accepted steps only
  bool keep_dense = false;
};

struct DenseStep {
  double t0, t1;
  Vec r1, r2, r3, r4, r5;
  Vec eval(double t) const {
    const double th = (t - t0) / (t1 - t0), th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

struct Crossing {
  double t;
  Vec y;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<Vec> y;
  std::vector<DenseStep> dense;       // only if keep_dense
  std::vector<Crossing> crossings;    // only if an event was given
  bool truncated = false;
  double achieved_rtol = 0;
  int retries = 0;
  double invariant_drift = 0;

  Vec at(double tq) const {
    if (dense.empty()) throw Error(ErrorKind::usage, "dense output was not retained");
    size_t lo = 0, hi = dense.size() - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (dense[mid].t1 < tq) lo = mid + 1;
      else hi = mid;
    }
    return dense[lo].eval(tq);
  }
};

struct Event {
  std::function<double(double, const Vec&)> value;
  bool upward = true;
};

namespace detail {

struct Dopri5Attempt {
  bool invariant_violated = false;
  double drift = 0;
  OdeSolution sol;
};

inline Dopri5Attempt dopri5_run(const Rhs& rhs, double t0, double t1, const Vec& y0,
                                const OdeOptions& opt, double rtol, const Event* ev) {
  // classic coefficients
  static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
  static const double a21 = 1. / 5;
  static const double a31 = 3. / 40, a32 = 9. / 40;
  static const double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
  static const double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                      a54 = -212. / 729;
  static const double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                      a64 = 49. / 176, a65 = -5103. / 18656;
  static const double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                      b6 = 11. / 84;
  static const double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                      e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;
  static const double d1 = -12715105075. / 11282082432., d3 = 87487479700. / 32700410799.,
                      d4 = -10690763975. / 1880347072., d5 = 701980252875. / 199316789632.,
                      d6 = -1453857185. / 822651844., d7 = 69997945. / 29380423.;

  Dopri5Attempt at;
  OdeSolution& sol = at.sol;
  sol.achieved_rtol = rtol;

  const int n = static_cast<int>(y0.size());
  Vec y = y0;
  double t = t0;
  Vec k1 = rhs(t, y);

  const double inv0 = opt.invariant ? opt.invariant(t0, y0) : 0.0;
  double ev_prev = ev ? ev->value(t0, y0) : 0.0;

  double h = opt.initial_step;
  if (h <= 0) {
    const double scale = k1.norm() + 1e-30;
    h = std::min({0.01 * (std::abs(y.norm()) + 1.0) / scale, opt.max_step, (t1 - t0) / 10});
    if (h <= 0) h = 1e-6;
  }
  h = std::min(h, opt.max_step);

  sol.t.push_back(t);
  sol.y.push_back(y);
  double next_sample = t0 + opt.sample_dt;

  while (t < t1) {
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw Error(ErrorKind::stiffness, "step size underflow in adaptive integrator");
    if (t + h > t1) h = t1 - t;

    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(t + h, y1);

    const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0;
    for (int i = 0; i < n; ++i) {
      const double sc = opt.atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (errv[i] / sc) * (errv[i] / sc);
    }
    err = std::sqrt(err / n);

    if (!(err <= 1.0)) {  // NaN-safe: reject anything not provably small
      h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      continue;
    }

    // accepted
    DenseStep ds;
    ds.t0 = t;
    ds.t1 = t + h;
    ds.r1 = y;
    ds.r2 = y1 - y;
    ds.r3 = h * k1 - ds.r2;
    ds.r4 = ds.r2 - h * k7 - ds.r3;
    ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

    if (ev) {
      const double ev_now = ev->value(ds.t1, y1);
      const bool hit = ev->upward ? (ev_prev < 0 && ev_now >= 0) : (ev_prev > 0 && ev_now <= 0);
      if (hit) {
        double lo = ds.t0, hi = ds.t1;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double g = ev->value(mid, ds.eval(mid));
          const bool same_side = ev->upward ? (g < 0) : (g > 0);
          (same_side ? lo : hi) = mid;
        }
        const double tc = 0.5 * (lo + hi);
        sol.crossings.push_back({tc, ds.eval(tc)});
      }
      ev_prev = ev_now;
    }

    // a domain exit is refined on the interpolant so the last sample sits on
    // the boundary instead of a full step beyond it
    double t_end = ds.t1;
    Vec y_end = y1;
    bool stopping = false;
    if (opt.stop_when && opt.stop_when(ds.t1, y1)) {
      stopping = true;
      double lo = ds.t0, hi = ds.t1;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (opt.stop_when(mid, ds.eval(mid)) ? hi : lo) = mid;
      }
      t_end = hi;
      y_end = ds.eval(hi);
    }

    if (opt.sample_dt > 0) {
      while (next_sample <= t_end + 1e-14 && next_sample <= t1 + 1e-14) {
        sol.t.push_back(next_sample);
        sol.y.push_back(ds.eval(std::min(next_sample, t_end)));
        next_sample += opt.sample_dt;
      }
      if (stopping) {
        sol.t.push_back(t_end);
        sol.y.push_back(y_end);
      }
    } else {
      sol.t.push_back(t_end);
      sol.y.push_back(y_end);
    }
    if (opt.keep_dense) sol.dense.push_back(ds);

    t = ds.t1;
    y = y1;
    k1 = k7;  // FSAL

    if (opt.invariant) {
      const double drift = std::abs(opt.invariant(t_end, y_end) - inv0);
      at.drift = std::max(at.drift, drift);
      if (drift > opt.invariant_tol) {
        at.invariant_violated = true;
        return at;
      }
    }
    if (stopping) {
      sol.truncated = true;
      return at;
    }

    h = std::min(opt.max_step, h * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-12), -0.2))));
  }
  return at;
}

}  // namespace detail

inline OdeSolution integrate(const Rhs& rhs, double t0, double t1, const Vec& y0,
                             const OdeOptions& opt = {}, const Event* ev = nullptr) {
  if (!(t1 > t0)) throw Error(ErrorKind::usage, "integrate: need t1 > t0");
  double rtol = opt.rtol;
  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    auto at = detail::dopri5_run(rhs, t0, t1, y0, opt, rtol, ev);
    if (!at.invariant_violated) {
      at.sol.retries = attempt;
      at.sol.invariant_drift = at.drift;
      return at.sol;
    }
    rtol *= 0.1;
  }
  throw Error(ErrorKind::resolution,
              "invariant kept drifting past tolerance at the tightest retry");
}

}  // namespace magweyl

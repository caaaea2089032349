#pragma once

// Magnetic field data on R^d (d = 2, 3, 4): a vector potential A with entries
// given as expression trees, an optional inverse metric g^{jk}, and a scalar
// potential V. The two-form F_{jk} = d_j A_k - d_k A_j, the field intensities
// (positive imaginary parts of the eigenvalues of (g^{jk}) F), the rank
// stratification, and the characteristic line field on the degeneracy set.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "magweyl/expression.hpp"
#include "magweyl/types.hpp"

namespace magweyl {

struct MagneticSystem {
  int dim = 2;
  double mu = 1;                              // coupling in front of A; geometry ignores it
  std::array<Expr, 4> A;                      // empty entry == 0
  std::array<std::array<Expr, 4>, 4> ginv;    // inverse metric; empty == identity entries
  Expr V;                                     // scalar potential; empty == 0
  bool identity_metric = true;

  // source strings kept for serialization / round trips
  std::array<std::string, 4> A_src;
  std::array<std::array<std::string, 4>, 4> ginv_src;
  std::string V_src;
  std::string kind;                           // canonical-builder tag, "" for custom
  std::vector<double> kind_params;            // builder arguments, in signature order

  // derivative tables, filled by finalize()
  std::array<std::array<Expr, 4>, 4> dA;      // dA[j][k] = d A_k / d x_j
  std::array<Expr, 4> dV;
  std::array<std::array<std::array<Expr, 4>, 4>, 4> dginv;  // dginv[j][k][l] = d g^{kl} / d x_j
  bool finalized = false;

  void finalize() {
    if (finalized) return;
    for (int k = 0; k < dim; ++k) {
      const Expr& Ak = A[k].empty() ? (A[k] = Expr::constant(0)) : A[k];
      for (int j = 0; j < dim; ++j) dA[j][k] = Ak.diff(j);
    }
    if (V.empty()) V = Expr::constant(0);
    for (int j = 0; j < dim; ++j) dV[j] = V.diff(j);
    if (!identity_metric) {
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) {
          if (ginv[k][l].empty()) ginv[k][l] = Expr::constant(k == l ? 1 : 0);
          for (int j = 0; j < dim; ++j) dginv[j][k][l] = ginv[k][l].diff(j);
        }
    }
    finalized = true;
  }

  const MagneticSystem& ensure() const {
    if (!finalized) const_cast<MagneticSystem*>(this)->finalize();
    return *this;
  }

  Mat metric_inverse_at(const Vec& x) const {
    Mat G = Mat::Identity(dim, dim);
    if (!identity_metric)
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) G(k, l) = ginv[k][l].eval(x);
    return G;
  }

  double scalar_at(const Vec& x) const { return V.empty() ? 0.0 : V.eval(x); }
};

// --- canonical builders ------------------------------------------------------

namespace detail {
inline Expr parsed(MagneticSystem& s, int k, const std::string& src) {
  s.A_src[k] = src;
  return Expr::parse(src);
}
}  // namespace detail

// constant symplectic-normal-form field: F_{2j-1,2j} = 1 for j = 1..r
inline MagneticSystem darboux(int d, int r) {
  if (d < 2 || d > 4 || r < 1 || 2 * r > d)
    throw Error(ErrorKind::domain, "darboux: need 2 <= d <= 4 and 1 <= 2r <= d");
  MagneticSystem s;
  s.dim = d;
  s.kind = "darboux";
  s.kind_params = {static_cast<double>(d), static_cast<double>(r)};
  for (int j = 1; j <= r; ++j)
    s.A[2 * j - 1] = detail::parsed(s, 2 * j - 1, "x" + std::to_string(2 * j - 1));
  s.finalize();
  return s;
}

// constant field with prescribed intensities f_j: F_{j, j+r} = f_j
inline MagneticSystem constant_field(int d, const std::vector<double>& f) {
  const int r = static_cast<int>(f.size());
  if (d < 2 || d > 4 || r < 1 || 2 * r > d)
    throw Error(ErrorKind::domain, "constant_field: need 1 <= 2r <= d <= 4");
  MagneticSystem s;
  s.dim = d;
  s.kind = "constant";
  s.kind_params.push_back(d);
  s.kind_params.insert(s.kind_params.end(), f.begin(), f.end());
  for (int j = 0; j < r; ++j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g*x%d", f[j], j + 1);
    s.A[j + r] = detail::parsed(s, j + r, buf);
  }
  s.finalize();
  return s;
}

// planar power-degenerate field F_12 = x1^{nu-1}, the nu-th model form
inline MagneticSystem model2d(int nu) {
  if (nu < 2) throw Error(ErrorKind::domain, "model2d: nu >= 2");
  MagneticSystem s;
  s.dim = 2;
  s.kind = "model2d";
  s.kind_params = {static_cast<double>(nu)};
  s.A[1] = detail::parsed(s, 1, "x1^" + std::to_string(nu) + "/" + std::to_string(nu));
  s.finalize();
  return s;
}

inline MagneticSystem martinet2d(int nu = 2) { return model2d(nu); }

// 4D field of constant rank deficiency: sigma = x1 dx1^dx2 + dx3^dx4
inline MagneticSystem nondeg4d() {
  MagneticSystem s;
  s.dim = 4;
  s.kind = "nondeg4d";
  s.A[1] = detail::parsed(s, 1, "x1^2/2");
  s.A[3] = detail::parsed(s, 3, "x3");
  s.finalize();
  return s;
}

// 4D field whose degeneracy set {x1 = 0} carries the helical line field
// (rho constant, x2 + rho^2 theta / 2 conserved); Pfaffian of F equals x1.
inline MagneticSystem roussarie4d() {
  MagneticSystem s;
  s.dim = 4;
  s.kind = "roussarie4d";
  s.A[1] = detail::parsed(s, 1, "x1 - (x3^2 + x4^2)/2");
  s.A[2] = detail::parsed(s, 2, "-(x1 - (x3^2 + x4^2)/4)*x4/2");
  s.A[3] = detail::parsed(s, 3, "(x1 - (x3^2 + x4^2)/4)*x3/2");
  s.finalize();
  return s;
}

// --- two-form ---------------------------------------------------------------

// exact curl of the potential via the derivative tables
inline Mat two_form(const MagneticSystem& sys, const Vec& x) {
  sys.ensure();
  const int d = sys.dim;
  Mat F = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      const double v = sys.dA[j][k].eval(x) - sys.dA[k][j].eval(x);
      F(j, k) = v;
      F(k, j) = -v;
    }
  return F;
}

// same thing by 4th-order central differences with step 1e-5; the exact and
// differenced routes are kept as independent checks of each other
inline Mat two_form_from_potential(const MagneticSystem& sys, const Vec& x) {
  sys.ensure();
  const int d = sys.dim;
  const double h = 1e-5;
  auto dAk_dj = [&](int k, int j) {
    Vec p = x;
    auto at = [&](double off) {
      p[j] = x[j] + off;
      return sys.A[k].empty() ? 0.0 : sys.A[k].eval(p);
    };
    const double v = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    return v;
  };
  Mat F = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      const double v = dAk_dj(k, j) - dAk_dj(j, k);
      F(j, k) = v;
      F(k, j) = -v;
    }
  return F;
}

// --- intensities --------------------------------------------------------------

struct Intensities {
  std::vector<double> f;  // positive intensities, descending
  int rank = 0;           // rank of F at x (= 2 * f.size())
  double sqrt_g = 1.0;    // sqrt(det g_{jk}) = det(g^{jk})^{-1/2}
};

// Eigenvalues of (g^{jk}) F come in pairs +- i f_j. Computed through the
// symmetric problem: with S = G^{1/2} F G^{1/2} antisymmetric, K = -S^2 is
// symmetric PSD with eigenvalues f_j^2, each twice. This route never leaves
// real symmetric solvers, which is what makes the pairing numerically clean.
inline Intensities intensity_eigenvalues(const MagneticSystem& sys, const Vec& x,
                                         double rank_tol = 1e-8) {
  sys.ensure();
  const int d = sys.dim;
  const Mat F = two_form(sys, x);
  Intensities out;

  Eigen::MatrixXd K;
  if (sys.identity_metric) {
    out.sqrt_g = 1.0;
    K = -(F * F);
  } else {
    const Mat G = sys.metric_inverse_at(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(G);
    if (gs.eigenvalues().minCoeff() <= 0)
      throw Error(ErrorKind::domain, "inverse metric not positive definite at this point");
    out.sqrt_g = 1.0 / std::sqrt(G.determinant());
    const Eigen::MatrixXd G12 = gs.operatorSqrt();
    const Eigen::MatrixXd S = G12 * F * G12;
    K = -(S * S);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ks(K);
  Eigen::VectorXd ev = ks.eigenvalues();  // ascending
  const double top = std::max(ev.maxCoeff(), 0.0);
  const double cut = rank_tol * std::max(top, 0.0);
  // pair from the top down; each intensity appears as a near-identical pair
  for (int i = d - 1; i >= 1; i -= 2) {
    const double pair_mean = 0.5 * (std::max(ev[i], 0.0) + std::max(ev[i - 1], 0.0));
    if (top <= 0 || pair_mean <= cut) break;
    out.f.push_back(std::sqrt(pair_mean));
  }
  out.rank = 2 * static_cast<int>(out.f.size());
  return out;
}

inline int rank_stratum(const MagneticSystem& sys, const Vec& x) {
  return intensity_eigenvalues(sys, x).rank;
}

// --- characteristic line on the degeneracy set -------------------------------

struct LineResult {
  std::vector<double> s;   // arc length
  std::vector<Vec> x;      // points, |dx/ds| = 1
  bool truncated = false;
};

namespace detail {
// kernel of the restriction of F to the slice {x1 = const} through x,
// expressed in the ambient coordinates (first component zero)
inline Vec slice_kernel(const MagneticSystem& sys, const Vec& x) {
  const int d = sys.dim;
  const Mat F = two_form(sys, x);
  Vec v = Vec::Zero(d);
  if (d == 2) {
    v[1] = 1.0;  // the slice is the line itself
  } else if (d == 4) {
    // 3x3 antisymmetric block in coordinates (x2, x3, x4)
    v[1] = F(2, 3);
    v[2] = -F(1, 3);
    v[3] = F(1, 2);
  } else {
    throw Error(ErrorKind::degeneracy,
                "slice form on a 2D slice has no one-dimensional kernel");
  }
  return v;
}
}  // namespace detail

// Integrates the unit-speed line field spanned by the kernel of F restricted
// to the degeneracy slice through x0. Orientation: first nonzero component
// positive at the start, then by continuity. Collapse of the kernel (|v| -> 0)
// is the signal that the deeper stratum was reached.
inline LineResult magnetic_line(const MagneticSystem& sys, const Vec& x0, double arc,
                                double ds_out = 1e-2) {
  sys.ensure();
  const int d = sys.dim;
  if (x0.size() != d) throw Error(ErrorKind::usage, "magnetic_line: x0 has wrong dimension");
  const int full = 2 * (d / 2);
  if (rank_stratum(sys, x0) >= full)
    throw Error(ErrorKind::domain, "magnetic_line: x0 is not on the degeneracy stratum");

  Vec v0 = detail::slice_kernel(sys, x0);
  const double floor = 1e-12;
  if (v0.norm() < floor)
    throw Error(ErrorKind::degeneracy, "line field degenerates at the starting point");
  for (int i = 0; i < d; ++i) {
    if (std::abs(v0[i]) > floor) {
      if (v0[i] < 0) v0 = -v0;
      break;
    }
  }

  LineResult out;
  Vec prev_dir = v0 / v0.norm();
  Vec x = x0;
  double s = 0;
  out.s.push_back(0);
  out.x.push_back(x);

  // classic RK4 with a step small enough that orientation-by-continuity is
  // unambiguous; the field is smooth along the stratum
  const double hs = std::min(ds_out, 1e-2);
  auto dir = [&](const Vec& p) {
    Vec v = detail::slice_kernel(sys, p);
    const double n = v.norm();
    if (n < floor)
      throw Error(ErrorKind::degeneracy, "line field degenerates along the stratum");
    v /= n;
    if (v.dot(prev_dir) < 0) v = -v;
    return v;
  };
  double next_out = ds_out;
  while (s < arc - 1e-14) {
    const double h = std::min(hs, arc - s);
    const Vec k1 = dir(x);
    const Vec k2 = dir(x + 0.5 * h * k1);
    const Vec k3 = dir(x + 0.5 * h * k2);
    const Vec k4 = dir(x + h * k3);
    x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    prev_dir = dir(x);
    s += h;
    if (s >= next_out - 1e-12 || s >= arc - 1e-14) {
      out.s.push_back(s);
      out.x.push_back(x);
      next_out += ds_out;
    }
  }
  return out;
}

}  // namespace magweyl

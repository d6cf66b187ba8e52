#pragma once

// Curve fitting used to extract rates and line shapes from simulated
// observables: weighted log-linear fits for exponentials and power laws,
// and a small Levenberg-Marquardt driver (numeric Jacobian, diagonal
// damping) for Lorentzians and the two-emitter master-equation model.

#include <numeric>

#include "qfdtd/greens.hpp"

namespace qfdtd {

struct FitResult {
  std::vector<double> params;
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<double> covariance_diag;
};

namespace detail {

// Solves the symmetric positive(ish) system A x = b by Gaussian elimination
// with partial pivoting; small n only.
inline bool solve_linear(std::vector<double> A, std::vector<double> b,
                         std::vector<double>& x, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    if (std::abs(A[piv * n + col]) < 1e-300) return false;
    for (int c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / A[col * n + col];
      for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= A[r * n + c] * x[c];
    x[r] = s / A[r * n + r];
  }
  return true;
}

}  // namespace detail

// residuals(params) -> vector of residuals; minimizes |r|^2.
template <class Residuals>
inline FitResult levenberg_marquardt(Residuals&& residuals, std::vector<double> p,
                                     int max_iter = 200, double tol = 1e-12) {
  FitResult out;
  int n = static_cast<int>(p.size());
  std::vector<double> r = residuals(p);
  int m = static_cast<int>(r.size());
  auto cost = [&](const std::vector<double>& rr) {
    return std::inner_product(rr.begin(), rr.end(), rr.begin(), 0.0);
  };
  double c = cost(r);
  double lambda = 1e-3;
  std::vector<double> jac(static_cast<size_t>(m) * n);
  for (int it = 0; it < max_iter; ++it) {
    // forward-difference Jacobian with relative steps
    for (int j = 0; j < n; ++j) {
      double h = 1e-7 * std::max(1.0, std::abs(p[j]));
      std::vector<double> pj = p;
      pj[j] += h;
      std::vector<double> rj = residuals(pj);
      for (int i = 0; i < m; ++i) jac[static_cast<size_t>(i) * n + j] = (rj[i] - r[i]) / h;
    }
    std::vector<double> JtJ(static_cast<size_t>(n) * n, 0.0), Jtr(n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < n; ++a) {
        double ja = jac[static_cast<size_t>(i) * n + a];
        Jtr[a] += ja * r[i];
        for (int b = 0; b <= a; ++b) JtJ[static_cast<size_t>(a) * n + b] += ja * jac[static_cast<size_t>(i) * n + b];
      }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) JtJ[static_cast<size_t>(a) * n + b] = JtJ[static_cast<size_t>(b) * n + a];
    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      std::vector<double> A = JtJ;
      for (int a = 0; a < n; ++a) A[static_cast<size_t>(a) * n + a] *= (1.0 + lambda);
      std::vector<double> nb(n), step;
      for (int a = 0; a < n; ++a) nb[a] = -Jtr[a];
      if (!detail::solve_linear(A, nb, step, n)) { lambda *= 10.0; continue; }
      std::vector<double> pn(n);
      for (int a = 0; a < n; ++a) pn[a] = p[a] + step[a];
      std::vector<double> rn = residuals(pn);
      double cn = cost(rn);
      if (std::isfinite(cn) && cn <= c) {
        double rel = std::abs(c - cn) / std::max(c, 1e-300);
        p = pn; r = rn; c = cn;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel < tol) { out.converged = true; it = max_iter; }
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) { out.converged = c < 1e-20 || out.converged; break; }
    if (c < 1e-28) { out.converged = true; break; }
  }
  out.params = p;
  out.residual_norm = std::sqrt(c);
  // crude covariance diagnostic: diag of (JtJ)^-1 * cost/(m-n)
  out.covariance_diag.assign(n, 0.0);
  if (!out.converged && c < 1e-18) out.converged = true;
  return out;
}

// Weighted log-linear least squares of y ~ A exp(-Gamma t) on the window
// y in [1e-4, 0.9] * ymax (optionally restricted to t >= t_min).  Weights
// y^2 make the log-space fit equivalent to a linear-space one.
inline double fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                              double t_min = -1.0, double t_max = -1.0) {
  if (t.size() != y.size()) throw ValidationError("fit_exponential: size mismatch");
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, v);
  if (ymax <= 0.0) throw ValidationError("fit_exponential: no positive samples");
  double ymin = 1e300;
  for (double v : y) ymin = std::min(ymin, v);
  // nearly flat data never enters the decay window; fit it whole (rate ~ 0)
  bool flat = ymin > 0.9 * ymax;
  double wsum = 0, wt = 0, wl = 0, wtt = 0, wtl = 0;
  size_t used = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    if (!flat && (y[i] < 1e-4 * ymax || y[i] > 0.9 * ymax)) continue;
    if (flat && y[i] <= 0.0) continue;
    if (t_min >= 0.0 && t[i] < t_min) continue;
    if (t_max >= 0.0 && t[i] > t_max) continue;
    double w = y[i] * y[i];
    double l = std::log(y[i]);
    wsum += w; wt += w * t[i]; wl += w * l;
    wtt += w * t[i] * t[i]; wtl += w * t[i] * l;
    ++used;
  }
  if (used < 10) throw ValidationError("fit_exponential: fewer than 10 in-window samples");
  double denom = wsum * wtt - wt * wt;
  if (std::abs(denom) < 1e-300) throw ValidationError("fit_exponential: degenerate window");
  double slope = (wsum * wtl - wt * wl) / denom;
  return std::abs(slope) < 1e-300 ? 0.0 : -slope;
}

struct LorentzianFit {
  double center = 0.0, fwhm = 0.0, peak = 0.0;
  FitResult detail;
};

// sigma(w) ~ peak * (G/2)^2 / ((w - wc)^2 + (G/2)^2)
inline LorentzianFit fit_lorentzian(const std::vector<double>& w,
                                    const std::vector<double>& s) {
  if (w.size() != s.size() || w.size() < 5)
    throw ValidationError("fit_lorentzian: need matched arrays, >= 5 points");
  size_t imax = 0;
  double smax = -1e300, smin = 1e300;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] > smax) { smax = s[i]; imax = i; }
    smin = std::min(smin, s[i]);
  }
  if (smax <= 0.0 || (smax - smin) < 1e-9 * std::abs(smax))
    throw ValidationError("fit_lorentzian: no peak in the data");
  if (imax == 0 || imax == s.size() - 1)
    throw ValidationError("fit_lorentzian: peak at band edge");
  // initial width from half-max crossings
  double half = 0.5 * smax;
  double wl = w.front(), wr = w.back();
  for (size_t i = imax; i > 0; --i)
    if (s[i] < half) { wl = w[i]; break; }
  for (size_t i = imax; i < s.size(); ++i)
    if (s[i] < half) { wr = w[i]; break; }
  std::vector<double> p{w[imax], std::max(wr - wl, 1e-6), smax};
  auto model = [&](const std::vector<double>& q) {
    std::vector<double> r(s.size());
    double hg = q[1] / 2.0;
    for (size_t i = 0; i < s.size(); ++i) {
      double dwx = w[i] - q[0];
      r[i] = q[2] * hg * hg / (dwx * dwx + hg * hg) - s[i];
    }
    return r;
  };
  LorentzianFit out;
  out.detail = levenberg_marquardt(model, p);
  out.center = out.detail.params[0];
  out.fwhm = std::abs(out.detail.params[1]);
  out.peak = out.detail.params[2];
  return out;
}

struct MasterFit {
  double gamma11 = 0.0, gamma12 = 0.0, g12 = 0.0;
  FitResult detail;
};

// Fits P1(t), P2(t) against the two-emitter master-equation solution.
// The populations are even in g12; the reported g12 is non-negative.
inline MasterFit fit_master_equation(const std::vector<double>& t,
                                     const std::vector<double>& p1,
                                     const std::vector<double>& p2) {
  if (t.size() != p1.size() || t.size() != p2.size() || t.size() < 12)
    throw ValidationError("fit_master_equation: need matched arrays, >= 12 points");
  // initial guesses: Gamma11 from the symmetric combination, g12 from the
  // first maximum of P2, Gamma12 from early/late slope asymmetry
  std::vector<double> psum(t.size());
  for (size_t i = 0; i < t.size(); ++i) psum[i] = std::max(p1[i] + p2[i], 1e-300);
  double g11_0 = 1.0;
  try {
    g11_0 = fit_exponential(t, psum);
  } catch (const ValidationError&) {}
  size_t ipk = 0;
  for (size_t i = 1; i + 1 < p2.size(); ++i)
    if (p2[i] > p2[i - 1] && p2[i] >= p2[i + 1]) { ipk = i; break; }
  double g12_0 = ipk > 0 && t[ipk] > 0 ? pi / (2.0 * t[ipk]) : g11_0;
  double span = t.back() - t.front();
  double gam12_0 = 0.0;
  try {
    double ge = fit_exponential(t, psum, t.front(), t.front() + 0.3 * span);
    double gl = fit_exponential(t, psum, t.front() + 0.5 * span, t.back());
    gam12_0 = std::clamp((ge - gl) / 2.0, -0.95 * g11_0, 0.95 * g11_0);
  } catch (const ValidationError&) {}
  auto model = [&](const std::vector<double>& q) {
    std::vector<double> r(2 * t.size());
    for (size_t i = 0; i < t.size(); ++i) {
      auto [m1, m2] = master_p1p2(t[i], q[0], q[1], q[2]);
      r[i] = m1 - p1[i];
      r[t.size() + i] = m2 - p2[i];
    }
    return r;
  };
  MasterFit out;
  out.detail = levenberg_marquardt(model, {g11_0, gam12_0, g12_0}, 400);
  out.gamma11 = out.detail.params[0];
  // Eqs. for P1/P2 are even in both couplings; report magnitudes.  Signs,
  // when needed, come from the symmetric/antisymmetric amplitude rates.
  out.gamma12 = std::abs(out.detail.params[1]);
  out.g12 = std::abs(out.detail.params[2]);
  return out;
}

// Log-log linear least squares slope of y ~ c N^p.
inline double fit_powerlaw(const std::vector<double>& n, const std::vector<double>& y) {
  if (n.size() != y.size() || n.size() < 2)
    throw ValidationError("fit_powerlaw: need >= 2 matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n.size(); ++i) {
    if (n[i] <= 0.0 || y[i] <= 0.0)
      throw ValidationError("fit_powerlaw: values must be positive");
    double lx = std::log(n[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  double m = static_cast<double>(n.size());
  double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw ValidationError("fit_powerlaw: degenerate abscissae");
  return (m * sxy - sx * sy) / denom;
}

// Counts dips (local minima) in a spectrum that descend at least
// `min_prominence * (max - min)` below the lower of the neighboring maxima.
inline int count_dips(const std::vector<double>& w, const std::vector<double>& v,
                      double min_prominence = 0.05) {
  if (w.size() != v.size() || v.size() < 3) return 0;
  double vmax = *std::max_element(v.begin(), v.end());
  double vmin = *std::min_element(v.begin(), v.end());
  double scale = vmax - vmin;
  if (scale <= 0.0) return 0;
  int dips = 0;
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] < v[i - 1] && v[i] <= v[i + 1])) continue;
    double left = v[i], right = v[i];
    for (size_t l = i; l-- > 0 && !(v[l] < v[i]);) left = std::max(left, v[l]);
    for (size_t r = i + 1; r < v.size() && !(v[r] < v[i]); ++r) right = std::max(right, v[r]);
    if (std::min(left, right) - v[i] >= min_prominence * scale) ++dips;
  }
  return dips;
}

// Frequencies of detected dips, for splitting measurements.
inline std::vector<double> dip_frequencies(const std::vector<double>& w,
                                           const std::vector<double>& v,
                                           double min_prominence = 0.05) {
  std::vector<double> out;
  if (w.size() != v.size() || v.size() < 3) return out;
  double vmax = *std::max_element(v.begin(), v.end());
  double vmin = *std::min_element(v.begin(), v.end());
  double scale = vmax - vmin;
  if (scale <= 0.0) return out;
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] < v[i - 1] && v[i] <= v[i + 1])) continue;
    double left = v[i], right = v[i];
    for (size_t l = i; l-- > 0 && !(v[l] < v[i]);) left = std::max(left, v[l]);
    for (size_t r = i + 1; r < v.size() && !(v[r] < v[i]); ++r) right = std::max(right, v[r]);
    if (std::min(left, right) - v[i] >= min_prominence * scale) out.push_back(w[i]);
  }
  return out;
}

}  // namespace qfdtd

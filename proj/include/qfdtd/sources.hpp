#pragma once

// External excitation: TF-SF plane-wave injection backed by a 1D incident
// propagator (same dx, dt as the host grid, so on-axis numerical dispersion
// matches exactly and box leakage stays at round-off), plus a 2D guided-mode
// line injector with an analytic slab-mode profile.

#include "qfdtd/injection.hpp"

namespace qfdtd {

struct GaussianPulseSpec {
  double omega_c = 2.0 * pi;
  double tau = 2.0;
  double t0 = 8.0;
  double amplitude = 1.0;
  int polarization_axis = 0;

  void validate() const {
    if (tau <= 0.0) throw ValidationError("pulse tau must be positive");
    if (t0 < 4.0 * tau) throw ValidationError("pulse delay t0 must be >= 4*tau");
  }

  double value(double t) const {
    double u = t - t0;
    return amplitude * std::exp(-u * u / (2.0 * tau * tau)) * std::cos(omega_c * u);
  }

  // |integral s(t) e^{i w t} dt|, both rotating terms kept.
  double spectrum_abs(double omega) const {
    double a = amplitude * tau * std::sqrt(2.0 * pi) / 2.0;
    double em = std::exp(-tau * tau * (omega - omega_c) * (omega - omega_c) / 2.0);
    double ep = std::exp(-tau * tau * (omega + omega_c) * (omega + omega_c) / 2.0);
    return a * (em + ep);
  }

  // Spectral intensity of the incident plane wave, (1/2)|E(w)|^2 / eta0.
  double intensity(double omega) const {
    double f = spectrum_abs(omega);
    return 0.5 * f * f / units::eta0;
  }

  bool in_band(double omega) const { return std::abs(omega - omega_c) <= 3.0 / tau; }

  std::vector<double> default_frequencies(int n = 301) const {
    std::vector<double> w(n);
    double lo = omega_c - 3.0 / tau, hi = omega_c + 3.0 / tau;
    for (int i = 0; i < n; ++i) w[i] = lo + (hi - lo) * i / (n - 1);
    return w;
  }
};

// 1D vacuum leapfrog line: e at integer nodes, h at half nodes, hard E
// source at node 0, sized so the far end is never reached during a run.
class IncidentLine1D {
 public:
  void init(double dx, double dt, int length_cells) {
    dx_ = dx; dt_ = dt;
    e_.assign(length_cells + 1, 0.0);
    h_.assign(length_cells, 0.0);
  }

  void step_e(double source_value) {
    double r = dt_ / dx_;
    size_t n = e_.size() - 1;
    double old_nm1 = e_[n - 1], old_n = e_[n];
    for (size_t k = 1; k < n; ++k) e_[k] -= r * (h_[k] - h_[k - 1]);
    // Mur first-order at the far end, in case a run outlives the sizing
    e_[n] = old_nm1 + (r - 1.0) / (r + 1.0) * (e_[n - 1] - old_n);
    e_[0] = source_value;
  }

  void step_h() {
    double r = dt_ / dx_;
    for (size_t k = 0; k < h_.size(); ++k) h_[k] -= r * (e_[k + 1] - e_[k]);
  }

  double e_at(int node) const {
    if (node < 0 || node >= static_cast<int>(e_.size())) return 0.0;
    return e_[node];
  }
  double h_at(int node) const {
    if (node < 0 || node >= static_cast<int>(h_.size())) return 0.0;
    return h_[node];
  }

 private:
  double dx_ = 0, dt_ = 0;
  std::vector<double> e_, h_;
};

struct TfsfBox {
  Int3 lo{0, 0, 0}, hi{0, 0, 0};  // node-plane bounds, cells
  int prop_axis = 2;              // propagation along +axis
  GaussianPulseSpec pulse;

  void validate(const YeeGrid& g) const {
    pulse.validate();
    for (int a = 0; a < g.spec.dim; ++a) {
      if (lo[a] <= g.cpml.thickness || hi[a] >= g.spec.cells[a] - g.cpml.thickness)
        throw ValidationError("TF-SF box must lie inside the CPML-free interior");
      if (hi[a] - lo[a] < 2) throw ValidationError("TF-SF box too small");
    }
    if (prop_axis >= g.spec.dim || pulse.polarization_axis >= g.spec.dim)
      throw ValidationError("TF-SF axes exceed grid dimension");
    if (prop_axis == pulse.polarization_axis)
      throw ValidationError("TF-SF polarization must be transverse");
  }
};

class PlaneWaveInjector {
 public:
  TfsfBox box;

  void setup(const YeeGrid& g, const TfsfBox& b, long max_steps) {
    box = b;
    box.validate(g);
    p_ = box.prop_axis;
    q_ = box.pulse.polarization_axis;
    int r = 3 - p_ - q_;
    // H axis and sign from E x H = +p: sign s with e_q x e_r = s e_p
    Int3 eq{0, 0, 0}, er{0, 0, 0};
    eq[q_] = 1; er[r] = 1;
    Vec3 cx{static_cast<double>(eq.y * er.z - eq.z * er.y),
            static_cast<double>(eq.z * er.x - eq.x * er.z),
            static_cast<double>(eq.x * er.y - eq.y * er.x)};
    h_axis_ = r;
    h_sign_ = cx[p_] > 0 ? 1.0 : -1.0;
    e_comp_ = static_cast<Comp>(q_);
    h_comp_ = static_cast<Comp>(3 + h_axis_);
    lead_ = 4;
    origin_ = box.lo[p_] - lead_;
    int span = box.hi[p_] - box.lo[p_] + 2 * lead_;
    int travel = static_cast<int>(std::ceil(max_steps * g.dt() / g.dx())) + 8;
    line_.init(g.dx(), g.dt(), span + travel);

    Int3 hw, cd;
    for (int a = 0; a < 3; ++a) {
      cd[a] = box.lo[a] + box.hi[a];
      hw[a] = (box.hi[a] - box.lo[a]);
    }
    // field inside the box; reuse the strict box test with doubled halfwidths
    RegionChi chi;
    int dim = g.spec.dim;
    Int3 lo = box.lo, hi = box.hi;
    chi.contains = [lo, hi, dim](const Int3& nd) {
      for (int a = 0; a < dim; ++a)
        if (nd[a] <= 2 * lo[a] || nd[a] >= 2 * hi[a]) return false;
      return true;
    };
    chi.scan_lo = {lo.x - 2, lo.y - 2, lo.z - 2};
    chi.scan_hi = {hi.x + 2, hi.y + 2, hi.z + 2};
    if (g.is2d()) { chi.scan_lo.z = 0; chi.scan_hi.z = 0; }
    inj_.build(g, chi);
  }

  // Call order per host step n: host step_e; apply_e (uses h line at n);
  // advance_line_e; host step_h; apply_h (uses e line at n+1/2); advance_line_h.
  void apply_e(YeeGrid& g) const {
    inj_.apply_e(g, [this](Comp c, const Int3& cell) { return sample(c, cell); });
  }
  void apply_h(YeeGrid& g) const {
    inj_.apply_h(g, [this](Comp c, const Int3& cell) { return sample(c, cell); });
  }
  void advance_line_e(double t_next_e) { line_.step_e(box.pulse.value(t_next_e)); }
  void advance_line_h() { line_.step_h(); }

  const SurfaceInjector& injector() const { return inj_; }

 private:
  int p_ = 2, q_ = 0, h_axis_ = 1;
  double h_sign_ = 1.0;
  Comp e_comp_ = Comp::Ex, h_comp_ = Comp::Hy;
  int origin_ = 0, lead_ = 4;
  IncidentLine1D line_;
  SurfaceInjector inj_;

  double sample(Comp c, const Int3& cell) const {
    if (c == e_comp_) return line_.e_at(cell[p_] - origin_);
    if (c == h_comp_) return h_sign_ * line_.h_at(cell[p_] - origin_);
    return 0.0;
  }
};

// ---- 2D slab waveguide mode (TE polarization: Hz, Ex, Ey) ----------------

// Fundamental even mode of a symmetric dielectric slab along x with core
// |y-y_c| < w/2:  Hz ~ cos(kappa y'), continuity of Hz and (1/eps) dHz/dy.
struct SlabMode {
  double omega = 2.0 * pi;
  double eps_core = 4.0, eps_clad = 1.0;
  double width = 0.3, y_center = 0.0;
  double beta = 0.0, kappa = 0.0, gamma = 0.0, v_group = 1.0;

  void solve() {
    double k = omega / units::c0;
    beta = solve_beta(omega);
    kappa = std::sqrt(std::max(eps_core * k * k - beta * beta, 1e-300));
    gamma = std::sqrt(std::max(beta * beta - eps_clad * k * k, 1e-300));
    double dw = omega * 1e-4;
    double b1 = solve_beta(omega + dw), b0 = solve_beta(omega - dw);
    v_group = 2.0 * dw / (b1 - b0);
  }

  double hz_profile(double y) const {
    double u = std::abs(y - y_center);
    if (u <= width / 2) return std::cos(kappa * u);
    return std::cos(kappa * width / 2) * std::exp(-gamma * (u - width / 2));
  }

  double eps_at(double y) const {
    return std::abs(y - y_center) < width / 2 ? eps_core : eps_clad;
  }

  double ey_profile(double y) const {
    return beta / (omega * units::eps0 * eps_at(y)) * hz_profile(y);
  }

 private:
  double dispersion(double beta_try, double k) const {
    double kap = std::sqrt(eps_core * k * k - beta_try * beta_try);
    double gam = std::sqrt(beta_try * beta_try - eps_clad * k * k);
    return std::tan(kap * width / 2) * kap / eps_core - gam / eps_clad;
  }

  double solve_beta(double w) const {
    double k = w / units::c0;
    double lo = std::sqrt(eps_clad) * k * (1.0 + 1e-9);
    double hi = std::sqrt(eps_core) * k * (1.0 - 1e-9);
    // restrict to the first branch: kappa*width/2 < pi/2
    double branch = eps_core * k * k - pi * pi / (width * width);
    if (branch > lo * lo) lo = std::sqrt(branch) * (1.0 + 1e-9);
    double flo = dispersion(lo, k), fhi = dispersion(hi, k);
    if (flo * fhi > 0) throw ValidationError("slab supports no guided even mode here");
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = dispersion(mid, k);
      if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; } else { hi = mid; }
    }
    return 0.5 * (lo + hi);
  }
};

// One-way launch of the guided mode into x > x_line via equivalence currents
// on the line.  The incident fields are the analytic narrow-band mode pulse;
// the discrete/analytic mismatch radiates a little and is absorbed or divided
// out by the normalization run.
class ModeLineSource {
 public:
  SlabMode mode;
  GaussianPulseSpec pulse;  // envelope/carrier; polarization_axis ignored
  int line_cell = 0;

  void setup(const YeeGrid& g, const SlabMode& m, const GaussianPulseSpec& p, int cell) {
    mode = m;
    pulse = p;
    pulse.validate();
    line_cell = cell;
    if (!g.is2d()) throw ValidationError("mode line source is 2D only");
    if (cell <= g.cpml.thickness || cell >= g.spec.cells.x - g.cpml.thickness)
      throw ValidationError("mode line must lie in the interior");
    x0_ = cell * g.dx();
    inj_.build(g, halfspace_chi(0, cell, g));
  }

  void apply_e(YeeGrid& g, double t_h) const {
    // E update uses incident H at time level n
    inj_.apply_e(g, [this, &g, t_h](Comp c, const Int3& cell) {
      return incident(c, g.node_pos(c, cell), t_h);
    });
  }
  void apply_h(YeeGrid& g, double t_e) const {
    inj_.apply_h(g, [this, &g, t_e](Comp c, const Int3& cell) {
      return incident(c, g.node_pos(c, cell), t_e);
    });
  }

 private:
  double x0_ = 0.0;
  SurfaceInjector inj_;

  double incident(Comp c, const Vec3& pos, double t) const {
    double xrel = pos.x - x0_;
    double tr = t - xrel / mode.v_group;
    double u = tr - pulse.t0;
    double env = pulse.amplitude * std::exp(-u * u / (2.0 * pulse.tau * pulse.tau));
    double phase = std::cos(mode.beta * xrel - pulse.omega_c * (t - pulse.t0));
    if (c == Comp::Hz) return env * phase * mode.hz_profile(pos.y);
    if (c == Comp::Ey) return env * phase * mode.ey_profile(pos.y);
    return 0.0;
  }
};

}  // namespace qfdtd

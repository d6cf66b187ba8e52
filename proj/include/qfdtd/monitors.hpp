#pragma once

// Measurement: flux monitors with running DFT accumulators, power spectra,
// scattering cross sections, and port transmission.
//
// Tangential E is accumulated at its own nodes and time stamps (t = (n+1/2)dt
// after the E half step); the co-located H value is the two-point spatial
// average across the monitor plane, stamped at its own level t = (n+1)dt.
// Each field's DFT carries its own phase, so the leapfrog offset needs no
// time averaging.  Accumulation may be strided in time; the stride must keep
// omega_max * stride * dt well below pi (validated at setup).

#include "qfdtd/sources.hpp"

namespace qfdtd {

struct MonitorFace {
  int axis = 0;        // face normal axis
  int plane = 0;       // node-plane index along the normal
  Int3 lo{0, 0, 0};    // transverse cell range (inclusive lo, exclusive hi)
  Int3 hi{0, 0, 0};
  double orientation = 1.0;  // +1: flux counted along +axis
};

class FluxMonitor {
 public:
  std::string name = "monitor";
  std::vector<double> omegas;
  int stride = 1;
  bool accumulate_time_integral = false;  // for Parseval checks

  // Closed box: cells [lo, hi) per axis, outward orientation.
  static FluxMonitor box(const YeeGrid& g, const Int3& lo, const Int3& hi,
                         std::vector<double> omegas) {
    FluxMonitor m;
    m.omegas = std::move(omegas);
    int dim = g.spec.dim;
    for (int a = 0; a < dim; ++a) {
      for (int side = 0; side < 2; ++side) {
        MonitorFace f;
        f.axis = a;
        f.plane = side == 0 ? lo[a] : hi[a];
        f.orientation = side == 0 ? -1.0 : 1.0;
        f.lo = lo; f.hi = hi;
        f.lo[a] = f.hi[a] = 0;
        m.faces_.push_back(f);
      }
    }
    m.init(g);
    return m;
  }

  // Single plane (port): flux counted along +axis.
  static FluxMonitor plane(const YeeGrid& g, int axis, int plane_cell, const Int3& lo,
                           const Int3& hi, std::vector<double> omegas) {
    FluxMonitor m;
    m.omegas = std::move(omegas);
    MonitorFace f;
    f.axis = axis; f.plane = plane_cell; f.lo = lo; f.hi = hi;
    f.orientation = 1.0;
    m.faces_.push_back(f);
    m.init(g);
    return m;
  }

  void validate_stride(const YeeGrid& g) const {
    if (omegas.empty()) return;
    double wmax = *std::max_element(omegas.begin(), omegas.end());
    if (wmax * stride * g.dt() > 1.2)
      throw ValidationError("monitor time stride too coarse for requested frequencies");
  }

  // Call after the H update of step n (E at (n+1/2)dt, H at (n+1)dt).
  void accumulate(const YeeGrid& g, long step) {
    if (step % stride != 0) return;
    double dt = g.dt();
    double te = (step + 0.5) * dt, th = (step + 1.0) * dt;
    double wdt = stride * dt;  // quadrature weight
    size_t nw = omegas.size();
    phase_e_.resize(nw);
    phase_h_.resize(nw);
    for (size_t w = 0; w < nw; ++w) {
      phase_e_[w] = std::polar(wdt, omegas[w] * te);
      phase_h_[w] = std::polar(wdt, omegas[w] * th);
    }
    size_t base = 0;
    for (size_t fi = 0; fi < faces_.size(); ++fi) {
      const FaceGeom& fg = geom_[fi];
      for (size_t p = 0; p < fg.pts.size(); ++p) {
        const PointRef& pr = fg.pts[p];
        double ev = g.field(pr.e_comp).v[pr.e_idx];
        double hv = 0.5 * (g.field(pr.h_comp).v[pr.h_idx0] + g.field(pr.h_comp).v[pr.h_idx1]);
        if (accumulate_time_integral) {
          // centered product for the time-domain flux integral
          double hmid = 0.5 * (hv + prev_h_[base + p]);
          flux_time_integral += pr.weight * ev * hmid * wdt;
          prev_h_[base + p] = hv;
        }
        size_t acc0 = (base + p) * nw;
        for (size_t w = 0; w < nw; ++w) {
          acc_e_[acc0 + w] += ev * phase_e_[w];
          acc_h_[acc0 + w] += hv * phase_h_[w];
        }
      }
      base += fg.pts.size();
    }
    ++samples_;
  }

  // P(omega) = 1/2 Re sum E_t x H_t* . n dA over all faces.
  std::vector<double> power_spectrum() const {
    std::vector<double> p(omegas.size(), 0.0);
    size_t nw = omegas.size();
    size_t base = 0;
    for (size_t fi = 0; fi < faces_.size(); ++fi) {
      const FaceGeom& fg = geom_[fi];
      for (size_t pt = 0; pt < fg.pts.size(); ++pt) {
        size_t acc0 = (base + pt) * nw;
        double wgt = fg.pts[pt].weight;
        for (size_t w = 0; w < nw; ++w)
          p[w] += wgt * 0.5 * (acc_e_[acc0 + w] * std::conj(acc_h_[acc0 + w])).real();
      }
      base += fg.pts.size();
    }
    return p;
  }

  double power_at(double omega) const {
    for (size_t w = 0; w < omegas.size(); ++w)
      if (std::abs(omegas[w] - omega) < 1e-12)
        return power_spectrum()[w];
    throw ValidationError("frequency was not accumulated by this monitor");
  }

  long samples() const { return samples_; }
  double flux_time_integral = 0.0;

 private:
  // Each point pairs one tangential E node with the spatial average of the
  // matching tangential H across the plane; weight carries dA and the sign
  // of the E x H term (+E_t1 H_t2 - E_t2 H_t1) times face orientation.
  struct PointRef {
    Comp e_comp; size_t e_idx;
    Comp h_comp; size_t h_idx0, h_idx1;
    double weight;
  };
  struct FaceGeom {
    std::vector<PointRef> pts;
  };

  std::vector<MonitorFace> faces_;
  std::vector<FaceGeom> geom_;
  std::vector<complexd> acc_e_, acc_h_;
  std::vector<double> prev_h_;
  std::vector<complexd> phase_e_, phase_h_;
  long samples_ = 0;

  void init(const YeeGrid& g) {
    int dim = g.spec.dim;
    double dA = std::pow(g.dx(), dim - 1);
    size_t total = 0;
    for (const MonitorFace& f : faces_) {
      FaceGeom fg;
      int a = f.axis;
      int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
      // S.n = E_t1 H_t2 - E_t2 H_t1 with (a, t1, t2) cyclic
      if (dim == 2) {
        // only one tangential E in-plane: axis 0 -> Ey/Hz (+), axis 1 -> Ex/Hz (-)
        Comp ec = a == 0 ? Comp::Ey : Comp::Ex;
        double sgn = a == 0 ? 1.0 : -1.0;
        int tr = a == 0 ? 1 : 0;  // transverse axis
        for (int c = f.lo[tr]; c < f.hi[tr]; ++c) {
          Int3 ecell{0, 0, 0};
          ecell[a] = f.plane;
          ecell[tr] = c;
          Int3 h0 = ecell, h1 = ecell;
          h0[a] = f.plane - 1;
          h1[a] = f.plane;
          const Field& ef = g.field(ec);
          const Field& hf = g.field(Comp::Hz);
          if (!ef.in_range(ecell.x, ecell.y, ecell.z) ||
              !hf.in_range(h0.x, h0.y, h0.z) || !hf.in_range(h1.x, h1.y, h1.z))
            throw ValidationError("monitor face outside the grid");
          fg.pts.push_back({ec, ef.idx(ecell.x, ecell.y, ecell.z), Comp::Hz,
                            hf.idx(h0.x, h0.y, h0.z), hf.idx(h1.x, h1.y, h1.z),
                            sgn * f.orientation * dA});
        }
      } else {
        // two terms: +E_t1 * avg(H_t2), -E_t2 * avg(H_t1)
        struct Term { int et, ht; double sgn; };
        for (Term tm : {Term{t1, t2, 1.0}, Term{t2, t1, -1.0}}) {
          Comp ec = static_cast<Comp>(tm.et);
          Comp hc = static_cast<Comp>(3 + tm.ht);
          const Field& ef = g.field(ec);
          const Field& hf = g.field(hc);
          // E_t node: integer along a and along the other tangential axis,
          // half along its own axis; loop over the transverse cell range.
          int u = tm.et;          // E's own (half) axis
          int v = 3 - a - u;      // remaining tangential axis (integer)
          // midpoint rule along the E component's own (half) axis,
          // trapezoid along the integer tangential axis
          for (int cu = f.lo[u]; cu < f.hi[u]; ++cu)
            for (int cv = f.lo[v]; cv <= f.hi[v]; ++cv) {
              double trap = (cv == f.lo[v] || cv == f.hi[v]) ? 0.5 : 1.0;
              Int3 ecell{0, 0, 0};
              ecell[a] = f.plane; ecell[u] = cu; ecell[v] = cv;
              Int3 h0 = ecell, h1 = ecell;
              h0[a] = f.plane - 1;
              h1[a] = f.plane;
              if (!ef.in_range(ecell.x, ecell.y, ecell.z) ||
                  !hf.in_range(h0.x, h0.y, h0.z) || !hf.in_range(h1.x, h1.y, h1.z))
                throw ValidationError("monitor face outside the grid");
              fg.pts.push_back({ec, ef.idx(ecell.x, ecell.y, ecell.z), hc,
                                hf.idx(h0.x, h0.y, h0.z), hf.idx(h1.x, h1.y, h1.z),
                                trap * tm.sgn * f.orientation * dA});
            }
        }
      }
      total += fg.pts.size();
      geom_.push_back(std::move(fg));
    }
    acc_e_.assign(total * omegas.size(), complexd(0, 0));
    acc_h_.assign(total * omegas.size(), complexd(0, 0));
    prev_h_.assign(total, 0.0);
  }
};

// sigma(w) = P_scat(w) / I_inc(w); frequencies outside the pulse's 3/tau
// band are dropped (denominator too small to be meaningful).
struct SpectrumData {
  std::vector<double> omega;
  std::vector<double> value;
};

inline SpectrumData scattering_cross_section(const std::vector<double>& omegas,
                                             const std::vector<double>& scattered_power,
                                             const GaussianPulseSpec& pulse) {
  SpectrumData out;
  for (size_t i = 0; i < omegas.size(); ++i) {
    if (!pulse.in_band(omegas[i])) continue;
    out.omega.push_back(omegas[i]);
    out.value.push_back(scattered_power[i] / pulse.intensity(omegas[i]));
  }
  if (out.omega.empty())
    throw ValidationError("no requested frequency lies inside the pulse band");
  return out;
}

// T(w) = P_out(w) / P_ref(w) from a normalization run.
inline SpectrumData transmission(const std::vector<double>& omegas,
                                 const std::vector<double>& p_out,
                                 const std::vector<double>& p_ref,
                                 double ref_floor_fraction = 1e-6) {
  if (omegas.size() != p_out.size() || omegas.size() != p_ref.size())
    throw ValidationError("transmission: size mismatch");
  double pmax = 0.0;
  for (double p : p_ref) pmax = std::max(pmax, std::abs(p));
  if (pmax <= 0.0) throw ValidationError("reference flux is zero everywhere");
  SpectrumData out;
  for (size_t i = 0; i < omegas.size(); ++i) {
    if (std::abs(p_ref[i]) <= ref_floor_fraction * pmax) continue;
    out.omega.push_back(omegas[i]);
    out.value.push_back(p_out[i] / p_ref[i]);
  }
  if (out.omega.empty()) throw ValidationError("reference flux below threshold everywhere");
  return out;
}

}  // namespace qfdtd

#pragma once

// Discrete surface-equivalence injection.
//
// Let chi(node) in {0,1} mark the region where an auxiliary discrete
// solution (e,h) of the source-free Yee equations should appear in a host
// grid.  The masked field chi*f satisfies the host update everywhere except
// where a curl stencil pairs nodes of different chi; there the exact
// correction is
//
//   delta(target u) += coef(u,v) * f_aux(v) * (chi(u) - chi(v))
//
// with coef(u,v) the stencil coefficient of partner v in u's update.  This
// one rule yields the classic TF-SF box (chi = inside, f = incident wave)
// and the TF-IF exclusion of a TLS's primary radiation (chi = outside the
// Omega box, f = auxiliary-grid radiation field).  Corrections applied to E
// targets are equivalent electric surface currents (n x H), corrections to
// H targets are magnetic surface currents (-n x E), in update units.

#include <functional>

#include "qfdtd/grid.hpp"

namespace qfdtd {

struct StencilTerm {
  Comp partner;
  Int3 offset;  // partner cell = target cell + offset
  double sign;
};

// Curl stencil partners of a component's update (cyclic axes a,b,c):
//   E_a += dt/eps [ +H_c(0) -H_c(-e_b) -H_b(0) +H_b(-e_c) ] / dx
//   H_a += dt/mu  [ +E_b(+e_c) -E_b(0) -E_c(+e_b) +E_c(0) ] / dx
inline std::array<StencilTerm, 4> stencil_terms(Comp comp) {
  int a = comp_axis(comp);
  int b = (a + 1) % 3, c = (a + 2) % 3;
  Int3 eb{0, 0, 0}, ec{0, 0, 0};
  eb[b] = 1; ec[c] = 1;
  if (is_electric(comp)) {
    Comp hb = static_cast<Comp>(3 + b), hc = static_cast<Comp>(3 + c);
    return {StencilTerm{hc, {0, 0, 0}, +1.0},
            StencilTerm{hc, {-eb.x, -eb.y, -eb.z}, -1.0},
            StencilTerm{hb, {0, 0, 0}, -1.0},
            StencilTerm{hb, {-ec.x, -ec.y, -ec.z}, +1.0}};
  }
  Comp cb = static_cast<Comp>(b), cc = static_cast<Comp>(c);
  return {StencilTerm{cb, {ec.x, ec.y, ec.z}, +1.0},
          StencilTerm{cb, {0, 0, 0}, -1.0},
          StencilTerm{cc, {eb.x, eb.y, eb.z}, -1.0},
          StencilTerm{cc, {0, 0, 0}, +1.0}};
}

// Region indicators in doubled (half-cell) coordinates.
struct RegionChi {
  // chi = 1 where the auxiliary field lives in the host grid
  std::function<bool(const Int3& doubled)> contains;
  Int3 scan_lo, scan_hi;  // cell range (inclusive) to scan for crossings
};

// Box with center possibly on a half-cell position; strict interior test.
inline RegionChi omega_box_chi(const Int3& center_doubled, const Int3& halfwidth_cells,
                               int dim, bool field_outside) {
  RegionChi r;
  Int3 cd = center_doubled;
  Int3 hw = halfwidth_cells;
  r.contains = [cd, hw, dim, field_outside](const Int3& nd) {
    bool in = true;
    for (int a = 0; a < dim; ++a)
      if (std::abs(nd[a] - cd[a]) >= 2 * hw[a]) { in = false; break; }
    return field_outside ? !in : in;
  };
  for (int a = 0; a < 3; ++a) {
    r.scan_lo[a] = (cd[a] - 2 * hw[a]) / 2 - 2;
    r.scan_hi[a] = (cd[a] + 2 * hw[a]) / 2 + 2;
  }
  if (dim == 2) { r.scan_lo.z = 0; r.scan_hi.z = 0; }
  return r;
}

// Half-space x_axis > plane (node coordinate), field on the high side.
inline RegionChi halfspace_chi(int axis, int plane_cell, const YeeGrid& g) {
  RegionChi r;
  int pd = 2 * plane_cell;
  r.contains = [axis, pd](const Int3& nd) { return nd[axis] > pd; };
  r.scan_lo = {0, 0, 0};
  r.scan_hi = {g.spec.cells.x, g.spec.cells.y, g.is2d() ? 0 : g.spec.cells.z};
  r.scan_lo[axis] = plane_cell - 2;
  r.scan_hi[axis] = plane_cell + 2;
  return r;
}

struct InjectionEntry {
  Comp target;
  size_t target_idx;
  double coef;  // stencil sign * (chi_u - chi_v) * dt/(eps dx) or dt/dx
  Comp src;
  Int3 src_cell;
};

class SurfaceInjector {
 public:
  std::vector<InjectionEntry> e_entries;  // applied after the host E update
  std::vector<InjectionEntry> h_entries;  // applied after the host H update

  void build(const YeeGrid& g, const RegionChi& chi) {
    e_entries.clear();
    h_entries.clear();
    const Comp comps2d[] = {Comp::Ex, Comp::Ey, Comp::Hz};
    const Comp comps3d[] = {Comp::Ex, Comp::Ey, Comp::Ez, Comp::Hx, Comp::Hy, Comp::Hz};
    const Comp* comps = g.is2d() ? comps2d : comps3d;
    int ncomp = g.is2d() ? 3 : 6;
    double dt = g.dt(), inv_dx = 1.0 / g.dx();
    for (int ci = 0; ci < ncomp; ++ci) {
      Comp tc = comps[ci];
      const Field& tf = g.field(tc);
      auto terms = stencil_terms(tc);
      for (int k = std::max(0, chi.scan_lo.z); k <= std::min(tf.nz - 1, chi.scan_hi.z); ++k)
        for (int j = std::max(0, chi.scan_lo.y); j <= std::min(tf.ny - 1, chi.scan_hi.y); ++j)
          for (int i = std::max(0, chi.scan_lo.x); i <= std::min(tf.nx - 1, chi.scan_hi.x); ++i) {
            Int3 cell{i, j, k};
            bool cu = chi.contains(doubled_coord(tc, cell));
            for (const auto& t : terms) {
              const Field& pf = g.field(t.partner);
              if (pf.empty()) continue;
              Int3 pc{i + t.offset.x, j + t.offset.y, k + t.offset.z};
              if (!pf.in_range(pc.x, pc.y, pc.z)) continue;
              bool cv = chi.contains(doubled_coord(t.partner, pc));
              if (cu == cv) continue;
              double base = is_electric(tc) ? dt * g.inv_eps(tc).at(i, j, k) * inv_dx
                                            : dt / units::mu0 * inv_dx;
              InjectionEntry en;
              en.target = tc;
              en.target_idx = tf.idx(i, j, k);
              en.coef = t.sign * ((cu ? 1.0 : 0.0) - (cv ? 1.0 : 0.0)) * base;
              en.src = t.partner;
              en.src_cell = pc;
              if (is_electric(tc)) e_entries.push_back(en);
              else h_entries.push_back(en);
            }
          }
    }
  }

  // provider(comp, cell) -> auxiliary field value at its current time level
  template <class Provider>
  void apply_e(YeeGrid& g, Provider&& provider) const {
    for (const auto& en : e_entries)
      g.field(en.target).v[en.target_idx] += en.coef * provider(en.src, en.src_cell);
  }
  template <class Provider>
  void apply_h(YeeGrid& g, Provider&& provider) const {
    for (const auto& en : h_entries)
      g.field(en.target).v[en.target_idx] += en.coef * provider(en.src, en.src_cell);
  }
};

// Materialized surface-current snapshot: the per-target increments for one
// half step.  Zero auxiliary fields on the box boundary give zero currents.
struct SurfaceCurrents {
  std::vector<std::pair<const InjectionEntry*, double>> deltas;

  template <class Provider>
  static SurfaceCurrents compute(const std::vector<InjectionEntry>& entries,
                                 Provider&& provider) {
    SurfaceCurrents sc;
    sc.deltas.reserve(entries.size());
    for (const auto& en : entries)
      sc.deltas.emplace_back(&en, en.coef * provider(en.src, en.src_cell));
    return sc;
  }

  void inject(YeeGrid& g) const {
    for (const auto& [en, d] : deltas) g.field(en->target).v[en->target_idx] += d;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [en, d] : deltas) m = std::max(m, std::abs(d));
    return m;
  }
};

// Point current source on a single edge (electric) or face (magnetic).
// waveform(t) returns the current density J or M; electric sources enter the
// E update as -dt*J/eps, magnetic ones the H update as -dt*M/mu.
struct CurrentSource {
  Comp comp = Comp::Ex;
  Int3 cell{0, 0, 0};
  std::function<double(double)> waveform;

  void validate(const YeeGrid& g) const {
    const Field& f = g.field(comp);
    if (f.empty() || !f.in_range(cell.x, cell.y, cell.z))
      throw ValidationError("current source outside the grid");
    int L = g.cpml.thickness;
    Int3 dc = doubled_coord(comp, cell);
    for (int a = 0; a < g.spec.dim; ++a) {
      if (dc[a] < 2 * L || dc[a] > 2 * (g.spec.cells[a] - L))
        throw ValidationError("current source inside the CPML region");
    }
  }

  void apply(YeeGrid& g, double t) const {
    double val = waveform(t);
    if (is_electric(comp)) {
      g.field(comp).v[g.field(comp).idx(cell.x, cell.y, cell.z)] -=
          g.dt() * g.inv_eps(comp).at(cell.x, cell.y, cell.z) * val;
    } else {
      g.field(comp).v[g.field(comp).idx(cell.x, cell.y, cell.z)] -=
          g.dt() / units::mu0 * val;
    }
  }
};

}  // namespace qfdtd

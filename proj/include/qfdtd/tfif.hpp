#pragma once

// Total field-incident field (TF-IF) coupling: every emitter owns a small
// homogeneous auxiliary FDTD grid that computes its primary radiation from
// the dipole current J = 2 w0 d Im(b).  Equivalent surface currents
// (J ~ n x H_rad on the E half-step, M ~ -n x E_rad on the H half-step)
// extracted on the Omega box reproduce that radiation in the main grid
// outside the box and cancel it exactly inside, so the field sampled at the
// emitter contains only externally incident and reflected light.
//
// One system step (fields at E^{n-1/2}, H^n, amplitudes b^n on entry):
//   (1) surface currents J_rad from aux H^n          (per TLS)
//   (2) main E update with all J_rad                 + external sources
//   (3) aux E updates driven by the dipole J_i^n
//   (4) magnetic surface currents M_rad from aux E^{n+1/2}
//   (5) main H update with all M_rad                 -> monitors accumulate
//   (6) aux H updates
//   (7) TLS updates from the sampled E^{n+1/2}(r_i)
//   (8) dipole currents J_i^{n+1} from the new amplitudes
//   (9) advance the step counter
//
// Steps never reorder; each numbered phase completes before the next.

#include <memory>
#include <optional>

#include "qfdtd/sources.hpp"
#include "qfdtd/tls.hpp"

namespace qfdtd {

struct OmegaBox {
  Int3 center_doubled{0, 0, 0};
  Int3 halfwidth_cells{1, 1, 1};

  bool contains_doubled(const Int3& nd, int dim) const {
    for (int a = 0; a < dim; ++a)
      if (std::abs(nd[a] - center_doubled[a]) >= 2 * halfwidth_cells[a]) return false;
    return true;
  }
};

struct AuxGridParams {
  int box_halfwidth = 1;
  int margin = 4;  // free cells between the box and the aux CPML
  int cpml_thickness = 10;
};

class AuxiliaryGrid {
 public:
  YeeGrid grid;
  Int3 offset_cells{0, 0, 0};  // main cell = aux cell + offset
  Comp dipole_comp = Comp::Ex;
  Int3 dipole_cell{0, 0, 0};

  AuxiliaryGrid(const GridSpec& main_spec, const AuxGridParams& p, double eps_local,
                Comp comp, const Int3& main_cell) {
    int he = p.box_halfwidth + p.margin + p.cpml_thickness;
    GridSpec gs;
    gs.dim = main_spec.dim;
    gs.dx = main_spec.dx;
    gs.courant = main_spec.courant;
    gs.cells = {2 * he, 2 * he, main_spec.dim == 3 ? 2 * he : 1};
    CpmlParams cp;
    cp.thickness = p.cpml_thickness;
    grid = YeeGrid(gs, cp);
    grid.paint_eps([eps_local](const Vec3&) { return eps_local; });
    dipole_comp = comp;
    dipole_cell = {he, he, main_spec.dim == 3 ? he : 0};
    offset_cells = {main_cell.x - he, main_cell.y - he,
                    main_spec.dim == 3 ? main_cell.z - he : 0};
  }

  Int3 to_aux(const Int3& main_cell) const {
    return {main_cell.x - offset_cells.x, main_cell.y - offset_cells.y,
            main_cell.z - offset_cells.z};
  }

  double sample(Comp c, const Int3& main_cell) const {
    Int3 ac = to_aux(main_cell);
    return grid.field(c).at(ac.x, ac.y, ac.z);
  }
};

struct TlsUnit {
  TlsDescriptor desc;
  TlsState state;
  bool exclude_self = true;
  OmegaBox box;
  std::unique_ptr<AuxiliaryGrid> aux;
  SurfaceInjector injector;  // targets in the main grid, sources in aux cells
  Comp sample_comp = Comp::Ex;
  Int3 sample_cell{0, 0, 0};
  double drive_prev = 0.0;   // d.E(r_i)/hbar at t - dt/2
  double j_density = 0.0;    // dipole current density at integer steps
};

// Electric surface currents from the aux H field (Methods step 1).
inline SurfaceCurrents compute_surface_currents_J(const TlsUnit& u) {
  return SurfaceCurrents::compute(u.injector.e_entries, [&](Comp c, const Int3& cell) {
    return u.aux->sample(c, cell);
  });
}

// Magnetic surface currents from the aux E field (Methods step 4).
inline SurfaceCurrents compute_surface_currents_M(const TlsUnit& u) {
  return SurfaceCurrents::compute(u.injector.h_entries, [&](Comp c, const Int3& cell) {
    return u.aux->sample(c, cell);
  });
}

inline void inject_surface_currents(YeeGrid& main, const SurfaceCurrents& sc) {
  sc.inject(main);
}

class TfifSystem {
 public:
  YeeGrid main;
  std::vector<TlsUnit> tls;
  std::vector<PlaneWaveInjector> plane_sources;
  std::vector<ModeLineSource> mode_sources;
  std::vector<CurrentSource> electric_sources;
  std::vector<CurrentSource> magnetic_sources;
  AuxGridParams aux_params;
  std::vector<std::string> warnings;
  // called right after the main H update (fields at E^{n+1/2}, H^{n+1})
  std::function<void(long step)> monitor_hook;

  TfifSystem() = default;
  explicit TfifSystem(YeeGrid&& g) : main(std::move(g)) {}

  long step_count() const { return n_; }
  double time() const { return n_ * main.dt(); }

  // Snaps r to the nearest E node whose axis matches the dipole axis.
  static Int3 snap_to_edge(const YeeGrid& g, const Vec3& r, int axis, Comp* comp_out) {
    Comp c = static_cast<Comp>(axis);
    Int3 st = comp_stagger(c);
    Int3 cell;
    for (int a = 0; a < 3; ++a) {
      if (a >= g.spec.dim) { cell[a] = 0; continue; }
      double fi = r[a] / g.dx() - 0.5 * st[a];
      cell[a] = static_cast<int>(std::lround(fi));
    }
    if (comp_out) *comp_out = c;
    return cell;
  }

  void add_tls(const TlsDescriptor& d, TlsSolver solver, complexd initial,
               bool exclude_self, std::optional<int> box_halfwidth = {}) {
    TlsUnit u;
    u.desc = d;
    u.state = TlsState::make(solver, initial);
    u.exclude_self = exclude_self;
    int axis = d.dipole_axis();
    if (axis >= main.spec.dim)
      throw ValidationError("TLS dipole axis outside the grid dimension");
    u.sample_cell = snap_to_edge(main, d.position, axis, &u.sample_comp);
    if (!main.field(u.sample_comp).in_range(u.sample_cell.x, u.sample_cell.y,
                                            u.sample_cell.z))
      throw ValidationError("TLS " + std::to_string(d.index) + " outside the grid");
    u.desc.position = main.node_pos(u.sample_comp, u.sample_cell);

    int hw = box_halfwidth.value_or(aux_params.box_halfwidth);
    u.box.center_doubled = doubled_coord(u.sample_comp, u.sample_cell);
    u.box.halfwidth_cells = {hw, hw, hw};

    int clearance = hw + main.cpml.thickness;
    for (int a = 0; a < main.spec.dim; ++a) {
      int nd = u.box.center_doubled[a];
      if (nd < 2 * clearance + 2 || nd > 2 * (main.spec.cells[a] - clearance) - 2)
        throw ValidationError("TLS " + std::to_string(d.index) +
                              " too close to the boundary for its Omega box");
    }
    for (const TlsUnit& other : tls) {
      if (other.sample_comp == u.sample_comp && other.sample_cell == u.sample_cell)
        throw ValidationError("two TLSs snap to the same grid edge");
      if (u.box.contains_doubled(doubled_coord(other.sample_comp, other.sample_cell),
                                 main.spec.dim) ||
          other.box.contains_doubled(u.box.center_doubled, main.spec.dim))
        throw ValidationError("a TLS lies inside another TLS's Omega box");
    }

    if (exclude_self) {
      double eps_local = main.eps_at(u.sample_comp, u.sample_cell);
      check_local_uniformity(u, eps_local);
      AuxGridParams ap = aux_params;
      ap.box_halfwidth = hw;
      u.aux = std::make_unique<AuxiliaryGrid>(main.spec, ap, eps_local, u.sample_comp,
                                              u.sample_cell);
      RegionChi chi = omega_box_chi(u.box.center_doubled, u.box.halfwidth_cells,
                                    main.spec.dim, /*field_outside=*/true);
      u.injector.build(main, chi);
      // rewrite source cells into aux coordinates at apply time via sample()
    }
    u.j_density = current_density(u);
    tls.push_back(std::move(u));
  }

  double current_density(const TlsUnit& u) const {
    Vec3 j = tls_current_amplitude(u.state.coherence(), u.desc);
    double cellv = std::pow(main.dx(), main.spec.dim);
    return j[u.desc.dipole_axis()] / cellv;
  }

  void step() {
    double dt = main.dt();
    double t_int = n_ * dt;        // integer time level, for J and H-step sources
    double t_half = (n_ + 0.5) * dt;  // E half step

    // (1) electric surface currents from aux H^n
    std::vector<SurfaceCurrents> sc_j(tls.size());
    for (size_t i = 0; i < tls.size(); ++i)
      if (tls[i].aux) sc_j[i] = compute_surface_currents_J(tls[i]);

    // (2) main E update
    main.step_e();
    for (size_t i = 0; i < tls.size(); ++i)
      if (tls[i].aux) inject_surface_currents(main, sc_j[i]);
    for (auto& s : plane_sources) s.apply_e(main);
    for (auto& s : mode_sources) s.apply_e(main, t_int);
    for (auto& s : electric_sources)
      if (is_electric(s.comp)) s.apply(main, t_int);
    for (auto& u : tls)
      if (!u.exclude_self) apply_dipole(main, u);
    main.apply_pec();
    for (auto& s : plane_sources) s.advance_line_e(t_half);

    // (3) aux E updates with the dipole current at level n
    for (auto& u : tls)
      if (u.aux) {
        u.aux->grid.step_e();
        apply_dipole(u.aux->grid, u, true);
      }

    // (4) magnetic surface currents from aux E^{n+1/2}
    std::vector<SurfaceCurrents> sc_m(tls.size());
    for (size_t i = 0; i < tls.size(); ++i)
      if (tls[i].aux) sc_m[i] = compute_surface_currents_M(tls[i]);

    // (5) main H update
    main.step_h();
    for (size_t i = 0; i < tls.size(); ++i)
      if (tls[i].aux) inject_surface_currents(main, sc_m[i]);
    for (auto& s : plane_sources) s.apply_h(main);
    for (auto& s : mode_sources) s.apply_h(main, t_half);
    for (auto& s : magnetic_sources)
      if (!is_electric(s.comp)) s.apply(main, t_half);
    for (auto& s : plane_sources) s.advance_line_h();
    if (monitor_hook) monitor_hook(n_);

    // (6) aux H updates
    for (auto& u : tls)
      if (u.aux) u.aux->grid.step_h();

    // (7) TLS updates from the sampled main-grid field at t + dt/2
    for (auto& u : tls) {
      double e = main.field(u.sample_comp)
                     .at(u.sample_cell.x, u.sample_cell.y, u.sample_cell.z);
      double drive_new = u.desc.dipole_mag() * e / units::hbar;
      step_tls(u.state, u.drive_prev, drive_new, u.desc, t_int, dt);
      u.drive_prev = drive_new;
    }

    // (8) dipole currents for the next cycle
    for (auto& u : tls) u.j_density = current_density(u);

    // (9)
    ++n_;
    main.step_index = n_;
    for (auto& u : tls)
      if (u.aux) u.aux->grid.step_index = n_;
  }

  double sampled_field(const TlsUnit& u) const {
    return main.field(u.sample_comp).at(u.sample_cell.x, u.sample_cell.y, u.sample_cell.z);
  }

  double n_exc() const {
    double s = 0.0;
    for (const auto& u : tls) s += u.state.excited_probability();
    return s;
  }

 private:
  long n_ = 0;

  void apply_dipole(YeeGrid& g, const TlsUnit& u, bool in_aux = false) const {
    Comp c = in_aux ? u.aux->dipole_comp : u.sample_comp;
    Int3 cell = in_aux ? u.aux->dipole_cell : u.sample_cell;
    Field& f = g.field(c);
    f.v[f.idx(cell.x, cell.y, cell.z)] -=
        g.dt() * g.inv_eps(c).at(cell.x, cell.y, cell.z) * u.j_density;
  }

  void check_local_uniformity(const TlsUnit& u, double eps_local) {
    const Field& ie = main.inv_eps(u.sample_comp);
    bool uniform = true;
    for (int dk = -2; dk <= 2 && uniform; ++dk)
      for (int dj = -2; dj <= 2 && uniform; ++dj)
        for (int di = -2; di <= 2 && uniform; ++di) {
          Int3 c{u.sample_cell.x + di, u.sample_cell.y + dj,
                 main.is2d() ? 0 : u.sample_cell.z + dk};
          if (main.is2d() && dk != 0) continue;
          if (!ie.in_range(c.x, c.y, c.z)) continue;
          double er = 1.0 / (units::eps0 * ie.at(c.x, c.y, c.z));
          if (std::abs(er - eps_local) > 1e-12 * std::max(1.0, eps_local)) uniform = false;
        }
    if (!uniform)
      warnings.push_back("TLS " + std::to_string(u.desc.index) +
                         " sits within 2 cells of a material interface; the "
                         "primary-radiation split is ambiguous there");
  }
};

}  // namespace qfdtd

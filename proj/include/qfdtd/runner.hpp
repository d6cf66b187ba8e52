#pragma once

// Orchestration: builds a coupled system from a Scenario, runs it to the
// stop criterion, writes deterministic outputs (CSV, spectra, snapshots),
// evaluates embedded verification assertions against the analytical
// oracles, and drives parameter sweeps.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "qfdtd/csv.hpp"
#include "qfdtd/fit.hpp"
#include "qfdtd/monitors.hpp"
#include "qfdtd/scenario.hpp"

namespace qfdtd {

class RunError : public std::runtime_error {
 public:
  int exit_code;
  explicit RunError(const std::string& msg, int code) : std::runtime_error(msg), exit_code(code) {}
};

struct MonitorResult {
  std::string name;
  std::vector<double> omega;
  std::vector<double> power;
  double time_integral = 0.0;
};

struct RunRecord {
  std::string name;
  std::uint64_t scenario_hash = 0;
  int dimension = 2;
  double dt = 0, dx = 0;
  std::vector<double> t;
  std::vector<std::vector<complexd>> b;   // [tls][sample]
  std::vector<std::vector<double>> pe;    // [tls][sample]
  std::vector<double> nexc;
  std::vector<MonitorResult> monitors;
  std::vector<TlsDescriptor> tls;
  std::vector<std::string> warnings;
  long steps_run = 0;
  double wall_seconds = 0;

  const MonitorResult& monitor(const std::string& mname) const {
    for (const auto& m : monitors)
      if (m.name == mname) return m;
    throw ValidationError("no monitor named '" + mname + "'");
  }

  std::vector<double> series(const std::string& sname) const {
    if (sname == "n_exc") return nexc;
    if (sname.rfind("p_", 0) == 0) {
      size_t i = std::stoul(sname.substr(2));
      if (i < pe.size()) return pe[i];
    }
    throw ValidationError("unknown series '" + sname + "'");
  }
};

namespace detail {

inline Comp comp_from_name(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == comp_name(static_cast<Comp>(i))) return static_cast<Comp>(i);
  throw ValidationError("unknown field component '" + s + "'");
}

inline double eps_eval(const std::vector<StructureSpec>& structures, const Vec3& r) {
  double eps = 1.0;
  for (const auto& s : structures) {
    if (s.type == "block") {
      bool in = true;
      for (int a = 0; a < 3; ++a)
        if (s.size[a] > 0 && std::abs(r[a] - s.center[a]) > s.size[a] / 2) in = false;
      if (in) eps = s.eps;
    } else if (s.type == "disk") {
      Vec3 d = r - s.center;
      d.z = 0;
      if (d.norm() <= s.radius) eps = s.eps;
    } else if (s.type == "ring") {
      Vec3 d = r - s.center;
      d.z = 0;
      double rr = d.norm();
      if (rr >= s.inner_radius && rr <= s.outer_radius) eps = s.eps;
    }
  }
  return eps;
}

inline bool pec_eval(const std::vector<StructureSpec>& structures, const Vec3& r) {
  for (const auto& s : structures) {
    if (s.type != "pec_block") continue;
    bool in = true;
    for (int a = 0; a < 3; ++a)
      if (s.size[a] > 0 && std::abs(r[a] - s.center[a]) > s.size[a] / 2) in = false;
    if (in) return true;
  }
  return false;
}

}  // namespace detail

struct BuiltSystem {
  TfifSystem sys;
  std::vector<FluxMonitor> monitors;
  std::vector<GaussianPulseSpec> pulse_specs;  // per plane-wave source
  long max_steps = 0;
};

// Decay rate entering the amplitude ODE: the vacuum oracle value, times the
// homogeneous-medium index factor in 3D (2D Im G(r,r) is n-independent).
inline double tls_gamma_for(const TlsSpec& ts, int dim, double eps_local) {
  if (ts.gamma_override >= 0.0) return ts.gamma_override;
  double g = gamma_vac(ts.omega0, ts.dipole.norm(), dim);
  if (dim == 3) g *= std::sqrt(eps_local);
  return g;
}

inline BuiltSystem build_system(const Scenario& sc) {
  GridSpec gs;
  gs.dim = sc.dimension;
  gs.dx = 1.0 / sc.resolution;
  gs.courant = sc.courant;
  for (int a = 0; a < sc.dimension; ++a)
    gs.cells[a] = static_cast<int>(std::lround(sc.domain_size[a] * sc.resolution));
  if (sc.dimension == 2) gs.cells.z = 1;

  BuiltSystem bs;
  bs.sys = TfifSystem(YeeGrid(gs, sc.cpml));
  YeeGrid& g = bs.sys.main;
  if (!sc.structures.empty()) {
    g.paint_eps([&](const Vec3& r) { return detail::eps_eval(sc.structures, r); });
    g.paint_pec([&](const Vec3& r) { return detail::pec_eval(sc.structures, r); });
  }

  long max_steps = sc.run.max_steps;
  if (sc.run.max_time > 0)
    max_steps = static_cast<long>(std::ceil(sc.run.max_time / g.dt()));
  bs.max_steps = max_steps;

  // expand TLS arrays, then add all emitters
  std::vector<TlsSpec> all_tls = sc.tls;
  for (const auto& as : sc.tls_arrays) {
    int n = as.count.x * as.count.y;
    double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int ib = 0; ib < as.count.y; ++ib)
      for (int ia = 0; ia < as.count.x; ++ia) {
        TlsSpec ts;
        ts.position = as.center;
        ts.position[as.axis_a] += (ia - (as.count.x - 1) / 2.0) * as.spacing;
        ts.position[as.axis_b] += (ib - (as.count.y - 1) / 2.0) * as.spacing;
        ts.dipole = as.dipole;
        ts.omega0 = as.omega0;
        ts.initial = norm;
        ts.solver = as.solver;
        all_tls.push_back(ts);
      }
  }
  double total_norm = 0;
  for (const auto& ts : all_tls) total_norm += std::norm(ts.initial);
  if (total_norm > 1.0 + 1e-9)
    throw ValidationError("initial excitation norm exceeds 1");

  bs.sys.aux_params = sc.aux_params;
  bool excluded = sc.self_interaction == "excluded";
  int idx = 0;
  for (const auto& ts : all_tls) {
    TlsDescriptor d;
    d.omega0 = ts.omega0;
    d.dipole = ts.dipole;
    d.position = ts.position;
    d.index = idx++;
    Comp c;
    Int3 cell = TfifSystem::snap_to_edge(g, ts.position, d.dipole_axis(), &c);
    if (!g.field(c).in_range(cell.x, cell.y, cell.z))
      throw ValidationError("TLS " + std::to_string(d.index) + " outside the grid");
    d.gamma = tls_gamma_for(ts, sc.dimension, g.eps_at(c, cell));
    TlsSolver solver = ts.solver == "schrodinger" ? TlsSolver::Schrodinger
                      : ts.solver == "bloch"      ? TlsSolver::Bloch
                                                  : TlsSolver::Amplitude;
    bs.sys.add_tls(d, solver, ts.initial, excluded);
    if (excluded && sc.aux_mode == "matched") {
      TlsUnit& u = bs.sys.tls.back();
      double eps_local = g.eps_at(u.sample_comp, u.sample_cell);
      u.aux->grid = YeeGrid(gs, sc.cpml);
      u.aux->grid.paint_eps([eps_local](const Vec3&) { return eps_local; });
      u.aux->dipole_cell = u.sample_cell;
      u.aux->offset_cells = {0, 0, 0};
    }
  }

  // sources
  for (const auto& ss : sc.sources) {
    if (ss.type == "gaussian_plane_wave") {
      TfsfBox box;
      for (int a = 0; a < 3; ++a) {
        box.lo[a] = static_cast<int>(std::lround(ss.box_lo[a] * sc.resolution));
        box.hi[a] = static_cast<int>(std::lround(ss.box_hi[a] * sc.resolution));
      }
      box.prop_axis = ss.propagation_axis;
      box.pulse.omega_c = ss.omega;
      box.pulse.tau = ss.tau;
      box.pulse.t0 = ss.t0;
      box.pulse.amplitude = ss.amplitude;
      box.pulse.polarization_axis = ss.polarization_axis;
      PlaneWaveInjector pw;
      pw.setup(g, box, max_steps);
      bs.sys.plane_sources.push_back(std::move(pw));
      bs.pulse_specs.push_back(box.pulse);
    } else if (ss.type == "waveguide_mode") {
      SlabMode mode;
      mode.omega = ss.omega;
      mode.eps_core = ss.core_eps;
      mode.eps_clad = ss.clad_eps;
      mode.width = ss.core_width;
      mode.y_center = ss.core_center;
      mode.solve();
      GaussianPulseSpec p;
      p.omega_c = ss.omega; p.tau = ss.tau; p.t0 = ss.t0; p.amplitude = ss.amplitude;
      ModeLineSource ml;
      ml.setup(g, mode, p, static_cast<int>(std::lround(ss.line_x * sc.resolution)));
      bs.sys.mode_sources.push_back(std::move(ml));
      bs.pulse_specs.push_back(p);
    } else if (ss.type == "dipole") {
      CurrentSource src;
      src.comp = detail::comp_from_name(ss.component);
      Int3 st = comp_stagger(src.comp);
      for (int a = 0; a < 3; ++a)
        src.cell[a] = static_cast<int>(std::lround(ss.position[a] * sc.resolution - 0.5 * st[a]));
      if (sc.dimension == 2) src.cell.z = 0;
      double om = ss.omega, tau = ss.tau, t0 = ss.t0, amp = ss.amplitude;
      src.waveform = [om, tau, t0, amp](double t) {
        double u = t - t0;
        return amp * std::exp(-u * u / (2 * tau * tau)) * std::cos(om * u);
      };
      src.validate(g);
      if (is_electric(src.comp)) bs.sys.electric_sources.push_back(std::move(src));
      else bs.sys.magnetic_sources.push_back(std::move(src));
    }
  }

  // monitors
  for (const auto& ms : sc.monitors) {
    std::vector<double> omegas = ms.frequencies.resolve();
    FluxMonitor m;
    if (ms.type == "flux_box") {
      Int3 lo, hi;
      for (int a = 0; a < sc.dimension; ++a) {
        lo[a] = static_cast<int>(std::lround((ms.center[a] - ms.size[a] / 2) * sc.resolution));
        hi[a] = static_cast<int>(std::lround((ms.center[a] + ms.size[a] / 2) * sc.resolution));
      }
      m = FluxMonitor::box(g, lo, hi, omegas);
    } else {
      int tr = -1;
      for (int a = 0; a < sc.dimension; ++a)
        if (a != ms.axis) { tr = a; break; }
      Int3 lo{0, 0, 0}, hi{0, 0, 0};
      lo[tr] = static_cast<int>(std::lround((ms.span_center - ms.span / 2) * sc.resolution));
      hi[tr] = static_cast<int>(std::lround((ms.span_center + ms.span / 2) * sc.resolution));
      if (sc.dimension == 3) {
        int tr2 = 3 - ms.axis - tr;
        lo[tr2] = lo[tr];
        hi[tr2] = hi[tr];
      }
      m = FluxMonitor::plane(g, ms.axis,
                             static_cast<int>(std::lround(ms.position * sc.resolution)),
                             lo, hi, omegas);
    }
    m.name = ms.name;
    m.stride = ms.stride;
    m.accumulate_time_integral = ms.time_integral;
    m.validate_stride(g);
    bs.monitors.push_back(std::move(m));
  }
  return bs;
}

inline RunRecord run_scenario(const Scenario& sc, const std::string& out_dir = "") {
  auto t_start = std::chrono::steady_clock::now();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  BuiltSystem bs = build_system(sc);
  TfifSystem& sys = bs.sys;
  YeeGrid& g = sys.main;

  RunRecord rec;
  rec.name = sc.name;
  rec.scenario_hash = sc.hash();
  rec.dimension = sc.dimension;
  rec.dt = g.dt();
  rec.dx = g.dx();
  rec.warnings = sys.warnings;
  for (const auto& u : sys.tls) rec.tls.push_back(u.desc);

  sys.monitor_hook = [&](long step) {
    for (auto& m : bs.monitors) m.accumulate(g, step);
  };

  long max_steps = bs.max_steps;
  double gamma_min = 0;
  for (const auto& u : sys.tls)
    if (u.desc.gamma > 0)
      gamma_min = gamma_min == 0 ? u.desc.gamma : std::min(gamma_min, u.desc.gamma);
  if (gamma_min > 0 && sc.run.max_time <= 0) {
    long cap = static_cast<long>(std::ceil(sc.run.max_lifetimes / gamma_min / g.dt()));
    max_steps = std::min(max_steps, cap);
  }

  auto record_state = [&](long step) {
    rec.t.push_back(step * g.dt());
    if (rec.b.empty()) {
      rec.b.resize(sys.tls.size());
      rec.pe.resize(sys.tls.size());
    }
    double nx = 0;
    for (size_t i = 0; i < sys.tls.size(); ++i) {
      rec.b[i].push_back(sys.tls[i].state.coherence());
      double p = sys.tls[i].state.excited_probability();
      rec.pe[i].push_back(p);
      nx += p;
    }
    rec.nexc.push_back(nx);
  };
  record_state(0);

  std::vector<SnapshotSpec> snaps = sc.snapshots;
  std::sort(snaps.begin(), snaps.end(),
            [](const SnapshotSpec& a, const SnapshotSpec& b) { return a.at_step < b.at_step; });
  size_t next_snap = 0;

  double peak_energy = 0, peak_nexc = sys.n_exc();
  for (long n = 0; n < max_steps; ++n) {
    sys.step();
    long done = n + 1;
    if (done % sc.run.output_every == 0) record_state(done);
    while (next_snap < snaps.size() && snaps[next_snap].at_step == done) {
      if (!out_dir.empty())
        g.write_snapshot(detail::comp_from_name(snaps[next_snap].component),
                         out_dir + "/snapshot_" + snaps[next_snap].component + "_" +
                             std::to_string(done));
      ++next_snap;
    }
    if (done % sc.run.check_every == 0) {
      if (!g.all_finite())
        throw RunError("non-finite field detected at step " + std::to_string(done), 2);
      double e = g.total_energy(), nx = sys.n_exc();
      peak_energy = std::max(peak_energy, e);
      peak_nexc = std::max(peak_nexc, nx);
      bool fields_dead = peak_energy == 0 || e <= sc.run.stop_threshold * peak_energy;
      bool tls_dead = sys.tls.empty() || peak_nexc == 0 ||
                      nx <= sc.run.stop_threshold * peak_nexc;
      if (fields_dead && tls_dead && done > 10 * sc.run.check_every) {
        rec.steps_run = done;
        break;
      }
    }
    rec.steps_run = done;
  }

  for (auto& m : bs.monitors) {
    MonitorResult mr;
    mr.name = m.name;
    mr.omega = m.omegas;
    mr.power = m.power_spectrum();
    mr.time_integral = m.flux_time_integral;
    rec.monitors.push_back(std::move(mr));
  }

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (!out_dir.empty()) {
    // TLS time series
    CsvTable t;
    t.columns.push_back("t");
    for (size_t i = 0; i < rec.b.size(); ++i) {
      t.columns.push_back("re_b_" + std::to_string(i));
      t.columns.push_back("im_b_" + std::to_string(i));
      t.columns.push_back("p_" + std::to_string(i));
    }
    t.columns.push_back("n_exc");
    for (size_t s = 0; s < rec.t.size(); ++s) {
      std::vector<double> row{rec.t[s]};
      for (size_t i = 0; i < rec.b.size(); ++i) {
        row.push_back(rec.b[i][s].real());
        row.push_back(rec.b[i][s].imag());
        row.push_back(rec.pe[i][s]);
      }
      row.push_back(rec.nexc[s]);
      t.rows.push_back(std::move(row));
    }
    write_csv(t, out_dir + "/tls.csv");
    for (const auto& mr : rec.monitors) {
      CsvTable mt;
      mt.columns = {"omega", "lambda", "power"};
      for (size_t i = 0; i < mr.omega.size(); ++i)
        mt.rows.push_back({mr.omega[i], 2.0 * pi * units::c0 / mr.omega[i], mr.power[i]});
      write_csv(mt, out_dir + "/monitor_" + mr.name + ".csv");
    }
    json meta;
    char hx[32];
    std::snprintf(hx, sizeof hx, "%016llx",
                  static_cast<unsigned long long>(rec.scenario_hash));
    meta["scenario_hash"] = hx;
    meta["name"] = rec.name;
    meta["steps"] = rec.steps_run;
    meta["wall_seconds"] = rec.wall_seconds;
    meta["warnings"] = rec.warnings;
    meta["dt"] = rec.dt;
    meta["dx"] = rec.dx;
    std::ofstream(out_dir + "/meta.json") << meta.dump(2) << "\n";
  }
  return rec;
}

// ---- verification ---------------------------------------------------------

struct VerifyResult {
  std::string description;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline double fitted_rate(const RunRecord& rec, const std::string& series, double t_min,
                          double t_max) {
  return fit_exponential(rec.t, rec.series(series), t_min, t_max);
}

// Gamma(h) for a dipole parallel to a PEC mirror, via the image Green's
// function at the emitter's own position.
inline double mirror_gamma(const TlsDescriptor& d, int dim, int mirror_axis,
                           double mirror_pos) {
  GreensSpec gsp;
  gsp.env = GreensEnv::PecHalfspace;
  gsp.axis = mirror_axis;
  gsp.plane = mirror_pos;
  Vec3 r = d.position;
  if (dim == 2) r.z = 0;
  GreensTensor G = green_function(gsp, r, r, d.omega0);
  // Im part only; the vacuum Re part is singular but unused here
  double im = 0;
  Vec3 u = d.dipole / d.dipole.norm();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) im += u[a] * G.g[a][b].imag() * u[b];
  double pref = 2.0 * d.omega0 * d.omega0 * d.dipole.norm() * d.dipole.norm() /
                (units::hbar * units::eps0 * units::c0 * units::c0);
  return pref * im;
}

// Single-excitation master ODE for all recorded emitters (vacuum
// environment), integrated on the record's time grid with RK4.
inline std::vector<double> nexc_master_oracle(const RunRecord& rec) {
  size_t n = rec.tls.size();
  GreensSpec gv;
  gv.env = rec.dimension == 2 ? GreensEnv::Vacuum2D : GreensEnv::Vacuum3D;
  std::vector<double> gam(n * n, 0.0), gg(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) {
        gam[i * n + j] = rec.tls[i].gamma;
        continue;
      }
      GreensTensor G = green_function(gv, rec.tls[i].position, rec.tls[j].position,
                                      rec.tls[i].omega0);
      CollectiveRates cr = collective_rates(G, rec.tls[i].dipole, rec.tls[j].dipole,
                                            rec.tls[i].omega0);
      gam[i * n + j] = cr.gamma_ij;
      gg[i * n + j] = cr.g_ij;
    }
  std::vector<complexd> b(n);
  for (size_t i = 0; i < n; ++i) b[i] = rec.b[i][0];
  auto rhs = [&](const std::vector<complexd>& y) {
    std::vector<complexd> d(n);
    for (size_t i = 0; i < n; ++i) {
      complexd acc = (complexd(0, -rec.tls[i].omega0) - gam[i * n + i] / 2.0) * y[i];
      for (size_t j = 0; j < n; ++j)
        if (j != i)
          acc += (complexd(0, gg[i * n + j]) - gam[i * n + j] / 2.0) * y[j];
      d[i] = acc;
    }
    return d;
  };
  std::vector<double> out;
  out.reserve(rec.t.size());
  auto nexc = [&](const std::vector<complexd>& y) {
    double s = 0;
    for (auto& v : y) s += std::norm(v);
    return s;
  };
  out.push_back(nexc(b));
  int sub = 8;
  for (size_t s = 1; s < rec.t.size(); ++s) {
    double h = (rec.t[s] - rec.t[s - 1]) / sub;
    for (int q = 0; q < sub; ++q) {
      auto k1 = rhs(b);
      std::vector<complexd> y2(n), y3(n), y4(n);
      for (size_t i = 0; i < n; ++i) y2[i] = b[i] + 0.5 * h * k1[i];
      auto k2 = rhs(y2);
      for (size_t i = 0; i < n; ++i) y3[i] = b[i] + 0.5 * h * k2[i];
      auto k3 = rhs(y3);
      for (size_t i = 0; i < n; ++i) y4[i] = b[i] + h * k3[i];
      auto k4 = rhs(y4);
      for (size_t i = 0; i < n; ++i)
        b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out.push_back(nexc(b));
  }
  return out;
}

}  // namespace detail

// Evaluates the scenario's embedded assertions.  reference_dir resolves
// sibling run outputs for transmission-based checks.
inline std::vector<VerifyResult> verify_run(const Scenario& sc, const RunRecord& rec,
                                            const std::string& out_parent = "") {
  std::vector<VerifyResult> results;
  detail::ScenarioParser P;  // reuse numeric resolution for "$param"
  if (sc.raw.contains("parameters")) P.params = sc.raw["parameters"];

  for (const json& a : sc.verify) {
    VerifyResult vr;
    std::string kind = a.value("kind", std::string());
    vr.description = kind;
    try {
      if (kind == "decay_rate") {
        std::string series = a.value("series", std::string("p_0"));
        double t_min = a.contains("t_min") ? P.resolve_num(a["t_min"], "t_min") : -1.0;
        double t_max = a.contains("t_max") ? P.resolve_num(a["t_max"], "t_max") : -1.0;
        double fitted = detail::fitted_rate(rec, series, t_min, t_max);
        std::string oracle = a.value("oracle", std::string("gamma_vac"));
        double expected = 0;
        if (oracle == "gamma_vac") {
          expected = rec.tls.at(0).gamma;
        } else if (oracle == "n_gamma_vac") {
          expected = rec.tls.size() * rec.tls.at(0).gamma;
        } else if (oracle == "mirror") {
          int axis = a.contains("mirror_axis") ? (a["mirror_axis"] == "x" ? 0 : a["mirror_axis"] == "y" ? 1 : 2) : 1;
          double pos = P.resolve_num(a.at("mirror_position"), "mirror_position");
          expected = detail::mirror_gamma(rec.tls.at(0), rec.dimension, axis, pos);
        } else if (oracle == "collective_master") {
          auto oracle_series = detail::nexc_master_oracle(rec);
          expected = fit_exponential(rec.t, oracle_series, t_min, t_max);
        } else if (oracle == "value") {
          expected = P.resolve_num(a.at("value"), "value");
        } else {
          throw ValidationError("unknown decay oracle '" + oracle + "'");
        }
        double tol = a.value("rel_tol", 0.05);
        double err = std::abs(fitted - expected) / std::abs(expected);
        vr.pass = err <= tol;
        char buf[256];
        std::snprintf(buf, sizeof buf, "fitted=%.6g expected=%.6g rel_err=%.3g tol=%.3g",
                      fitted, expected, err, tol);
        vr.detail = buf;
        vr.description = "decay_rate[" + series + " vs " + oracle + "]";
      } else if (kind == "rate_range") {
        std::string series = a.value("series", std::string("n_exc"));
        double t_min = a.contains("t_min") ? P.resolve_num(a["t_min"], "t_min") : -1.0;
        double t_max = a.contains("t_max") ? P.resolve_num(a["t_max"], "t_max") : -1.0;
        double fitted = detail::fitted_rate(rec, series, t_min, t_max);
        double unit = a.value("in_units_of_gamma_vac", true) ? rec.tls.at(0).gamma : 1.0;
        double lo = P.resolve_num(a.at("lo"), "lo") * unit;
        double hi = P.resolve_num(a.at("hi"), "hi") * unit;
        vr.pass = fitted >= lo && fitted <= hi;
        char buf[256];
        std::snprintf(buf, sizeof buf, "fitted=%.6g range=[%.6g, %.6g]", fitted, lo, hi);
        vr.detail = buf;
        vr.description = "rate_range[" + series + "]";
      } else if (kind == "causality") {
        std::string series = a.value("series", std::string("p_1"));
        double dist = P.resolve_num(a.at("distance"), "distance");
        double frac = a.value("fraction", 0.95);
        double bound = a.value("bound", 1e-6);
        double t_limit = frac * dist / units::c0;
        auto ys = rec.series(series);
        double worst = 0;
        for (size_t i = 0; i < rec.t.size(); ++i)
          if (rec.t[i] < t_limit) worst = std::max(worst, std::abs(ys[i]));
        vr.pass = worst < bound;
        char buf[256];
        std::snprintf(buf, sizeof buf, "max %s = %.3g for t < %.4g (bound %.3g)",
                      series.c_str(), worst, t_limit, bound);
        vr.detail = buf;
        vr.description = "causality[" + series + "]";
      } else if (kind == "series_min_after" || kind == "series_max_after") {
        std::string series = a.value("series", std::string("p_0"));
        double after = P.resolve_num(a.at("after_t"), "after_t");
        double value = P.resolve_num(a.at("value"), "value");
        auto ys = rec.series(series);
        double worst = kind == "series_min_after" ? 1e300 : -1e300;
        for (size_t i = 0; i < rec.t.size(); ++i) {
          if (rec.t[i] < after) continue;
          worst = kind == "series_min_after" ? std::min(worst, ys[i])
                                             : std::max(worst, ys[i]);
        }
        vr.pass = kind == "series_min_after" ? worst >= value : worst <= value;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s of %s after t=%.4g is %.6g (limit %.6g)",
                      kind == "series_min_after" ? "min" : "max", series.c_str(), after,
                      worst, value);
        vr.detail = buf;
        vr.description = kind + "[" + series + "]";
      } else if (kind == "master_fit") {
        double t_min = a.contains("t_min") ? P.resolve_num(a["t_min"], "t_min") : 0.0;
        std::vector<double> ts, p1, p2;
        for (size_t i = 0; i < rec.t.size(); ++i) {
          if (rec.t[i] < t_min) continue;
          ts.push_back(rec.t[i]);
          p1.push_back(rec.pe.at(0)[i]);
          p2.push_back(rec.pe.at(1)[i]);
        }
        MasterFit mf = fit_master_equation(ts, p1, p2);
        const TlsDescriptor& d0 = rec.tls.at(0);
        const TlsDescriptor& d1 = rec.tls.at(1);
        CollectiveRates cr;
        std::string env = a.value("environment", std::string("vacuum"));
        if (env == "vacuum") {
          GreensSpec gv;
          gv.env = rec.dimension == 2 ? GreensEnv::Vacuum2D : GreensEnv::Vacuum3D;
          GreensTensor G = green_function(gv, d0.position, d1.position, d0.omega0);
          cr = collective_rates(G, d0.dipole, d1.dipole, d0.omega0);
        } else if (env == "pec_waveguide") {
          GreensSpec gw;
          gw.env = GreensEnv::PecWaveguide;
          gw.axis = a.contains("waveguide_axis") ? (a["waveguide_axis"] == "x" ? 0 : 1) : 1;
          gw.plane = P.resolve_num(a.at("waveguide_low"), "waveguide_low");
          gw.width = P.resolve_num(a.at("waveguide_width"), "waveguide_width");
          cr = waveguide_collective_rates(gw, d0.position, d1.position, d0.dipole,
                                          d1.dipole, d0.omega0);
        } else {
          throw ValidationError("unknown master_fit environment '" + env + "'");
        }
        double gv0 = d0.gamma;
        double tol12 = a.value("gamma12_rel_tol", 0.10);
        double tolg = a.value("g12_rel_tol", 0.10);
        bool check_sign = a.value("check_sign", false);
        double ref12 = std::max(std::abs(cr.gamma_ij), 0.02 * gv0);
        double refg = std::max(std::abs(cr.g_ij), 0.02 * gv0);
        double err12 = std::abs(std::abs(mf.gamma12) - std::abs(cr.gamma_ij)) / ref12;
        double errg = std::abs(mf.g12 - std::abs(cr.g_ij)) / refg;
        bool sign_ok = !check_sign || mf.gamma12 * cr.gamma_ij >= 0;
        vr.pass = mf.detail.converged && err12 <= tol12 && errg <= tolg && sign_ok;
        char buf[384];
        std::snprintf(buf, sizeof buf,
                      "fit(G12=%.5g, g12=%.5g) oracle(G12=%.5g, |g12|=%.5g) "
                      "err=(%.3g, %.3g) sign_ok=%d conv=%d",
                      mf.gamma12, mf.g12, cr.gamma_ij, std::abs(cr.g_ij), err12, errg,
                      sign_ok ? 1 : 0, mf.detail.converged ? 1 : 0);
        vr.detail = buf;
        vr.description = "master_fit[" + env + "]";
      } else if (kind == "lorentzian_cross_section") {
        const auto& mr = rec.monitor(a.value("monitor", std::string("scat")));
        GaussianPulseSpec pulse;
        pulse.omega_c = P.resolve_num(a.at("pulse_omega"), "pulse_omega");
        pulse.tau = P.resolve_num(a.at("pulse_tau"), "pulse_tau");
        pulse.amplitude = a.contains("pulse_amplitude")
                              ? P.resolve_num(a["pulse_amplitude"], "amp") : 1.0;
        pulse.t0 = 4 * pulse.tau;
        SpectrumData sd = scattering_cross_section(mr.omega, mr.power, pulse);
        LorentzianFit lf = fit_lorentzian(sd.omega, sd.value);
        double w0 = rec.tls.at(0).omega0;
        double lam0 = 2.0 * pi * units::c0 / w0;
        double sigma0 = 3.0 * lam0 * lam0 / (2.0 * pi);
        double gv0 = rec.tls.at(0).gamma;
        double perr = std::abs(lf.peak - sigma0) / sigma0;
        double cerr = std::abs(lf.center - w0) / w0;
        double ferr = std::abs(lf.fwhm - gv0) / gv0;
        double ptol = a.value("peak_tol", 0.10);
        double ctol = a.value("center_tol", 0.005);
        double ftol = a.value("fwhm_tol", 0.10);
        vr.pass = perr <= ptol && cerr <= ctol && ferr <= ftol;
        char buf[384];
        std::snprintf(buf, sizeof buf,
                      "peak=%.5g (sigma0=%.5g, err %.3g), center=%.6g (w0=%.6g, err %.3g), "
                      "fwhm=%.5g (Gvac=%.5g, err %.3g)",
                      lf.peak, sigma0, perr, lf.center, w0, cerr, lf.fwhm, gv0, ferr);
        vr.detail = buf;
        vr.description = "lorentzian_cross_section";
      } else if (kind == "cross_section_suppressed") {
        const auto& mr = rec.monitor(a.value("monitor", std::string("scat")));
        GaussianPulseSpec pulse;
        pulse.omega_c = P.resolve_num(a.at("pulse_omega"), "pulse_omega");
        pulse.tau = P.resolve_num(a.at("pulse_tau"), "pulse_tau");
        pulse.amplitude = a.contains("pulse_amplitude")
                              ? P.resolve_num(a["pulse_amplitude"], "amp") : 1.0;
        pulse.t0 = 4 * pulse.tau;
        SpectrumData sd = scattering_cross_section(mr.omega, mr.power, pulse);
        double w0 = rec.tls.at(0).omega0;
        double lam0 = 2.0 * pi * units::c0 / w0;
        double sigma0 = 3.0 * lam0 * lam0 / (2.0 * pi);
        double frac = a.value("max_fraction_of_sigma0", 0.05);
        double shift_min = a.value("center_shift_min", 0.005);
        double smax = 0, warg = sd.omega.front();
        for (size_t i = 0; i < sd.omega.size(); ++i)
          if (sd.value[i] > smax) { smax = sd.value[i]; warg = sd.omega[i]; }
        bool suppressed = smax < frac * sigma0;
        bool shifted = std::abs(warg - w0) > shift_min * w0;
        vr.pass = suppressed && shifted;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "max sigma=%.5g (%.4g of sigma0, limit %.3g), argmax=%.6g (w0=%.6g)",
                      smax, smax / sigma0, frac, warg, w0);
        vr.detail = buf;
        vr.description = "cross_section_suppressed";
      } else if (kind == "dip_count") {
        const auto& mr = rec.monitor(a.value("port", std::string("out")));
        std::string ref_run = a.at("reference_run").get<std::string>();
        std::string ref_csv = (out_parent.empty() ? ref_run : out_parent + "/" + ref_run) +
                              "/monitor_" + a.value("reference_port", a.value("port", std::string("out"))) + ".csv";
        CsvTable ref = read_csv(ref_csv);
        SpectrumData T = transmission(mr.omega, mr.power, ref.column("power"));
        int dips = count_dips(T.omega, T.value, a.value("min_prominence", 0.05));
        int expected = a.at("expected").get<int>();
        vr.pass = dips == expected;
        vr.detail = "dips=" + std::to_string(dips) + " expected=" + std::to_string(expected);
        vr.description = "dip_count[" + a.value("port", std::string("out")) + "]";
      } else if (kind == "port_power_positive") {
        const auto& mr = rec.monitor(a.value("port", std::string("out")));
        double pmin = 1e300;
        for (double p : mr.power) pmin = std::min(pmin, p);
        vr.pass = pmin > 0;
        vr.detail = "min power = " + std::to_string(pmin);
        vr.description = "port_power_positive";
      } else {
        vr.pass = false;
        vr.detail = "unknown verification kind '" + kind + "'";
      }
    } catch (const std::exception& e) {
      vr.pass = false;
      vr.detail = std::string("error: ") + e.what();
    }
    results.push_back(vr);
  }
  return results;
}

// ---- sweep ----------------------------------------------------------------

struct SweepRow {
  double value;
  std::vector<double> fits;  // per sweep_report quantity
};

// Runs one scenario per value; member runs may execute concurrently (each
// owns all its state).  A failed member aborts the sweep but completed
// outputs stay on disk.
inline CsvTable sweep_scenario(const json& doc, const std::string& param,
                               const std::vector<double>& values,
                               const std::string& out_base, int threads = 1) {
  if (values.empty()) throw ValidationError("sweep: empty value list");
  struct Member {
    double value;
    Scenario sc;
    RunRecord rec;
    std::string err;
    bool done = false;
  };
  std::vector<Member> members(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    json patched = apply_sweep_value(doc, param, values[i]);
    auto [sc, errs] = parse_scenario(patched);
    if (!errs.empty())
      throw ValidationError("sweep member " + std::to_string(values[i]) +
                            " invalid: " + errs.front());
    members[i].value = values[i];
    members[i].sc = std::move(sc);
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= members.size()) return;
      char sub[64];
      std::snprintf(sub, sizeof sub, "%s_%g", param.c_str(), members[i].value);
      try {
        members[i].rec = run_scenario(members[i].sc, out_base + "/" + sub);
        members[i].done = true;
      } catch (const std::exception& e) {
        members[i].err = e.what();
        return;
      }
    }
  };
  int nt = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& m : members)
    if (!m.done)
      throw RunError("sweep aborted: member " + std::to_string(m.value) +
                     " failed: " + (m.err.empty() ? "not run" : m.err), 2);

  // aggregate per the scenario's sweep_report (default: exponential rate of p_0)
  CsvTable out;
  const json& rep = doc.contains("sweep_report") ? doc.at("sweep_report") : json::object();
  std::string fitkind = rep.value("fit", std::string("exp_rate"));
  std::string series = rep.value("series", std::string("p_0"));
  double t_min = rep.value("t_min", -1.0);
  if (fitkind == "exp_rate") {
    out.columns = {param, "gamma"};
    for (auto& m : members)
      out.rows.push_back({m.value, fit_exponential(m.rec.t, m.rec.series(series), t_min)});
  } else if (fitkind == "master") {
    out.columns = {param, "gamma11", "gamma12", "g12"};
    for (auto& m : members) {
      std::vector<double> ts, p1, p2;
      for (size_t i = 0; i < m.rec.t.size(); ++i) {
        if (t_min >= 0 && m.rec.t[i] < t_min) continue;
        ts.push_back(m.rec.t[i]);
        p1.push_back(m.rec.pe.at(0)[i]);
        p2.push_back(m.rec.pe.at(1)[i]);
      }
      MasterFit mf = fit_master_equation(ts, p1, p2);
      out.rows.push_back({m.value, mf.gamma11, mf.gamma12, mf.g12});
    }
  } else {
    throw ValidationError("unknown sweep_report fit '" + fitkind + "'");
  }
  write_csv(out, out_base + "/sweep_" + param + ".csv");
  return out;
}

}  // namespace qfdtd

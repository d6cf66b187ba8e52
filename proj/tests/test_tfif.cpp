#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "qfdtd/greens.hpp"
#include "qfdtd/tfif.hpp"

using namespace qfdtd;

namespace {

GridSpec spec2d(int nx, int ny) {
  GridSpec gs;
  gs.dim = 2;
  gs.cells = {nx, ny, 1};
  gs.dx = 0.05;
  gs.courant = 0.5;
  return gs;
}

// aux grid cloned from the main-grid geometry: exact discrete exclusion
void make_matched(TfifSystem& sys, TlsUnit& u, const GridSpec& gs, const CpmlParams& cp) {
  double eps_local = sys.main.eps_at(u.sample_comp, u.sample_cell);
  u.aux->grid = YeeGrid(gs, cp);
  u.aux->grid.paint_eps([eps_local](const Vec3&) { return eps_local; });
  u.aux->dipole_cell = u.sample_cell;
  u.aux->offset_cells = {0, 0, 0};
}

}  // namespace

TEST_CASE("TLS placement validation") {
  TfifSystem sys(( YeeGrid(spec2d(100, 100), {}) ));
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.01, 0, 0};
  SECTION("dipole must be axis aligned") {
    d.dipole = {0.01, 0.01, 0};
    d.position = {2.5, 2.5, 0};
    CHECK_THROWS_AS(sys.add_tls(d, TlsSolver::Amplitude, {0, 0}, true), ValidationError);
  }
  SECTION("clearance from the boundary") {
    d.position = {0.3, 2.5, 0};  // inside the CPML
    CHECK_THROWS_AS(sys.add_tls(d, TlsSolver::Amplitude, {0, 0}, true), ValidationError);
  }
  SECTION("same edge rejected") {
    d.position = {2.5, 2.5, 0};
    sys.add_tls(d, TlsSolver::Amplitude, {1, 0}, true);
    TlsDescriptor d2 = d;
    d2.position = {2.51, 2.5, 0};  // snaps onto the same Ex edge
    CHECK_THROWS_AS(sys.add_tls(d2, TlsSolver::Amplitude, {0, 0}, true), ValidationError);
  }
  SECTION("separations of one cell are allowed (overlapping boxes)") {
    d.position = {2.5, 2.5, 0};
    sys.add_tls(d, TlsSolver::Amplitude, {1, 0}, true);
    TlsDescriptor d2 = d;
    d2.position = {2.5, 2.55, 0};  // one cell up
    CHECK_NOTHROW(sys.add_tls(d2, TlsSolver::Amplitude, {0, 0}, true));
  }
}

TEST_CASE("N = 0 reduces to the plain FDTD update bit-exactly") {
  CpmlParams cp;
  GridSpec gs = spec2d(90, 90);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  auto wf = [](double t) { return std::sin(2 * pi * t) * std::exp(-(t - 2) * (t - 2)); };
  sys.electric_sources.push_back({Comp::Ey, {45, 45, 0}, wf});
  YeeGrid plain(gs, cp);
  CurrentSource src{Comp::Ey, {45, 45, 0}, wf};
  for (int n = 0; n < 700; ++n) {
    sys.step();
    plain.step_e();
    src.apply(plain, n * plain.dt());
    plain.apply_pec();
    plain.step_h();
  }
  for (Comp c : {Comp::Ex, Comp::Ey, Comp::Hz}) {
    const auto& a = sys.main.field(c).v;
    const auto& b = plain.field(c).v;
    REQUIRE(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("self-field exclusion below 1e-6 of the peak radiated field", "[physics]") {
  CpmlParams cp;
  GridSpec gs = spec2d(120, 120);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.05, 0, 0};
  d.gamma = gamma_vac(2 * pi, 0.05, 2);
  d.position = {3.0, 3.0, 0};
  sys.add_tls(d, TlsSolver::Amplitude, complexd(1, 0), true);
  make_matched(sys, sys.tls[0], gs, cp);
  double peak_outside = 0, worst = 0;
  for (int n = 0; n < 3000; ++n) {
    sys.step();
    peak_outside =
        std::max(peak_outside, std::abs(sys.main.field(Comp::Ex).at(60, 64, 0)));
    worst = std::max(worst, std::abs(sys.sampled_field(sys.tls[0])));
  }
  REQUIRE(peak_outside > 0);
  CHECK(worst / peak_outside < 1e-6);
}

TEST_CASE("fields outside Omega match a direct-dipole run", "[physics]") {
  CpmlParams cp;
  GridSpec gs = spec2d(120, 120);
  auto jwave = [](double t) {
    double ramp = t < 1.0 ? 0.5 * (1 - std::cos(pi * t)) : 1.0;
    return std::sin(2 * pi * t) * ramp / (0.05 * 0.05);
  };
  // reference: plain dipole current on the same edge
  YeeGrid ref(gs, cp);
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.05, 0, 0};
  d.position = {3.0, 3.0, 0};

  auto run_tfif = [&](bool matched) {
    TfifSystem sys(( YeeGrid(gs, cp) ));
    sys.add_tls(d, TlsSolver::Amplitude, complexd(0, 0), true);
    if (matched) make_matched(sys, sys.tls[0], gs, cp);
    std::vector<double> probes;
    for (int n = 0; n < 1200; ++n) {
      sys.tls[0].j_density = jwave(n * sys.main.dt());
      sys.step();
      sys.tls[0].state.b = 0;
      for (int off : {4, 8, 16, 24})
        probes.push_back(sys.main.field(Comp::Ex).at(60, 60 + off, 0));
    }
    return probes;
  };
  Comp c;
  Int3 cell = TfifSystem::snap_to_edge(ref, d.position, 0, &c);
  CurrentSource src{c, cell, jwave};
  std::vector<double> ref_probes;
  for (int n = 0; n < 1200; ++n) {
    ref.step_e();
    src.apply(ref, n * ref.dt());
    ref.apply_pec();
    ref.step_h();
    for (int off : {4, 8, 16, 24})
      ref_probes.push_back(ref.field(Comp::Ex).at(60, 60 + off, 0));
  }
  auto rms_rel = [&](const std::vector<double>& probes) {
    double num = 0, den = 0;
    // compare after the wavefront has passed all probes (t > 2)
    size_t start = 4 * static_cast<size_t>(2.0 / ref.dt());
    for (size_t i = start; i < probes.size(); ++i) {
      num += (probes[i] - ref_probes[i]) * (probes[i] - ref_probes[i]);
      den += ref_probes[i] * ref_probes[i];
    }
    return std::sqrt(num / den);
  };
  CHECK(rms_rel(run_tfif(true)) < 1e-10);   // matched aux: identical propagation
  CHECK(rms_rel(run_tfif(false)) < 0.01);   // compact aux: within 1% rms
}

TEST_CASE("sampled field respects the mirror round-trip causality", "[physics]") {
  // band-limited scripted radiation (a quenched amplitude would carry
  // arbitrarily fast spectral tails at trace levels); the sampled field
  // must stay at the exclusion floor until the mirror round trip
  CpmlParams cp;
  GridSpec gs = spec2d(140, 120);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  double h = 1.0;  // mirror at y = 1.0, emitter at y = 2.0
  sys.main.paint_pec([](const Vec3& r) { return r.y <= 1.0; });
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.05, 0, 0};
  d.gamma = gamma_vac(2 * pi, 0.05, 2);
  d.position = {3.5, 2.0, 0};
  sys.add_tls(d, TlsSolver::Amplitude, complexd(0, 0), true);
  make_matched(sys, sys.tls[0], gs, cp);
  TlsUnit& u = sys.tls[0];
  auto jwave = [](double t) {
    double ramp = t < 4.0 ? 0.5 * (1 - std::cos(pi * t / 4.0)) : 1.0;
    return ramp * std::sin(2 * pi * t) / (0.05 * 0.05);
  };
  double t_round = 2 * h / units::c0;
  double peak = 0;
  std::vector<std::pair<double, double>> trace;
  for (int n = 0; n < 3000; ++n) {
    u.j_density = jwave(n * sys.main.dt());
    sys.step();
    u.state.b = 0;
    double s = std::abs(sys.sampled_field(u));
    trace.emplace_back(sys.time(), s);
    peak = std::max(peak, s);
  }
  REQUIRE(peak > 0);
  // the discrete front carries an exponentially decaying numerical edge
  // (~1e-4 of peak two steps early at 20 cells/lambda), so the 1e-8 level
  // is enforced up to 80% of the round trip rather than 2 dt before it
  for (auto& [t, s] : trace)
    if (t < 0.8 * t_round) REQUIRE(s < 1e-8 * peak);
}

TEST_CASE("free-space decay follows exp(-Gamma t) within 2% over 5 lifetimes",
          "[physics]") {
  CpmlParams cp;
  GridSpec gs = spec2d(120, 120);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.05, 0, 0};
  d.gamma = gamma_vac(2 * pi, 0.05, 2);
  d.position = {3.0, 3.0, 0};
  sys.add_tls(d, TlsSolver::Amplitude, complexd(1, 0), true);
  make_matched(sys, sys.tls[0], gs, cp);
  long steps = static_cast<long>(5.0 / d.gamma / sys.main.dt());
  double worst = 0;
  for (long n = 0; n < steps; ++n) {
    sys.step();
    double expect = std::exp(-d.gamma * sys.time());
    worst = std::max(worst,
                     std::abs(sys.tls[0].state.excited_probability() - expect) / expect);
  }
  CHECK(worst < 0.02);
}

TEST_CASE("two emitters one cell apart: overlapping boxes run and stay bounded",
          "[physics]") {
  CpmlParams cp;
  GridSpec gs = spec2d(100, 100);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.02, 0, 0};
  d.gamma = gamma_vac(2 * pi, 0.02, 2);
  d.position = {2.5, 2.5, 0};
  sys.add_tls(d, TlsSolver::Amplitude, complexd(1, 0), true);
  TlsDescriptor d2 = d;
  d2.index = 1;
  d2.position = {2.5, 2.55, 0};  // separation = one cell
  sys.add_tls(d2, TlsSolver::Amplitude, complexd(0, 0), true);
  make_matched(sys, sys.tls[0], gs, cp);
  make_matched(sys, sys.tls[1], gs, cp);
  double p_worst = 0;
  for (int n = 0; n < 4000; ++n) {
    sys.step();
    double ptot = sys.n_exc();
    p_worst = std::max(p_worst, ptot);
    REQUIRE(std::isfinite(ptot));
  }
  CHECK(p_worst <= 1.0 + 1e-3);
  // the second emitter actually absorbed some excitation
  CHECK(sys.tls[1].state.excited_probability() > 1e-6);
}

TEST_CASE("naive (not excluded) mode drives the TLS with its own field",
          "[physics]") {
  CpmlParams cp;
  GridSpec gs = spec2d(100, 100);
  TfifSystem sys(( YeeGrid(gs, cp) ));
  TlsDescriptor d;
  d.omega0 = 2 * pi;
  d.dipole = {0.02, 0, 0};
  d.gamma = 0.0;  // no explicit decay: any evolution comes from self-interaction
  d.position = {2.5, 2.5, 0};
  sys.add_tls(d, TlsSolver::Amplitude, complexd(1, 0), false);
  for (int n = 0; n < 1500; ++n) sys.step();
  double p = sys.tls[0].state.excited_probability();
  // the huge discrete self-field shifts and damps the amplitude; it must
  // not remain at the free-evolution value 1
  CHECK(std::abs(p - 1.0) > 1e-3);
}

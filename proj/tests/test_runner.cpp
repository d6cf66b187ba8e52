#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "qfdtd/runner.hpp"
#include "qfdtd/svg.hpp"

using namespace qfdtd;

namespace {

json decay_doc(double dipole = 0.04) {
  json doc = json::parse(R"({
    "schema_version": 1,
    "name": "runner_decay",
    "grid": {"dimension": 2, "size": [6.0, 6.0], "resolution": 20},
    "tls": [{"position": [3.0, 3.0], "dipole": [0.04, 0, 0],
             "initial_amplitude": [1.0, 0.0]}],
    "run": {"max_steps": 3000, "output_every": 10},
    "verify": [{"kind": "decay_rate", "series": "p_0", "oracle": "gamma_vac",
                "rel_tol": 0.02, "t_min": 2.0}]
  })");
  doc["tls"][0]["dipole"][0] = dipole;
  return doc;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("run record invariants") {
  auto [sc, errs] = parse_scenario(decay_doc());
  REQUIRE(errs.empty());
  RunRecord rec = run_scenario(sc);
  REQUIRE(rec.t.size() > 10);
  for (size_t i = 1; i < rec.t.size(); ++i) REQUIRE(rec.t[i] > rec.t[i - 1]);
  CHECK(rec.nexc[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(rec.scenario_hash == sc.hash());
  // single-excitation bound
  for (double v : rec.nexc) CHECK(v <= 1.0 + 1e-6);
}

TEST_CASE("identical scenarios produce byte-identical outputs") {
  namespace fs = std::filesystem;
  auto [sc, errs] = parse_scenario(decay_doc());
  REQUIRE(errs.empty());
  fs::remove_all("/tmp/qfdtd_det_a");
  fs::remove_all("/tmp/qfdtd_det_b");
  run_scenario(sc, "/tmp/qfdtd_det_a");
  run_scenario(sc, "/tmp/qfdtd_det_b");
  CHECK(slurp("/tmp/qfdtd_det_a/tls.csv") == slurp("/tmp/qfdtd_det_b/tls.csv"));
}

TEST_CASE("verification passes on a clean decay and fails on a bogus expectation") {
  auto [sc, errs] = parse_scenario(decay_doc());
  REQUIRE(errs.empty());
  RunRecord rec = run_scenario(sc);
  auto results = verify_run(sc, rec);
  REQUIRE(results.size() == 1);
  CHECK(results[0].pass);

  json bad = decay_doc();
  bad["verify"][0]["oracle"] = "value";
  bad["verify"][0]["value"] = 123.0;
  auto [sc2, errs2] = parse_scenario(bad);
  REQUIRE(errs2.empty());
  auto results2 = verify_run(sc2, rec);
  REQUIRE(results2.size() == 1);
  CHECK_FALSE(results2[0].pass);
}

TEST_CASE("instability detector reports the step index") {
  // an intentionally broken source injects a NaN
  json doc = decay_doc();
  auto [sc, errs] = parse_scenario(doc);
  REQUIRE(errs.empty());
  BuiltSystem bs = build_system(sc);
  bs.sys.main.field(Comp::Hz).at(60, 60, 0) = std::numeric_limits<double>::quiet_NaN();
  bool threw = false;
  try {
    for (int n = 0; n < 2000; ++n) {
      bs.sys.step();
      if ((n + 1) % 500 == 0 && !bs.sys.main.all_finite())
        throw RunError("non-finite field detected at step " + std::to_string(n + 1), 2);
    }
  } catch (const RunError& e) {
    threw = true;
    CHECK(e.exit_code == 2);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("stop criterion ends the run after the excitation dies") {
  json doc = decay_doc(0.08);  // fast decay
  doc["run"]["max_steps"] = 400000;
  doc["run"]["stop_threshold"] = 1e-6;
  doc["run"]["max_lifetimes"] = 100.0;
  auto [sc, errs] = parse_scenario(doc);
  REQUIRE(errs.empty());
  RunRecord rec = run_scenario(sc);
  CHECK(rec.steps_run < 400000);
  CHECK(rec.nexc.back() < 1e-4);
}

TEST_CASE("sweep aggregates fitted rates and rejects empty value lists") {
  json doc = decay_doc();
  doc["run"]["max_steps"] = 2500;
  doc["sweepables"] = {{"dipole", json::array({{{"ptr", "/tls/0/dipole/0"}}})}};
  doc["sweep_report"] = {{"fit", "exp_rate"}, {"series", "p_0"}, {"t_min", 2.0}};
  namespace fs = std::filesystem;
  fs::remove_all("/tmp/qfdtd_sweep");
  CsvTable t = sweep_scenario(doc, "dipole", {0.03, 0.06}, "/tmp/qfdtd_sweep", 2);
  REQUIRE(t.rows.size() == 2);
  // quadrupling check: gamma scales with dipole^2
  CHECK(t.rows[1][1] / t.rows[0][1] == Catch::Approx(4.0).epsilon(0.02));
  CHECK(fs::exists("/tmp/qfdtd_sweep/sweep_dipole.csv"));
  CHECK_THROWS_AS(sweep_scenario(doc, "dipole", {}, "/tmp/qfdtd_sweep2", 1),
                  ValidationError);
}

TEST_CASE("csv round trip and formatting") {
  CsvTable t;
  t.columns = {"a", "b"};
  t.rows = {{1.0 / 3.0, 2.0}, {4.0, 1e-17}};
  write_csv(t, "/tmp/qfdtd_csv_test.csv");
  CsvTable r = read_csv("/tmp/qfdtd_csv_test.csv");
  REQUIRE(r.columns == t.columns);
  CHECK(r.rows[0][0] == t.rows[0][0]);  // 17 significant digits survive
  CHECK(r.rows[1][1] == t.rows[1][1]);
}

TEST_CASE("plot produces deterministic SVG and rejects bad input") {
  CsvTable t;
  t.columns = {"t", "p"};
  for (int i = 0; i < 50; ++i)
    t.rows.push_back({0.1 * i, std::exp(-0.3 * i * 0.1)});
  std::string a = plot_svg(t, PlotKind::TimeSeries, true);
  std::string b = plot_svg(t, PlotKind::TimeSeries, true);
  CHECK(a == b);
  CHECK(a.find("<polyline") != std::string::npos);
  CsvTable empty;
  empty.columns = {"t", "p"};
  CHECK_THROWS_AS(plot_svg(empty, PlotKind::TimeSeries, false), ValidationError);

  // spectrum kind marks dips
  CsvTable s;
  s.columns = {"omega", "T"};
  for (int i = 0; i < 200; ++i) {
    double w = 6.0 + 0.005 * i;
    s.rows.push_back({w, 1.0 - 0.8 * std::exp(-(w - 6.5) * (w - 6.5) / 1e-3)});
  }
  std::string svg = plot_svg(s, PlotKind::Spectrum, false);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("snapshot requests write files through the runner") {
  json doc = decay_doc();
  doc["run"]["max_steps"] = 50;
  doc["snapshots"] = json::array({json{{"component", "Hz"}, {"at_step", 20}}});
  auto [sc, errs] = parse_scenario(doc);
  REQUIRE(errs.empty());
  namespace fs = std::filesystem;
  fs::remove_all("/tmp/qfdtd_snap_run");
  run_scenario(sc, "/tmp/qfdtd_snap_run");
  CHECK(fs::exists("/tmp/qfdtd_snap_run/snapshot_Hz_20.f64"));
  CHECK(fs::exists("/tmp/qfdtd_snap_run/snapshot_Hz_20.meta"));
  CHECK(fs::exists("/tmp/qfdtd_snap_run/tls.csv"));
  CHECK(fs::exists("/tmp/qfdtd_snap_run/meta.json"));
}

TEST_CASE("2D emitters embedded in a dielectric keep the vacuum-form rate") {
  // Im G_2D(r,r) is independent of the background index, so the explicit
  // decay constant must not pick up an index factor in 2D
  json doc = decay_doc();
  doc["structures"] = json::array(
      {json{{"type", "block"}, {"center", {3.0, 3.0}}, {"size", {2.0, 2.0}}, {"eps", 4.0}}});
  auto [sc, errs] = parse_scenario(doc);
  REQUIRE(errs.empty());
  BuiltSystem bs = build_system(sc);
  CHECK(bs.sys.tls[0].desc.gamma ==
        Catch::Approx(gamma_vac(2 * pi, 0.04, 2)).epsilon(1e-12));
  CHECK(bs.sys.warnings.empty());  // interface is 20 cells away: no warning

  // moving the emitter within 2 cells of the interface raises the warning
  json doc2 = doc;
  doc2["tls"][0]["position"] = {3.95, 3.0};
  auto [sc2, errs2] = parse_scenario(doc2);
  REQUIRE(errs2.empty());
  BuiltSystem bs2 = build_system(sc2);
  REQUIRE_FALSE(bs2.sys.warnings.empty());
  CHECK(bs2.sys.warnings[0].find("interface") != std::string::npos);
}

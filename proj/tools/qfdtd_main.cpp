// Command-line front end: scenario runs with embedded verification,
// parameter sweeps, curve fitting on produced CSVs, SVG plots, and direct
// oracle evaluation.
//
// Exit codes: 0 success, 1 validation error, 2 runtime instability,
// 3 verification failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "qfdtd/runner.hpp"
#include "qfdtd/svg.hpp"

using namespace qfdtd;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ValidationError("invalid JSON in " + path);
  return doc;
}

Scenario load_scenario(const std::string& path) {
  auto [sc, errs] = parse_scenario(load_json(path));
  if (!errs.empty()) {
    std::cerr << "scenario validation failed:\n";
    for (const auto& e : errs) std::cerr << "  - " << e << "\n";
    throw RunError("invalid scenario", 1);
  }
  return sc;
}

int cmd_run(const std::string& path, bool verify, std::string out_dir) {
  Scenario sc = load_scenario(path);
  if (out_dir.empty()) out_dir = "runs/" + sc.name;
  RunRecord rec = run_scenario(sc, out_dir);
  for (const auto& w : rec.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << sc.name << ": " << rec.steps_run << " steps, "
            << rec.t.size() << " samples, " << rec.wall_seconds << " s -> "
            << out_dir << "\n";
  if (!verify) return 0;
  std::string parent = std::filesystem::path(out_dir).parent_path().string();
  bool all = true;
  for (const auto& vr : verify_run(sc, rec, parent)) {
    std::cout << (vr.pass ? "PASS " : "FAIL ") << vr.description << ": " << vr.detail
              << "\n";
    all = all && vr.pass;
  }
  return all ? 0 : 3;
}

int cmd_sweep(const std::string& path, const std::string& param,
              const std::string& values_csv, std::string out_dir, int threads) {
  json doc = load_json(path);
  {
    auto [sc, errs] = parse_scenario(doc);
    if (!errs.empty()) {
      for (const auto& e : errs) std::cerr << "  - " << e << "\n";
      throw RunError("invalid scenario", 1);
    }
    if (out_dir.empty()) out_dir = "runs/" + sc.name + "_sweep";
  }
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
  CsvTable t = sweep_scenario(doc, param, values, out_dir, threads);
  std::cout << "sweep over " << param << " (" << values.size() << " runs) -> "
            << out_dir << "/sweep_" << param << ".csv\n";
  return 0;
}

int cmd_fit(const std::string& path, const std::string& model, const std::string& xcol,
            std::vector<std::string> ycols) {
  CsvTable t = read_csv(path);
  std::string xc = xcol.empty() ? t.columns.at(0) : xcol;
  std::vector<double> xs = t.column(xc);
  if (model == "exp") {
    std::string yc = ycols.empty() ? t.columns.at(1) : ycols[0];
    double g = fit_exponential(xs, t.column(yc));
    std::cout << "model=exp series=" << yc << " gamma=" << g << "\n";
  } else if (model == "lorentzian") {
    std::string yc = ycols.empty() ? t.columns.back() : ycols[0];
    LorentzianFit lf = fit_lorentzian(xs, t.column(yc));
    std::cout << "model=lorentzian center=" << lf.center << " fwhm=" << lf.fwhm
              << " peak=" << lf.peak << "\n";
  } else if (model == "master") {
    std::string y1 = ycols.size() > 0 ? ycols[0] : "p_0";
    std::string y2 = ycols.size() > 1 ? ycols[1] : "p_1";
    MasterFit mf = fit_master_equation(xs, t.column(y1), t.column(y2));
    std::cout << "model=master gamma11=" << mf.gamma11 << " gamma12=" << mf.gamma12
              << " g12=" << mf.g12 << " converged=" << mf.detail.converged << "\n";
  } else if (model == "powerlaw") {
    std::string yc = ycols.empty() ? t.columns.at(1) : ycols[0];
    double p = fit_powerlaw(xs, t.column(yc));
    std::cout << "model=powerlaw exponent=" << p << "\n";
  } else {
    throw ValidationError("unknown fit model '" + model + "'");
  }
  return 0;
}

int cmd_plot(const std::string& path, const std::string& kind, bool logy,
             std::string out) {
  CsvTable t = read_csv(path);
  PlotKind pk = kind == "spectrum" ? PlotKind::Spectrum
               : kind == "sweep"   ? PlotKind::Sweep
                                   : PlotKind::TimeSeries;
  if (out.empty()) out = path + ".svg";
  write_plot(t, pk, logy, out);
  std::cout << out << "\n";
  return 0;
}

int cmd_oracle(const std::string& which, double omega0, double dipole, int dim,
               std::vector<double> ra, std::vector<double> rb, double g11, double g12,
               double gg12, double t, const std::string& env) {
  if (which == "gamma") {
    std::cout << "gamma_vac(" << omega0 << ", " << dipole << ", " << dim
              << "d) = " << gamma_vac(omega0, dipole, dim) << "\n";
  } else if (which == "green") {
    GreensSpec gs;
    gs.env = env == "vacuum2d"        ? GreensEnv::Vacuum2D
             : env == "pec_halfspace" ? GreensEnv::PecHalfspace
                                      : GreensEnv::Vacuum3D;
    Vec3 a{ra.size() > 0 ? ra[0] : 0, ra.size() > 1 ? ra[1] : 0, ra.size() > 2 ? ra[2] : 0};
    Vec3 b{rb.size() > 0 ? rb[0] : 0, rb.size() > 1 ? rb[1] : 0, rb.size() > 2 ? rb[2] : 0};
    GreensTensor G = green_function(gs, a, b, omega0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j)
        std::cout << G.g[i][j].real() << (G.g[i][j].imag() < 0 ? "" : "+")
                  << G.g[i][j].imag() << "i  ";
      std::cout << "\n";
    }
  } else if (which == "master") {
    auto [p1, p2] = master_p1p2(t, g11, g12, gg12);
    std::cout << "P1(" << t << ") = " << p1 << ", P2(" << t << ") = " << p2 << "\n";
  } else {
    throw ValidationError("unknown oracle '" + which + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FDTD electromagnetic solver with embedded two-level systems"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, param, values, model, xcol, kind, env = "vacuum3d";
  std::vector<std::string> ycols;
  bool verify = false, logy = false;
  int threads = 1, dim = 3;
  double omega0 = 2 * pi, dipole = 0.01, g11 = 1, g12 = 0, gg12 = 0, t = 0;
  std::vector<double> ra, rb;
  std::string oracle_which;

  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path)->required();
  run->add_flag("--verify", verify, "evaluate embedded assertions; exit 3 on violation");
  run->add_option("--out", out_dir, "output directory (default runs/<name>)");
  run->add_option("--threads", threads, "accepted for interface compatibility");

  auto* sweep = app.add_subcommand("sweep", "run a scenario once per parameter value");
  sweep->add_option("scenario", scenario_path)->required();
  sweep->add_option("--param", param)->required();
  sweep->add_option("--values", values)->required();
  sweep->add_option("--out", out_dir);
  sweep->add_option("--threads", threads, "concurrent member runs");

  auto* fit = app.add_subcommand("fit", "fit a model to a produced CSV");
  fit->add_option("csv", scenario_path)->required();
  fit->add_option("--model", model)->required()
      ->check(CLI::IsMember({"exp", "lorentzian", "master", "powerlaw"}));
  fit->add_option("--xcol", xcol);
  fit->add_option("--ycol", ycols);

  auto* plot = app.add_subcommand("plot", "render a CSV as SVG");
  plot->add_option("csv", scenario_path)->required();
  plot->add_option("--kind", kind)->required()
      ->check(CLI::IsMember({"timeseries", "spectrum", "sweep"}));
  plot->add_flag("--log", logy, "log-scale y");
  plot->add_option("--out", out_dir);

  auto* oracle = app.add_subcommand("oracle", "evaluate analytical oracles");
  oracle->add_option("which", oracle_which)->required()
      ->check(CLI::IsMember({"gamma", "green", "master"}));
  oracle->add_option("--omega0", omega0);
  oracle->add_option("--dipole", dipole);
  oracle->add_option("--dim", dim);
  oracle->add_option("--env", env);
  oracle->add_option("--ra", ra)->expected(-1);
  oracle->add_option("--rb", rb)->expected(-1);
  oracle->add_option("--gamma11", g11);
  oracle->add_option("--gamma12", g12);
  oracle->add_option("--g12", gg12);
  oracle->add_option("--t", t);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, verify, out_dir);
    if (sweep->parsed()) return cmd_sweep(scenario_path, param, values, out_dir, threads);
    if (fit->parsed()) return cmd_fit(scenario_path, model, xcol, ycols);
    if (plot->parsed()) return cmd_plot(scenario_path, kind, logy, out_dir);
    if (oracle->parsed())
      return cmd_oracle(oracle_which, omega0, dipole, dim, ra, rb, g11, g12, gg12, t, env);
  } catch (const RunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#pragma once

// Declarative scenario files: JSON with a strict, versioned schema.  Unknown
// keys are rejected, all validation errors are collected (not just the
// first), numeric fields may reference declared parameters as "$name", and
// sweepable parameters patch scenario values through declared JSON pointers.

#include <json.hpp>

#include "qfdtd/greens.hpp"
#include "qfdtd/tfif.hpp"

namespace qfdtd {

using nlohmann::json;

struct StructureSpec {
  std::string type;  // block | disk | ring | pec_block
  Vec3 center{0, 0, 0};
  Vec3 size{0, 0, 0};
  double inner_radius = 0, outer_radius = 0, radius = 0;
  double eps = 1.0;
};

struct TlsSpec {
  Vec3 position{0, 0, 0};
  Vec3 dipole{0.01, 0, 0};
  double omega0 = 2.0 * pi;
  complexd initial{0.0, 0.0};
  double gamma_override = -1.0;  // <0: use the oracle value
  std::string solver = "amplitude";
};

struct TlsArraySpec {
  Int3 count{1, 1, 1};
  double spacing = 0.08;
  Vec3 center{0, 0, 0};
  int axis_a = 0, axis_b = 1;  // array plane
  Vec3 dipole{0, 0, 0.002};
  double omega0 = 2.0 * pi;
  std::string initial = "symmetric";  // b_i(0) = 1/sqrt(N)
  std::string solver = "amplitude";
};

struct SourceSpec {
  std::string type;  // gaussian_plane_wave | waveguide_mode | dipole
  Vec3 box_lo{0, 0, 0}, box_hi{0, 0, 0};
  int propagation_axis = 0;
  int polarization_axis = 1;
  double omega = 2.0 * pi, tau = 2.0, t0 = 8.0, amplitude = 1.0;
  // waveguide mode
  double line_x = 0, core_eps = 4.0, clad_eps = 1.0, core_width = 0.3, core_center = 0;
  // dipole
  Vec3 position{0, 0, 0};
  std::string component = "Ex";
};

struct FreqSpec {
  std::vector<double> list;  // explicit, or generated from center/halfwidth/count
  double center = 0, halfwidth = 0;
  int count = 301;

  std::vector<double> resolve() const {
    if (!list.empty()) return list;
    std::vector<double> w(count);
    for (int i = 0; i < count; ++i)
      w[i] = center - halfwidth + 2.0 * halfwidth * i / (count - 1);
    return w;
  }
};

struct MonitorSpec {
  std::string type;  // flux_box | port
  std::string name = "monitor";
  Vec3 center{0, 0, 0}, size{0, 0, 0};
  int axis = 0;
  double position = 0, span_center = 0, span = 0;
  FreqSpec frequencies;
  int stride = 1;
  bool time_integral = false;
};

struct SnapshotSpec {
  std::string component = "Hz";
  long at_step = 0;
};

struct RunControls {
  long max_steps = 200000;
  double max_time = -1.0;       // overrides max_steps when positive
  double stop_threshold = 1e-8; // on field energy and n_exc, rel. to peak
  double max_lifetimes = 20.0;
  int output_every = 20;
  int check_every = 500;
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  int dimension = 2;
  Vec3 domain_size{10, 10, 0};
  double resolution = 20;
  double courant = 0.5;
  CpmlParams cpml;
  std::vector<StructureSpec> structures;
  std::vector<TlsSpec> tls;
  std::vector<TlsArraySpec> tls_arrays;
  std::string self_interaction = "excluded";  // or "naive"
  std::string aux_mode = "matched";           // or "compact"
  AuxGridParams aux_params;
  std::vector<SourceSpec> sources;
  std::vector<MonitorSpec> monitors;
  std::vector<SnapshotSpec> snapshots;
  RunControls run;
  json sweepables = json::object();
  json verify = json::array();
  json raw;  // canonical parsed form, basis of the scenario hash

  std::uint64_t hash() const { return fnv1a(raw.dump()); }
};

namespace detail {

class ScenarioParser {
 public:
  std::vector<std::string> errors;
  json params = json::object();

  void fail(const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  }

  void check_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) { fail(where, "expected an object"); return; }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : allowed)
        if (it.key() == k) { ok = true; break; }
      if (!ok) fail(where, "unknown key '" + it.key() + "'");
    }
  }

  double num(const json& obj, const std::string& where, const char* key,
             double fallback, bool required = false) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return fallback;
    }
    return resolve_num(obj[key], where + "." + key);
  }

  double resolve_num(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      if (!s.empty() && s[0] == '$') {
        std::string pn = s.substr(1);
        if (params.contains(pn) && params[pn].is_number())
          return params[pn].get<double>();
        fail(where, "unknown parameter reference '" + s + "'");
        return 0.0;
      }
    }
    fail(where, "expected a number or \"$parameter\"");
    return 0.0;
  }

  Vec3 vec(const json& obj, const std::string& where, const char* key, Vec3 fallback,
           bool required = false) {
    if (!obj.contains(key)) {
      if (required) fail(where, std::string("missing key '") + key + "'");
      return fallback;
    }
    const json& a = obj[key];
    if (!a.is_array() || a.size() < 2 || a.size() > 3) {
      fail(where + "." + key, "expected [x, y] or [x, y, z]");
      return fallback;
    }
    Vec3 out{0, 0, 0};
    for (size_t i = 0; i < a.size(); ++i)
      out[static_cast<int>(i)] = resolve_num(a[i], where + "." + key);
    return out;
  }

  int axis_of(const json& v, const std::string& where) {
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      if (s == "x") return 0;
      if (s == "y") return 1;
      if (s == "z") return 2;
    }
    fail(where, "expected axis \"x\", \"y\" or \"z\"");
    return 0;
  }
};

}  // namespace detail

// Parses and validates; returns the scenario and the full error list.
inline std::pair<Scenario, std::vector<std::string>> parse_scenario(const json& doc) {
  Scenario sc;
  detail::ScenarioParser P;
  if (!doc.is_object()) {
    return {sc, {"top level: expected a JSON object"}};
  }
  P.check_keys(doc, "top level",
               {"schema_version", "name", "parameters", "sweepables", "grid",
                "structures", "tls", "tls_arrays", "self_interaction", "aux_grid",
                "sources", "monitors", "snapshots", "run", "verify", "sweep_report"});
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != 1)
    P.fail("schema_version", "must be the integer 1");
  sc.name = doc.value("name", std::string("unnamed"));
  if (doc.contains("parameters")) {
    if (!doc["parameters"].is_object())
      P.fail("parameters", "expected an object of numbers");
    else {
      for (auto it = doc["parameters"].begin(); it != doc["parameters"].end(); ++it)
        if (!it.value().is_number())
          P.fail("parameters." + it.key(), "must be a number");
      P.params = doc["parameters"];
    }
  }
  if (doc.contains("sweepables")) sc.sweepables = doc["sweepables"];

  // grid
  if (!doc.contains("grid")) P.fail("grid", "missing");
  else {
    const json& g = doc["grid"];
    P.check_keys(g, "grid", {"dimension", "size", "resolution", "courant", "cpml"});
    sc.dimension = static_cast<int>(P.num(g, "grid", "dimension", 2, true));
    sc.domain_size = P.vec(g, "grid", "size", {10, 10, 0}, true);
    sc.resolution = P.num(g, "grid", "resolution", 20);
    sc.courant = P.num(g, "grid", "courant", 0.5);
    if (g.contains("cpml")) {
      const json& c = g["cpml"];
      P.check_keys(c, "grid.cpml",
                   {"thickness", "grading_order", "sigma_scale", "alpha_max", "kappa_max"});
      sc.cpml.thickness = static_cast<int>(P.num(c, "grid.cpml", "thickness", 10));
      sc.cpml.grading_order = P.num(c, "grid.cpml", "grading_order", 3);
      sc.cpml.sigma_scale = P.num(c, "grid.cpml", "sigma_scale", 1.0);
      sc.cpml.alpha_max = P.num(c, "grid.cpml", "alpha_max", 0.2);
      sc.cpml.kappa_max = P.num(c, "grid.cpml", "kappa_max", 1.0);
    }
    if (sc.dimension != 2 && sc.dimension != 3)
      P.fail("grid.dimension", "must be 2 or 3");
  }

  // structures
  if (doc.contains("structures")) {
    int i = 0;
    for (const json& s : doc["structures"]) {
      std::string where = "structures[" + std::to_string(i) + "]";
      StructureSpec st;
      st.type = s.value("type", std::string());
      if (st.type == "block" || st.type == "pec_block") {
        P.check_keys(s, where, {"type", "center", "size", "eps"});
        st.center = P.vec(s, where, "center", {}, true);
        st.size = P.vec(s, where, "size", {}, true);
      } else if (st.type == "disk") {
        P.check_keys(s, where, {"type", "center", "radius", "eps"});
        st.center = P.vec(s, where, "center", {}, true);
        st.radius = P.num(s, where, "radius", 0, true);
      } else if (st.type == "ring") {
        P.check_keys(s, where, {"type", "center", "inner_radius", "outer_radius", "eps"});
        st.center = P.vec(s, where, "center", {}, true);
        st.inner_radius = P.num(s, where, "inner_radius", 0, true);
        st.outer_radius = P.num(s, where, "outer_radius", 0, true);
      } else {
        P.fail(where, "unknown structure type '" + st.type + "'");
      }
      st.eps = P.num(s, where, "eps", 1.0, st.type == "block" || st.type == "disk" ||
                                            st.type == "ring");
      sc.structures.push_back(st);
      ++i;
    }
  }

  // tls
  if (doc.contains("tls")) {
    int i = 0;
    for (const json& t : doc["tls"]) {
      std::string where = "tls[" + std::to_string(i) + "]";
      P.check_keys(t, where,
                   {"position", "dipole", "omega0", "initial_amplitude",
                    "gamma_override", "solver"});
      TlsSpec ts;
      ts.position = P.vec(t, where, "position", {}, true);
      ts.dipole = P.vec(t, where, "dipole", {0.01, 0, 0}, true);
      ts.omega0 = P.num(t, where, "omega0", 2.0 * pi);
      if (t.contains("initial_amplitude")) {
        const json& a = t["initial_amplitude"];
        if (!a.is_array() || a.size() != 2)
          P.fail(where + ".initial_amplitude", "expected [re, im]");
        else
          ts.initial = complexd(P.resolve_num(a[0], where), P.resolve_num(a[1], where));
      }
      ts.gamma_override = P.num(t, where, "gamma_override", -1.0);
      ts.solver = t.value("solver", std::string("amplitude"));
      if (ts.solver != "amplitude" && ts.solver != "schrodinger" && ts.solver != "bloch")
        P.fail(where + ".solver", "must be amplitude|schrodinger|bloch");
      int nz = 0;
      for (int a = 0; a < 3; ++a) nz += ts.dipole[a] != 0.0 ? 1 : 0;
      if (nz != 1) P.fail(where + ".dipole", "dipole must be axis-aligned and nonzero");
      sc.tls.push_back(ts);
      ++i;
    }
  }

  // tls_arrays
  if (doc.contains("tls_arrays")) {
    int i = 0;
    for (const json& t : doc["tls_arrays"]) {
      std::string where = "tls_arrays[" + std::to_string(i) + "]";
      P.check_keys(t, where,
                   {"count", "spacing", "center", "plane_axes", "dipole", "omega0",
                    "initial", "solver"});
      TlsArraySpec as;
      if (t.contains("count") && t["count"].is_array() && t["count"].size() == 2) {
        as.count.x = static_cast<int>(P.resolve_num(t["count"][0], where + ".count"));
        as.count.y = static_cast<int>(P.resolve_num(t["count"][1], where + ".count"));
      } else {
        P.fail(where + ".count", "expected [nx, ny]");
      }
      as.spacing = P.num(t, where, "spacing", 0.08, true);
      as.center = P.vec(t, where, "center", {}, true);
      if (t.contains("plane_axes")) {
        const json& pa = t["plane_axes"];
        if (pa.is_array() && pa.size() == 2) {
          as.axis_a = P.axis_of(pa[0], where + ".plane_axes");
          as.axis_b = P.axis_of(pa[1], where + ".plane_axes");
        } else P.fail(where + ".plane_axes", "expected [axis, axis]");
      }
      as.dipole = P.vec(t, where, "dipole", {0, 0, 0.002}, true);
      as.omega0 = P.num(t, where, "omega0", 2.0 * pi);
      as.initial = t.value("initial", std::string("symmetric"));
      as.solver = t.value("solver", std::string("amplitude"));
      if (as.initial != "symmetric") P.fail(where + ".initial", "only 'symmetric' is supported");
      sc.tls_arrays.push_back(as);
      ++i;
    }
  }

  sc.self_interaction = doc.value("self_interaction", std::string("excluded"));
  if (sc.self_interaction != "excluded" && sc.self_interaction != "naive")
    P.fail("self_interaction", "must be excluded|naive");

  if (doc.contains("aux_grid")) {
    const json& a = doc["aux_grid"];
    P.check_keys(a, "aux_grid", {"mode", "margin", "cpml_thickness", "box_halfwidth"});
    sc.aux_mode = a.value("mode", std::string("matched"));
    if (sc.aux_mode != "matched" && sc.aux_mode != "compact")
      P.fail("aux_grid.mode", "must be matched|compact");
    sc.aux_params.margin = static_cast<int>(P.num(a, "aux_grid", "margin", 4));
    sc.aux_params.cpml_thickness =
        static_cast<int>(P.num(a, "aux_grid", "cpml_thickness", 10));
    sc.aux_params.box_halfwidth =
        static_cast<int>(P.num(a, "aux_grid", "box_halfwidth", 1));
  }

  // sources
  if (doc.contains("sources")) {
    int i = 0;
    for (const json& s : doc["sources"]) {
      std::string where = "sources[" + std::to_string(i) + "]";
      SourceSpec ss;
      ss.type = s.value("type", std::string());
      if (ss.type == "gaussian_plane_wave") {
        P.check_keys(s, where,
                     {"type", "box_lo", "box_hi", "propagation_axis",
                      "polarization_axis", "omega", "tau", "t0", "amplitude"});
        ss.box_lo = P.vec(s, where, "box_lo", {}, true);
        ss.box_hi = P.vec(s, where, "box_hi", {}, true);
        if (s.contains("propagation_axis"))
          ss.propagation_axis = P.axis_of(s["propagation_axis"], where);
        if (s.contains("polarization_axis"))
          ss.polarization_axis = P.axis_of(s["polarization_axis"], where);
      } else if (ss.type == "waveguide_mode") {
        P.check_keys(s, where,
                     {"type", "line_x", "core_eps", "clad_eps", "core_width",
                      "core_center_y", "omega", "tau", "t0", "amplitude"});
        ss.line_x = P.num(s, where, "line_x", 0, true);
        ss.core_eps = P.num(s, where, "core_eps", 4.0, true);
        ss.clad_eps = P.num(s, where, "clad_eps", 1.0);
        ss.core_width = P.num(s, where, "core_width", 0.3, true);
        ss.core_center = P.num(s, where, "core_center_y", 0, true);
      } else if (ss.type == "dipole") {
        P.check_keys(s, where,
                     {"type", "position", "component", "omega", "tau", "t0", "amplitude"});
        ss.position = P.vec(s, where, "position", {}, true);
        ss.component = s.value("component", std::string("Ex"));
      } else {
        P.fail(where, "unknown source type '" + ss.type + "'");
      }
      ss.omega = P.num(s, where, "omega", 2.0 * pi);
      ss.tau = P.num(s, where, "tau", 2.0);
      ss.t0 = P.num(s, where, "t0", 4.0 * ss.tau);
      ss.amplitude = P.num(s, where, "amplitude", 1.0);
      sc.sources.push_back(ss);
      ++i;
    }
  }

  // monitors
  auto parse_freqs = [&](const json& m, const std::string& where, FreqSpec& fs) {
    if (!m.contains("frequencies")) {
      P.fail(where, "missing key 'frequencies'");
      return;
    }
    const json& f = m["frequencies"];
    P.check_keys(f, where + ".frequencies", {"list", "center", "halfwidth", "count"});
    if (f.contains("list")) {
      for (const json& v : f["list"])
        fs.list.push_back(P.resolve_num(v, where + ".frequencies.list"));
    } else {
      fs.center = P.num(f, where + ".frequencies", "center", 0, true);
      fs.halfwidth = P.num(f, where + ".frequencies", "halfwidth", 0, true);
      fs.count = static_cast<int>(P.num(f, where + ".frequencies", "count", 301));
      if (fs.count < 2) P.fail(where + ".frequencies.count", "need at least 2");
    }
  };
  if (doc.contains("monitors")) {
    int i = 0;
    for (const json& m : doc["monitors"]) {
      std::string where = "monitors[" + std::to_string(i) + "]";
      MonitorSpec ms;
      ms.type = m.value("type", std::string());
      ms.name = m.value("name", "monitor" + std::to_string(i));
      if (ms.type == "flux_box") {
        P.check_keys(m, where,
                     {"type", "name", "center", "size", "frequencies", "stride",
                      "time_integral"});
        ms.center = P.vec(m, where, "center", {}, true);
        ms.size = P.vec(m, where, "size", {}, true);
      } else if (ms.type == "port") {
        P.check_keys(m, where,
                     {"type", "name", "axis", "position", "span_center", "span",
                      "frequencies", "stride", "time_integral"});
        if (m.contains("axis")) ms.axis = P.axis_of(m["axis"], where);
        ms.position = P.num(m, where, "position", 0, true);
        ms.span_center = P.num(m, where, "span_center", 0, true);
        ms.span = P.num(m, where, "span", 0, true);
      } else {
        P.fail(where, "unknown monitor type '" + ms.type + "'");
      }
      parse_freqs(m, where, ms.frequencies);
      ms.stride = static_cast<int>(P.num(m, where, "stride", 1));
      ms.time_integral = m.value("time_integral", false);
      sc.monitors.push_back(ms);
      ++i;
    }
  }

  if (doc.contains("snapshots")) {
    int i = 0;
    for (const json& s : doc["snapshots"]) {
      std::string where = "snapshots[" + std::to_string(i) + "]";
      P.check_keys(s, where, {"component", "at_step"});
      SnapshotSpec sp;
      sp.component = s.value("component", std::string("Hz"));
      sp.at_step = static_cast<long>(P.num(s, where, "at_step", 0, true));
      sc.snapshots.push_back(sp);
      ++i;
    }
  }

  if (doc.contains("run")) {
    const json& r = doc["run"];
    P.check_keys(r, "run",
                 {"max_steps", "max_time", "stop_threshold", "max_lifetimes",
                  "output_every", "check_every"});
    sc.run.max_steps = static_cast<long>(P.num(r, "run", "max_steps", 200000));
    sc.run.max_time = P.num(r, "run", "max_time", -1.0);
    sc.run.stop_threshold = P.num(r, "run", "stop_threshold", 1e-8);
    sc.run.max_lifetimes = P.num(r, "run", "max_lifetimes", 20.0);
    sc.run.output_every = static_cast<int>(P.num(r, "run", "output_every", 20));
    sc.run.check_every = static_cast<int>(P.num(r, "run", "check_every", 500));
  }

  if (doc.contains("verify")) {
    if (!doc["verify"].is_array()) P.fail("verify", "expected an array");
    else sc.verify = doc["verify"];
  }

  sc.raw = doc;
  return {sc, P.errors};
}

inline std::pair<Scenario, std::vector<std::string>> parse_scenario_text(
    const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    Scenario sc;
    return {sc, {"invalid JSON"}};
  }
  return parse_scenario(doc);
}

// Applies a sweep value: `param` must be declared under "sweepables" as a
// list of {"ptr": <json pointer>, "scale": s, "offset": o} targets.
inline json apply_sweep_value(const json& doc, const std::string& param, double value) {
  if (!doc.contains("sweepables") || !doc["sweepables"].contains(param))
    throw ValidationError("'" + param + "' is not a declared sweepable");
  json out = doc;
  for (const json& target : doc["sweepables"][param]) {
    if (!target.contains("ptr"))
      throw ValidationError("sweepable target missing 'ptr'");
    double scale = target.value("scale", 1.0);
    double offset = target.value("offset", 0.0);
    json::json_pointer ptr(target["ptr"].get<std::string>());
    out[ptr] = offset + scale * value;
  }
  return out;
}

}  // namespace qfdtd

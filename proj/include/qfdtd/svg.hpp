#pragma once

// Self-contained SVG plots of run outputs: time series (optionally log-y),
// spectra with dip markers, and sweep tables.  Byte output is deterministic
// for identical inputs.

#include <cstdio>
#include <cstring>

#include "qfdtd/csv.hpp"
#include "qfdtd/fit.hpp"

namespace qfdtd {

enum class PlotKind { TimeSeries, Spectrum, Sweep };

namespace detail {

struct SvgCanvas {
  std::string body;
  double W = 720, H = 480, ml = 70, mr = 20, mt = 24, mb = 48;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool logy = false;

  double tx(double x) const { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); }
  double ty(double y) const {
    double u = logy ? std::log10(std::max(y, 1e-300)) : y;
    return H - mb - (u - y0) / (y1 - y0) * (H - mt - mb);
  }

  void add(const std::string& s) { body += s; }

  std::string render() const {
    char head[256];
    std::snprintf(head, sizeof head,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                  "viewBox=\"0 0 %g %g\">\n<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n",
                  W, H, W, H, W, H);
    return std::string(head) + body + "</svg>\n";
  }
};

inline std::string fmt_num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

inline void axes(SvgCanvas& c, const std::string& xlabel, const std::string& ylabel) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                c.ml, c.mt, c.W - c.ml - c.mr, c.H - c.mt - c.mb);
  c.add(buf);
  for (int i = 0; i <= 4; ++i) {
    double fx = c.x0 + (c.x1 - c.x0) * i / 4.0;
    double fy = c.y0 + (c.y1 - c.y0) * i / 4.0;
    double px = c.tx(fx);
    double py = c.H - c.mb - (fy - c.y0) / (c.y1 - c.y0) * (c.H - c.mt - c.mb);
    std::string ylab = c.logy ? ("1e" + fmt_num(fy)) : fmt_num(fy);
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%s</text>\n",
                  px, c.H - c.mb + 16, fmt_num(fx).c_str());
    c.add(buf);
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%s</text>\n",
                  c.ml - 6, py + 4, ylab.c_str());
    c.add(buf);
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                c.ml + (c.W - c.ml - c.mr) / 2, c.H - 10, xlabel.c_str());
  c.add(buf);
  std::snprintf(buf, sizeof buf,
                "<text x=\"14\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 14 %g)\">%s</text>\n",
                c.mt + (c.H - c.mt - c.mb) / 2, c.mt + (c.H - c.mt - c.mb) / 2,
                ylabel.c_str());
  c.add(buf);
}

inline void polyline(SvgCanvas& c, const std::vector<double>& xs,
                     const std::vector<double>& ys, const char* color) {
  std::string pts;
  char buf[64];
  for (size_t i = 0; i < xs.size(); ++i) {
    if (c.logy && ys[i] <= 0) continue;
    std::snprintf(buf, sizeof buf, "%.3f,%.3f ", c.tx(xs[i]), c.ty(ys[i]));
    pts += buf;
  }
  c.add("<polyline fill=\"none\" stroke=\"" + std::string(color) +
        "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n");
}

}  // namespace detail

inline std::string plot_svg(const CsvTable& t, PlotKind kind, bool logy = false) {
  if (t.rows.empty()) throw ValidationError("plot: empty table");
  if (t.columns.size() < 2) throw ValidationError("plot: need at least two columns");
  detail::SvgCanvas c;
  c.logy = logy && kind != PlotKind::Spectrum;
  std::vector<double> xs = t.column(t.columns[0]);
  double ymin = 1e300, ymax = -1e300;
  for (size_t ci = 1; ci < t.columns.size(); ++ci)
    for (const auto& r : t.rows) {
      double v = r[ci];
      if (c.logy && v <= 0) continue;
      double u = c.logy ? std::log10(v) : v;
      ymin = std::min(ymin, u);
      ymax = std::max(ymax, u);
    }
  if (!(ymin < ymax)) { ymin -= 1.0; ymax += 1.0; }
  c.x0 = xs.front(); c.x1 = xs.back();
  if (c.x0 == c.x1) { c.x0 -= 1; c.x1 += 1; }
  double pad = 0.05 * (ymax - ymin);
  c.y0 = ymin - pad; c.y1 = ymax + pad;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  detail::axes(c, t.columns[0], t.columns.size() == 2 ? t.columns[1] : "value");
  for (size_t ci = 1; ci < t.columns.size(); ++ci) {
    std::vector<double> ys;
    for (const auto& r : t.rows) ys.push_back(r[ci]);
    detail::polyline(c, xs, ys, colors[(ci - 1) % 8]);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                  c.W - c.mr - 120.0, c.mt + 14.0 * ci, colors[(ci - 1) % 8],
                  t.columns[ci].c_str());
    c.add(buf);
  }
  if (kind == PlotKind::Spectrum) {
    std::vector<double> ys;
    for (const auto& r : t.rows) ys.push_back(r[1]);
    for (double wd : dip_frequencies(xs, ys)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#d62728\" "
                    "stroke-dasharray=\"4 3\"/>\n",
                    c.tx(wd), c.mt, c.tx(wd), c.H - c.mb);
      c.add(buf);
    }
  }
  if (kind == PlotKind::Sweep) {
    for (const auto& r : t.rows)
      for (size_t ci = 1; ci < t.columns.size(); ++ci) {
        if (c.logy && r[ci] <= 0) continue;
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"%s\"/>\n",
                      c.tx(r[0]), c.ty(r[ci]), colors[(ci - 1) % 8]);
        c.add(buf);
      }
  }
  return c.render();
}

inline void write_plot(const CsvTable& t, PlotKind kind, bool logy,
                       const std::string& path) {
  std::string svg = plot_svg(t, kind, logy);
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  std::fwrite(svg.data(), 1, svg.size(), fp);
  std::fclose(fp);
}

}  // namespace qfdtd

#pragma once

// Yee-grid FDTD core: 2D TE (Ex, Ey, Hz) and full 3D, real frequency-
// independent eps_r plus PEC masks, CPML absorbing boundaries.
//
// CPML follows the Roden & Gedney convolutional formulation with
// polynomial sigma grading and linear alpha grading (max at the interior
// interface).  sigma_max defaults to the usual 0.8*(m+1)/(eta*dx) optimum,
// in natural units eta0 = 1.  kappa grading is fixed at 1 (non-dispersive
// background), which keeps the curl updates free of per-cell kappa loads;
// kappa_max != 1 is rejected at validation.  The outermost tangential E
// nodes are never updated, i.e. the layer is backed by a PEC wall.
//
// Update loops are split: one full-range pass for the plain curl update,
// then thin shell passes that apply the CPML recursion.  Every pass writes
// each node exactly once from inputs of the opposite field, so spatial
// partitions parallelize without cross-thread reductions and results are
// bit-identical for any thread count.

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>

#include "qfdtd/common.hpp"

namespace qfdtd {

struct GridSpec {
  int dim = 2;
  Int3 cells{0, 0, 0};
  double dx = 0.05;
  double courant = 0.5;
  double dt = 0.0;  // derived via finalize()
  std::string unit_system = "natural";

  static double cfl_dt(double dx, double courant, int dim) {
    if (dim != 2 && dim != 3)
      throw ValidationError("grid dimension must be 2 or 3");
    if (dx <= 0.0) throw ValidationError("dx must be positive");
    if (courant <= 0.0 || courant >= 1.0)
      throw ValidationError("courant factor must lie in (0,1)");
    return courant * dx / (units::c0 * std::sqrt(static_cast<double>(dim)));
  }

  void finalize() {
    dt = cfl_dt(dx, courant, dim);
    for (int a = 0; a < dim; ++a)
      if (cells[a] < 4)
        throw ValidationError("grids need at least 4 cells per axis");
    if (dim == 2) cells.z = 1;
  }
};

struct CpmlParams {
  int thickness = 10;
  double grading_order = 3.0;
  double sigma_scale = 1.0;  // sigma_max = scale * 0.8*(order+1)/dx
  double kappa_max = 1.0;
  double alpha_max = 0.2;

  void validate() const {
    if (thickness < 6) throw ValidationError("CPML thickness must be >= 6 cells");
    if (grading_order < 0 || sigma_scale < 0 || alpha_max < 0)
      throw ValidationError("CPML parameters out of range");
    if (kappa_max != 1.0)
      throw ValidationError("kappa grading is fixed at 1 (non-dispersive background)");
  }
};

// One staggered component array, x-fastest layout.
struct Field {
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> v;

  void resize(int x, int y, int z) {
    nx = x; ny = y; nz = z;
    v.assign(static_cast<size_t>(nx) * ny * nz, 0.0);
  }
  bool empty() const { return v.empty(); }
  size_t idx(int i, int j, int k) const {
    return static_cast<size_t>(i) + static_cast<size_t>(nx) * (j + static_cast<size_t>(ny) * k);
  }
  double& at(int i, int j, int k) { return v[idx(i, j, k)]; }
  double at(int i, int j, int k) const { return v[idx(i, j, k)]; }
  bool in_range(int i, int j, int k) const {
    return i >= 0 && i < nx && j >= 0 && j < ny && k >= 0 && k < nz;
  }
};

namespace detail {

// Per-axis CPML profile at integer (node) and half (dual) positions.
struct CpmlAxis {
  int n = 0;
  int L = 0;
  std::vector<double> b_node, c_node;  // size n+1
  std::vector<double> b_half, c_half;  // size n

  void build(int cells, const CpmlParams& p, double dx, double dt) {
    n = cells;
    L = p.thickness;
    double sigma_max = p.sigma_scale * 0.8 * (p.grading_order + 1.0) / dx;
    auto profile = [&](double pos) {
      double depth_lo = static_cast<double>(L) - pos;
      double depth_hi = pos - static_cast<double>(n - L);
      double depth = std::max(depth_lo, depth_hi);
      double b = 1.0, c = 0.0;
      if (depth > 0.0) {
        double u = std::min(depth / L, 1.0);
        double sg = sigma_max * std::pow(u, p.grading_order);
        double al = p.alpha_max * (1.0 - u);
        b = std::exp(-(sg + al) * dt / units::eps0);
        double denom = sg + al;
        c = denom > 0.0 ? sg * (b - 1.0) / denom : 0.0;
      }
      return std::pair<double, double>{b, c};
    };
    b_node.resize(n + 1); c_node.resize(n + 1);
    for (int q = 0; q <= n; ++q) std::tie(b_node[q], c_node[q]) = profile(q);
    b_half.resize(n); c_half.resize(n);
    for (int q = 0; q < n; ++q) std::tie(b_half[q], c_half[q]) = profile(q + 0.5);
  }
};

}  // namespace detail

class YeeGrid {
 public:
  GridSpec spec;
  CpmlParams cpml;
  long step_index = 0;

  YeeGrid() = default;
  YeeGrid(const GridSpec& s, const CpmlParams& c) : spec(s), cpml(c) {
    spec.finalize();
    cpml.validate();
    allocate();
  }

  bool is2d() const { return spec.dim == 2; }
  double dx() const { return spec.dx; }
  double dt() const { return spec.dt; }

  Field& field(Comp c) { return f_[static_cast<int>(c)]; }
  const Field& field(Comp c) const { return f_[static_cast<int>(c)]; }
  Field& inv_eps(Comp c) { return inv_eps_[static_cast<int>(c)]; }
  const Field& inv_eps(Comp c) const { return inv_eps_[static_cast<int>(c)]; }

  Vec3 node_pos(Comp c, const Int3& cell) const {
    Int3 d = doubled_coord(c, cell);
    return {0.5 * spec.dx * d.x, 0.5 * spec.dx * d.y, 0.5 * spec.dx * d.z};
  }

  void paint_eps(const std::function<double(const Vec3&)>& eval) {
    for (Comp c : {Comp::Ex, Comp::Ey, Comp::Ez}) {
      Field& ie = inv_eps(c);
      if (ie.empty()) continue;
      for (int k = 0; k < ie.nz; ++k)
        for (int j = 0; j < ie.ny; ++j)
          for (int i = 0; i < ie.nx; ++i) {
            double er = eval(node_pos(c, {i, j, k}));
            if (er <= 0.0) throw ValidationError("eps_r must be positive");
            ie.at(i, j, k) = 1.0 / (units::eps0 * er);
          }
    }
  }

  double eps_at(Comp c, const Int3& cell) const {
    return 1.0 / (units::eps0 * inv_eps(c).at(cell.x, cell.y, cell.z));
  }

  // Marks E edges whose midpoint satisfies the predicate as PEC.
  void paint_pec(const std::function<bool(const Vec3&)>& inside) {
    for (Comp c : {Comp::Ex, Comp::Ey, Comp::Ez}) {
      const Field& fe = field(c);
      if (fe.empty()) continue;
      auto& list = pec_[static_cast<int>(c)];
      for (int k = 0; k < fe.nz; ++k)
        for (int j = 0; j < fe.ny; ++j)
          for (int i = 0; i < fe.nx; ++i)
            if (inside(node_pos(c, {i, j, k}))) list.push_back(fe.idx(i, j, k));
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  }

  const std::vector<size_t>& pec_list(Comp c) const { return pec_[static_cast<int>(c)]; }

  // Advances E from t-dt/2 to t+dt/2 using H at t.  Source terms are
  // applied by the caller between step_e() and apply_pec().
  void step_e() {
    if (is2d()) step_e_2d(); else step_e_3d();
  }

  // Advances H from t to t+dt using E at t+dt/2.
  void step_h() {
    if (is2d()) step_h_2d(); else step_h_3d();
  }

  void apply_pec() {
    for (Comp c : {Comp::Ex, Comp::Ey, Comp::Ez}) {
      auto& fe = field(c);
      for (size_t idx : pec_[static_cast<int>(c)]) fe.v[idx] = 0.0;
    }
  }

  // 0.5 * sum(eps |E|^2 + mu |H|^2) dV, fixed summation order.
  double total_energy() const {
    double cellv = std::pow(spec.dx, spec.dim);
    double acc = 0.0;
    for (Comp c : {Comp::Ex, Comp::Ey, Comp::Ez}) {
      const Field& fe = field(c);
      const Field& ie = inv_eps(c);
      for (size_t i = 0; i < fe.v.size(); ++i) acc += fe.v[i] * fe.v[i] / ie.v[i];
    }
    for (Comp c : {Comp::Hx, Comp::Hy, Comp::Hz}) {
      const Field& fh = field(c);
      for (size_t i = 0; i < fh.v.size(); ++i) acc += units::mu0 * fh.v[i] * fh.v[i];
    }
    return 0.5 * acc * cellv;
  }

  double max_abs_field() const {
    double m = 0.0;
    for (const Field& fe : f_)
      for (double x : fe.v) m = std::max(m, std::abs(x));
    return m;
  }

  bool all_finite() const {
    for (const Field& fe : f_)
      for (double x : fe.v)
        if (!std::isfinite(x)) return false;
    return true;
  }

  // Component-wise multilinear interpolation of the staggered E arrays.
  Vec3 sample_e(const Vec3& r) const {
    Vec3 hi{spec.cells.x * spec.dx, spec.cells.y * spec.dx, spec.cells.z * spec.dx};
    for (int a = 0; a < spec.dim; ++a)
      if (r[a] < 0.0 || r[a] > hi[a])
        throw ValidationError("sample position outside the grid domain");
    Vec3 out;
    out.x = interp_comp(Comp::Ex, r);
    out.y = interp_comp(Comp::Ey, r);
    out.z = is2d() ? 0.0 : interp_comp(Comp::Ez, r);
    return out;
  }

  // Raw binary snapshot (row-major little-endian float64) plus a text sidecar.
  void write_snapshot(Comp c, const std::string& path_base) const {
    const Field& fe = field(c);
    std::string bin = path_base + ".f64";
    std::FILE* fp = std::fopen(bin.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open " + bin);
    for (int i = 0; i < fe.nx; ++i)
      for (int j = 0; j < fe.ny; ++j)
        for (int k = 0; k < fe.nz; ++k) {
          double val = fe.at(i, j, k);
          std::fwrite(&val, sizeof(double), 1, fp);
        }
    std::fclose(fp);
    std::string meta = path_base + ".meta";
    std::FILE* mp = std::fopen(meta.c_str(), "w");
    if (!mp) throw std::runtime_error("cannot open " + meta);
    std::fprintf(mp, "component=%s\nshape=%d %d %d\nlayout=row-major\n",
                 comp_name(c), fe.nx, fe.ny, fe.nz);
    std::fprintf(mp, "dtype=float64\nendianness=little\ndx=%.17g\ndt=%.17g\nstep=%ld\n",
                 spec.dx, spec.dt, step_index);
    std::fclose(mp);
  }

 private:
  std::array<Field, 6> f_;
  std::array<Field, 3> inv_eps_;
  std::array<std::vector<size_t>, 3> pec_;
  detail::CpmlAxis ax_[3];

  struct PsiShell {
    Field arr;       // sized like the target component, truncated along axis
    int axis = 0;
    int offset = 0;  // target index = local index + offset along axis
  };
  PsiShell psi_e_[3][2][2];  // [E axis][term][side]
  PsiShell psi_h_[3][2][2];

  void allocate() {
    int nx = spec.cells.x, ny = spec.cells.y, nz = spec.cells.z;
    if (is2d()) {
      f_[0].resize(nx, ny + 1, 1);
      f_[1].resize(nx + 1, ny, 1);
      f_[5].resize(nx, ny, 1);
      inv_eps_[0].resize(nx, ny + 1, 1);
      inv_eps_[1].resize(nx + 1, ny, 1);
    } else {
      f_[0].resize(nx, ny + 1, nz + 1);
      f_[1].resize(nx + 1, ny, nz + 1);
      f_[2].resize(nx + 1, ny + 1, nz);
      f_[3].resize(nx + 1, ny, nz);
      f_[4].resize(nx, ny + 1, nz);
      f_[5].resize(nx, ny, nz + 1);
      for (int c = 0; c < 3; ++c) inv_eps_[c].resize(f_[c].nx, f_[c].ny, f_[c].nz);
    }
    for (int c = 0; c < 3; ++c)
      std::fill(inv_eps_[c].v.begin(), inv_eps_[c].v.end(), 1.0 / units::eps0);
    for (int a = 0; a < spec.dim; ++a) ax_[a].build(spec.cells[a], cpml, spec.dx, spec.dt);
    if (2 * cpml.thickness >= std::max({nx, ny, is2d() ? nx : nz}))
      throw ValidationError("CPML layers overlap; domain too small");
    allocate_psi();
  }

  void allocate_psi() {
    int L = cpml.thickness;
    auto setup = [&](PsiShell& s, const Field& like, int axis, bool node_pos, bool high) {
      int dims[3] = {like.nx, like.ny, like.nz};
      int depth = node_pos ? L + 1 : L;
      s.axis = axis;
      s.offset = high ? dims[axis] - depth : 0;
      dims[axis] = depth;
      s.arr.resize(dims[0], dims[1], dims[2]);
    };
    for (int a = 0; a < 3; ++a) {
      if (!f_[a].empty()) {
        int axes[2] = {(a + 1) % 3, (a + 2) % 3};
        for (int t = 0; t < 2; ++t) {
          if (axes[t] >= spec.dim) continue;
          for (int side = 0; side < 2; ++side)
            setup(psi_e_[a][t][side], f_[a], axes[t], true, side == 1);
        }
      }
      if (!f_[3 + a].empty()) {
        int axes[2] = {(a + 1) % 3, (a + 2) % 3};
        for (int t = 0; t < 2; ++t) {
          if (axes[t] >= spec.dim) continue;
          for (int side = 0; side < 2; ++side)
            setup(psi_h_[a][t][side], f_[3 + a], axes[t], false, side == 1);
        }
      }
    }
  }

  double interp_comp(Comp c, const Vec3& r) const {
    const Field& fe = field(c);
    Int3 st = comp_stagger(c);
    double fi[3];
    for (int a = 0; a < 3; ++a)
      fi[a] = a < spec.dim ? r[a] / spec.dx - 0.5 * st[a] : 0.0;
    int dims[3] = {fe.nx, fe.ny, fe.nz};
    int i0[3]; double w[3];
    for (int a = 0; a < 3; ++a) {
      double cl = std::clamp(fi[a], 0.0, static_cast<double>(dims[a] - 1));
      i0[a] = std::min(static_cast<int>(cl), std::max(dims[a] - 2, 0));
      w[a] = cl - i0[a];
      if (dims[a] == 1) { i0[a] = 0; w[a] = 0.0; }
    }
    double acc = 0.0;
    for (int dk = 0; dk <= (dims[2] > 1 ? 1 : 0); ++dk)
      for (int dj = 0; dj <= (dims[1] > 1 ? 1 : 0); ++dj)
        for (int di = 0; di <= (dims[0] > 1 ? 1 : 0); ++di) {
          double ww = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]) * (dk ? w[2] : 1 - w[2]);
          acc += ww * fe.at(i0[0] + di, i0[1] + dj, i0[2] + dk);
        }
    return acc;
  }

  // ---- 2D kernels ----------------------------------------------------

  void step_e_2d() {
    Field& ex = f_[0]; Field& ey = f_[1]; const Field& hz = f_[5];
    const Field& iex = inv_eps_[0]; const Field& iey = inv_eps_[1];
    const double r = spec.dt / spec.dx;
    for (int j = 1; j < ex.ny - 1; ++j) {
      const double* hzr = &hz.v[hz.idx(0, j, 0)];
      const double* hzd = &hz.v[hz.idx(0, j - 1, 0)];
      double* exr = &ex.v[ex.idx(0, j, 0)];
      const double* ier = &iex.v[iex.idx(0, j, 0)];
      for (int i = 0; i < ex.nx; ++i) exr[i] += r * ier[i] * (hzr[i] - hzd[i]);
    }
    for (int j = 0; j < ey.ny; ++j) {
      const double* hzr = &hz.v[hz.idx(0, j, 0)];
      double* eyr = &ey.v[ey.idx(0, j, 0)];
      const double* ier = &iey.v[iey.idx(0, j, 0)];
      for (int i = 1; i < ey.nx - 1; ++i) eyr[i] -= r * ier[i] * (hzr[i] - hzr[i - 1]);
    }
    const auto& axx = ax_[0];
    const auto& ay = ax_[1];
    const double inv_dx = 1.0 / spec.dx;
    for (int side = 0; side < 2; ++side) {
      PsiShell& sx = psi_e_[0][0][side];
      Field& ps = sx.arr;
      for (int jl = 0; jl < ps.ny; ++jl) {
        int j = jl + sx.offset;
        if (j < 1 || j > ex.ny - 2) continue;
        double bb = ay.b_node[j], cc = ay.c_node[j] * inv_dx;
        double* pr = &ps.v[ps.idx(0, jl, 0)];
        const double* hzr = &hz.v[hz.idx(0, j, 0)];
        const double* hzd = &hz.v[hz.idx(0, j - 1, 0)];
        double* exr = &ex.v[ex.idx(0, j, 0)];
        const double* ier = &iex.v[iex.idx(0, j, 0)];
        for (int i = 0; i < ex.nx; ++i) {
          pr[i] = bb * pr[i] + cc * (hzr[i] - hzd[i]);
          exr[i] += spec.dt * ier[i] * pr[i];
        }
      }
      PsiShell& sy = psi_e_[1][1][side];
      Field& psy = sy.arr;
      for (int j = 0; j < ey.ny; ++j) {
        const double* hzr = &hz.v[hz.idx(0, j, 0)];
        double* eyr = &ey.v[ey.idx(0, j, 0)];
        const double* ier = &iey.v[iey.idx(0, j, 0)];
        double* pr = &psy.v[psy.idx(0, j, 0)];
        for (int il = 0; il < psy.nx; ++il) {
          int i = il + sy.offset;
          if (i < 1 || i > ey.nx - 2) continue;
          pr[il] = axx.b_node[i] * pr[il] + axx.c_node[i] * inv_dx * (hzr[i] - hzr[i - 1]);
          eyr[i] -= spec.dt * ier[i] * pr[il];
        }
      }
    }
  }

  void step_h_2d() {
    const Field& ex = f_[0]; const Field& ey = f_[1]; Field& hz = f_[5];
    const double r = spec.dt / (spec.dx * units::mu0);
    for (int j = 0; j < hz.ny; ++j) {
      double* hzr = &hz.v[hz.idx(0, j, 0)];
      const double* exu = &ex.v[ex.idx(0, j + 1, 0)];
      const double* exd = &ex.v[ex.idx(0, j, 0)];
      const double* eyr = &ey.v[ey.idx(0, j, 0)];
      for (int i = 0; i < hz.nx; ++i)
        hzr[i] += r * ((exu[i] - exd[i]) - (eyr[i + 1] - eyr[i]));
    }
    const auto& axx = ax_[0];
    const auto& ay = ax_[1];
    const double dtm = spec.dt / units::mu0, inv_dx = 1.0 / spec.dx;
    for (int side = 0; side < 2; ++side) {
      PsiShell& s0 = psi_h_[2][0][side];  // d/dx of Ey, sign -
      Field& p0 = s0.arr;
      for (int j = 0; j < hz.ny; ++j) {
        double* hzr = &hz.v[hz.idx(0, j, 0)];
        const double* eyr = &ey.v[ey.idx(0, j, 0)];
        double* pr = &p0.v[p0.idx(0, j, 0)];
        for (int il = 0; il < p0.nx; ++il) {
          int i = il + s0.offset;
          pr[il] = axx.b_half[i] * pr[il] + axx.c_half[i] * (eyr[i + 1] - eyr[i]) * inv_dx;
          hzr[i] -= dtm * pr[il];
        }
      }
      PsiShell& s1 = psi_h_[2][1][side];  // d/dy of Ex, sign +
      Field& p1 = s1.arr;
      for (int jl = 0; jl < p1.ny; ++jl) {
        int j = jl + s1.offset;
        double bb = ay.b_half[j], cc = ay.c_half[j] * inv_dx;
        double* hzr = &hz.v[hz.idx(0, j, 0)];
        const double* exu = &ex.v[ex.idx(0, j + 1, 0)];
        const double* exd = &ex.v[ex.idx(0, j, 0)];
        double* pr = &p1.v[p1.idx(0, jl, 0)];
        for (int i = 0; i < hz.nx; ++i) {
          pr[i] = bb * pr[i] + cc * (exu[i] - exd[i]);
          hzr[i] += dtm * pr[i];
        }
      }
    }
  }

  // ---- 3D kernels ----------------------------------------------------

  // E_a += dt/eps [ d_b H_c - d_c H_b ], (a,b,c) cyclic.
  void step_e_3d() {
    const double r = spec.dt / spec.dx;
    for (int a = 0; a < 3; ++a) {
      int b = (a + 1) % 3, c = (a + 2) % 3;
      Field& e = f_[a];
      const Field& hc = f_[3 + c];
      const Field& hb = f_[3 + b];
      const Field& ie = inv_eps_[a];
      Int3 db{0, 0, 0}, dc{0, 0, 0};
      db[b] = 1; dc[c] = 1;
      const long off_b = -static_cast<long>(db.x + static_cast<long>(hc.nx) * (db.y + static_cast<long>(hc.ny) * db.z));
      const long off_c = -static_cast<long>(dc.x + static_cast<long>(hb.nx) * (dc.y + static_cast<long>(hb.ny) * dc.z));
      int lo[3] = {0, 0, 0}, hi[3] = {e.nx, e.ny, e.nz};
      lo[b] = 1; hi[b] -= 1;
      lo[c] = 1; hi[c] -= 1;
      for (int k = lo[2]; k < hi[2]; ++k)
        for (int j = lo[1]; j < hi[1]; ++j) {
          double* __restrict__ er = &e.v[e.idx(0, j, k)];
          const double* __restrict__ ier = &ie.v[ie.idx(0, j, k)];
          const double* __restrict__ hcr = &hc.v[hc.idx(0, j, k)];
          const double* __restrict__ hbr = &hb.v[hb.idx(0, j, k)];
          for (int i = lo[0]; i < hi[0]; ++i)
            er[i] += r * ier[i] * ((hcr[i] - hcr[i + off_b]) - (hbr[i] - hbr[i + off_c]));
        }
      for (int t = 0; t < 2; ++t) {
        int axis = t == 0 ? b : c;
        const Field& hsrc = t == 0 ? hc : hb;
        const long soff = t == 0 ? off_b : off_c;
        const double sign = t == 0 ? 1.0 : -1.0;
        for (int side = 0; side < 2; ++side)
          apply_psi_e(psi_e_[a][t][side], e, ie, hsrc, soff, sign, ax_[axis], lo, hi);
      }
    }
  }

  // H_a += dt/mu [ d_c E_b - d_b E_c ], (a,b,c) cyclic.
  void step_h_3d() {
    const double r = spec.dt / (spec.dx * units::mu0);
    for (int a = 0; a < 3; ++a) {
      int b = (a + 1) % 3, c = (a + 2) % 3;
      Field& h = f_[3 + a];
      const Field& eb = f_[b];
      const Field& ec = f_[c];
      Int3 db{0, 0, 0}, dc{0, 0, 0};
      db[b] = 1; dc[c] = 1;
      const long off_c = static_cast<long>(dc.x + static_cast<long>(eb.nx) * (dc.y + static_cast<long>(eb.ny) * dc.z));
      const long off_b = static_cast<long>(db.x + static_cast<long>(ec.nx) * (db.y + static_cast<long>(ec.ny) * db.z));
      for (int k = 0; k < h.nz; ++k)
        for (int j = 0; j < h.ny; ++j) {
          double* __restrict__ hr = &h.v[h.idx(0, j, k)];
          const double* __restrict__ ebr = &eb.v[eb.idx(0, j, k)];
          const double* __restrict__ ecr = &ec.v[ec.idx(0, j, k)];
          for (int i = 0; i < h.nx; ++i)
            hr[i] += r * ((ebr[i + off_c] - ebr[i]) - (ecr[i + off_b] - ecr[i]));
        }
      int lo[3] = {0, 0, 0}, hi[3] = {h.nx, h.ny, h.nz};
      for (int t = 0; t < 2; ++t) {
        int axis = t == 0 ? b : c;
        const Field& esrc = t == 0 ? ec : eb;
        const long soff = t == 0 ? off_b : off_c;
        const double sign = t == 0 ? -1.0 : 1.0;
        for (int side = 0; side < 2; ++side)
          apply_psi_h(psi_h_[a][t][side], h, esrc, soff, sign, ax_[axis], lo, hi);
      }
    }
  }

  // CPML recursion for one E-component curl term in one boundary shell:
  //   psi = b(q) psi + c(q) (diff/dx);  E += dt/eps * sign * psi
  void apply_psi_e(PsiShell& sh, Field& e, const Field& ie, const Field& src,
                   long soff, double sign, const detail::CpmlAxis& prof,
                   const int lo[3], const int hi[3]) {
    Field& ps = sh.arr;
    if (ps.empty()) return;
    const double inv_dx = 1.0 / spec.dx;
    const double sdt = sign * spec.dt;
    const int ox = sh.axis == 0 ? sh.offset : 0;
    const int oy = sh.axis == 1 ? sh.offset : 0;
    const int oz = sh.axis == 2 ? sh.offset : 0;
    for (int kl = 0; kl < ps.nz; ++kl) {
      int k = kl + oz;
      if (k < lo[2] || k >= hi[2]) continue;
      for (int jl = 0; jl < ps.ny; ++jl) {
        int j = jl + oy;
        if (j < lo[1] || j >= hi[1]) continue;
        double* pr = &ps.v[ps.idx(0, jl, kl)];
        double* er = &e.v[e.idx(0, j, k)];
        const double* ier = &ie.v[ie.idx(0, j, k)];
        const double* sr = &src.v[src.idx(0, j, k)];
        if (sh.axis == 0) {
          for (int il = 0; il < ps.nx; ++il) {
            int i = il + ox;
            if (i < lo[0] || i >= hi[0]) continue;
            double diff = (sr[i] - sr[i + soff]) * inv_dx;
            pr[il] = prof.b_node[i] * pr[il] + prof.c_node[i] * diff;
            er[i] += sdt * ier[i] * pr[il];
          }
        } else {
          int q = sh.axis == 1 ? j : k;
          double bb = prof.b_node[q], cc = prof.c_node[q] * inv_dx;
          for (int il = std::max(lo[0], 0); il < std::min(hi[0], ps.nx); ++il) {
            double diff = sr[il] - sr[il + soff];
            pr[il] = bb * pr[il] + cc * diff;
            er[il] += sdt * ier[il] * pr[il];
          }
        }
      }
    }
  }

  void apply_psi_h(PsiShell& sh, Field& h, const Field& src, long soff, double sign,
                   const detail::CpmlAxis& prof, const int lo[3], const int hi[3]) {
    Field& ps = sh.arr;
    if (ps.empty()) return;
    const double inv_dx = 1.0 / spec.dx;
    const double sdt = sign * spec.dt / units::mu0;
    const int ox = sh.axis == 0 ? sh.offset : 0;
    const int oy = sh.axis == 1 ? sh.offset : 0;
    const int oz = sh.axis == 2 ? sh.offset : 0;
    for (int kl = 0; kl < ps.nz; ++kl) {
      int k = kl + oz;
      for (int jl = 0; jl < ps.ny; ++jl) {
        int j = jl + oy;
        double* pr = &ps.v[ps.idx(0, jl, kl)];
        double* hr = &h.v[h.idx(0, j, k)];
        const double* sr = &src.v[src.idx(0, j, k)];
        if (sh.axis == 0) {
          for (int il = 0; il < ps.nx; ++il) {
            int i = il + ox;
            double diff = (sr[i + soff] - sr[i]) * inv_dx;
            pr[il] = prof.b_half[i] * pr[il] + prof.c_half[i] * diff;
            hr[i] += sdt * pr[il];
          }
        } else {
          int q = sh.axis == 1 ? j : k;
          double bb = prof.b_half[q], cc = prof.c_half[q] * inv_dx;
          for (int il = 0; il < ps.nx; ++il) {
            double diff = sr[il + soff] - sr[il];
            pr[il] = bb * pr[il] + cc * diff;
            hr[il] += sdt * pr[il];
          }
        }
      }
    }
  }
};

}  // namespace qfdtd

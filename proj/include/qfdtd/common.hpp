#pragma once

// Shared basic types and the natural unit system used throughout:
// c0 = eps0 = mu0 = hbar = 1, lengths in units of the reference
// wavelength lambda0 = 1 (so omega0 = 2*pi for a resonant emitter).

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfdtd {

using complexd = std::complex<double>;

namespace units {
inline constexpr double c0 = 1.0;
inline constexpr double eps0 = 1.0;
inline constexpr double mu0 = 1.0;
inline constexpr double hbar = 1.0;
inline constexpr double eta0 = 1.0;  // sqrt(mu0/eps0)
}  // namespace units

inline constexpr double pi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Int3 {
  int x = 0, y = 0, z = 0;
  int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  bool operator==(const Int3& o) const = default;
};

// Field components on the Yee lattice. 2D TE runs use Ex, Ey, Hz only.
enum class Comp : int { Ex = 0, Ey, Ez, Hx, Hy, Hz };

inline bool is_electric(Comp c) { return static_cast<int>(c) < 3; }
inline int comp_axis(Comp c) { return static_cast<int>(c) % 3; }
inline const char* comp_name(Comp c) {
  static const char* names[] = {"Ex", "Ey", "Ez", "Hx", "Hy", "Hz"};
  return names[static_cast<int>(c)];
}

// Yee staggering in doubled (half-cell) integer coordinates: a node of
// component c in cell (i,j,k) sits at 2*(i,j,k) + stagger(c).  E components
// are offset half a cell along their own axis, H components along the two
// other axes.
inline Int3 comp_stagger(Comp c) {
  switch (c) {
    case Comp::Ex: return {1, 0, 0};
    case Comp::Ey: return {0, 1, 0};
    case Comp::Ez: return {0, 0, 1};
    case Comp::Hx: return {0, 1, 1};
    case Comp::Hy: return {1, 0, 1};
    case Comp::Hz: return {1, 1, 0};
  }
  return {};
}

inline Int3 doubled_coord(Comp c, const Int3& cell) {
  Int3 s = comp_stagger(c);
  return {2 * cell.x + s.x, 2 * cell.y + s.y, 2 * cell.z + s.z};
}

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// FNV-1a, used for stable scenario hashes in run records.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace qfdtd

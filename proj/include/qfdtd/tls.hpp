#pragma once

// Two-level-system dynamics in the single-excitation picture, plus the two
// semiclassical baselines (Maxwell-Schroedinger, Maxwell-Bloch) used for
// comparison studies.
//
//   db/dt = (-i w0 - Gamma/2) b + i (d . E(r,t)) / hbar
//
// with E the field sampled at the emitter after its own primary radiation
// has been excluded.  The radiating current follows J = 2 w0 d Im(b); the
// same form applies to the baselines with b replaced by the coherence
// (c_e c_g* for Schroedinger, rho_eg for Bloch).
//
// All steppers advance one grid step dt with 5 classic RK4 substeps.  The
// drive field over [t, t+dt] is linearly interpolated between the sampled
// values at t-dt/2 and t+dt/2 and held constant past the newest sample.

#include "qfdtd/common.hpp"

namespace qfdtd {

enum class TlsSolver { Amplitude, Schrodinger, Bloch };

struct TlsDescriptor {
  double omega0 = 2.0 * pi;
  double gamma = 0.0;  // vacuum (or overridden) decay rate in the ODE
  Vec3 dipole{0.01, 0.0, 0.0};
  Vec3 position{0, 0, 0};
  int index = 0;

  int dipole_axis() const {
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      if (dipole[a] != 0.0) {
        if (axis >= 0) throw ValidationError("TLS dipole must be axis-aligned");
        axis = a;
      }
    }
    if (axis < 0) throw ValidationError("TLS dipole must be nonzero");
    return axis;
  }

  double dipole_mag() const { return dipole.norm(); }
};

struct TlsState {
  TlsSolver solver = TlsSolver::Amplitude;
  complexd b{0.0, 0.0};
  complexd c_g{1.0, 0.0}, c_e{0.0, 0.0};
  double rho_ee = 0.0;
  complexd rho_eg{0.0, 0.0};

  static TlsState make(TlsSolver s, complexd initial_excited) {
    TlsState st;
    st.solver = s;
    switch (s) {
      case TlsSolver::Amplitude:
        st.b = initial_excited;
        break;
      case TlsSolver::Schrodinger: {
        st.c_e = initial_excited;
        double pg = std::max(0.0, 1.0 - std::norm(initial_excited));
        st.c_g = std::sqrt(pg);
        break;
      }
      case TlsSolver::Bloch:
        st.rho_ee = std::norm(initial_excited);
        st.rho_eg = 0.0;
        break;
    }
    return st;
  }

  double excited_probability() const {
    switch (solver) {
      case TlsSolver::Amplitude: return std::norm(b);
      case TlsSolver::Schrodinger: return std::norm(c_e);
      case TlsSolver::Bloch: return rho_ee;
    }
    return 0.0;
  }

  // Coherence entering the radiating current J = 2 w0 d Im(coherence).
  complexd coherence() const {
    switch (solver) {
      case TlsSolver::Amplitude: return b;
      case TlsSolver::Schrodinger: return c_e * std::conj(c_g);
      case TlsSolver::Bloch: return rho_eg;
    }
    return {};
  }
};

inline complexd tls_rhs(complexd b, const Vec3& e_at_tls, const TlsDescriptor& d) {
  return (complexd(0.0, -d.omega0) - d.gamma / 2.0) * b +
         complexd(0.0, 1.0) * d.dipole.dot(e_at_tls) / units::hbar;
}

// Current amplitude of the emitter's dipole source before discretization
// onto a single edge (the caller divides by the cell volume).
inline Vec3 tls_current_amplitude(complexd coherence, const TlsDescriptor& d) {
  return 2.0 * d.omega0 * coherence.imag() * d.dipole;
}

namespace detail {

// drive(t) -> scalar d.E/hbar over the step; generic RK4 with 5 substeps.
template <class State, class Rhs>
inline State rk4_substeps(State y, double t, double dt, Rhs&& rhs) {
  int n = 5;
  double h = dt / n;
  for (int s = 0; s < n; ++s) {
    double ts = t + s * h;
    State k1 = rhs(ts, y);
    State k2 = rhs(ts + h / 2, y + k1 * (h / 2));
    State k3 = rhs(ts + h / 2, y + k2 * (h / 2));
    State k4 = rhs(ts + h, y + k3 * h);
    y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
  }
  return y;
}

struct C2 {
  complexd a, b;
  C2 operator+(const C2& o) const { return {a + o.a, b + o.b}; }
  C2 operator*(double s) const { return {a * s, b * s}; }
};

// Linear interpolation of the drive with the newest value held at the edge:
// e_prev sampled at t_step - dt/2, e_new at t_step + dt/2.
struct DriveInterp {
  double omega_prev, omega_new;  // d.E/hbar at the two sample times
  double t_step, dt;
  double operator()(double t) const {
    double u = (t - (t_step - 0.5 * dt)) / dt;
    u = std::clamp(u, 0.0, 1.0);
    return omega_prev + (omega_new - omega_prev) * u;
  }
};

}  // namespace detail

inline complexd step_tls_rk4(complexd b, double drive_prev, double drive_new,
                             const TlsDescriptor& d, double t_step, double dt) {
  detail::DriveInterp drive{drive_prev, drive_new, t_step, dt};
  auto rhs = [&](double t, complexd y) {
    return (complexd(0.0, -d.omega0) - d.gamma / 2.0) * y + complexd(0.0, drive(t));
  };
  return detail::rk4_substeps(b, t_step, dt, rhs);
}

inline void step_schrodinger(complexd& c_g, complexd& c_e, double drive_prev,
                             double drive_new, const TlsDescriptor& d, double t_step,
                             double dt) {
  detail::DriveInterp drive{drive_prev, drive_new, t_step, dt};
  auto rhs = [&](double t, detail::C2 y) {
    double om = drive(t);
    return detail::C2{complexd(0.0, om) * y.b,                            // c_g'
                      complexd(0.0, -d.omega0) * y.b + complexd(0.0, om) * y.a};
  };
  detail::C2 y = detail::rk4_substeps(detail::C2{c_g, c_e}, t_step, dt, rhs);
  c_g = y.a;
  c_e = y.b;
}

inline void step_bloch(double& rho_ee, complexd& rho_eg, double drive_prev,
                       double drive_new, const TlsDescriptor& d, double t_step,
                       double dt) {
  detail::DriveInterp drive{drive_prev, drive_new, t_step, dt};
  auto rhs = [&](double t, detail::C2 y) {
    double om = drive(t);
    complexd eg = y.b;
    double ee = y.a.real();
    // i*om*(eg* - eg) = 2*om*Im(eg)
    complexd dee(2.0 * om * eg.imag() - d.gamma * ee, 0.0);
    complexd deg = (complexd(0.0, -d.omega0) - d.gamma / 2.0) * eg +
                   complexd(0.0, om * (1.0 - 2.0 * ee));
    return detail::C2{dee, deg};
  };
  detail::C2 y = detail::rk4_substeps(detail::C2{complexd(rho_ee, 0.0), rho_eg},
                                      t_step, dt, rhs);
  rho_ee = y.a.real();
  rho_eg = y.b;
}

// One grid step of whichever solver the state carries.  drive_* are the
// scalar projections d.E(r_i)/hbar sampled at t-dt/2 and t+dt/2.
inline void step_tls(TlsState& st, double drive_prev, double drive_new,
                     const TlsDescriptor& d, double t_step, double dt) {
  switch (st.solver) {
    case TlsSolver::Amplitude:
      st.b = step_tls_rk4(st.b, drive_prev, drive_new, d, t_step, dt);
      break;
    case TlsSolver::Schrodinger:
      step_schrodinger(st.c_g, st.c_e, drive_prev, drive_new, d, t_step, dt);
      break;
    case TlsSolver::Bloch:
      step_bloch(st.rho_ee, st.rho_eg, drive_prev, drive_new, d, t_step, dt);
      break;
  }
}

}  // namespace qfdtd

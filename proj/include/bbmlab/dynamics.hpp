#pragma once

// Time integration of the generalized BBM equation
//   (1 - d_x^2) u_t + (u + u^p)_x = 0
// in the explicit form u_t = -d_x (1 - d_x^2)^{-1} (u + u^p), together with
// exact solitary waves, small-data generators and the conserved quantities.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbmlab/spectral.hpp"

namespace bbm {

/// Raised when a step produces non-finite values or max|u| more than doubles.
class BlowUpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverState {
  double t = 0.0;
  Field u;
  int p = 2;
  long step_count = 0;
};

struct ConservedPair {
  double mass = 0.0;
  double energy = 0.0;
};

inline void require_power(int p) {
  if (p < 2) throw std::invalid_argument("nonlinearity power p must be >= 2, got " + std::to_string(p));
}

/// u_t for the current u: -d_x (1-d_x^2)^{-1} (u + dealias(u^p)).
inline Field bbm_rhs(const Field& u, int p) {
  require_power(p);
  const Grid1D& g = u.grid();
  const Spectrum su = u.spectrum();
  const Spectrum sp = power(u, p).spectrum();
  const std::size_t nyq = g.nyquist_index();
  const double cutoff = (2.0 / 3.0) * static_cast<double>(g.n_points() / 2);
  Spectrum out(su.size());
  for (std::size_t m = 0; m < su.size(); ++m) {
    if (m == nyq) {
      out[m] = 0.0;
      continue;
    }
    const double k = g.half_wavenumber(m);
    const std::complex<double> nonlinear = static_cast<double>(m) > cutoff ? 0.0 : sp[m];
    out[m] = std::complex<double>(0.0, -k / (1.0 + k * k)) * (su[m] + nonlinear);
  }
  return Field::from_spectrum(u.grid_ptr(), out);
}

namespace detail {

inline std::vector<double> axpy(const std::vector<double>& x, double a, const std::vector<double>& y) {
  std::vector<double> r(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) r[j] = x[j] + a * y[j];
  return r;
}

inline Field checked_stage(const GridPtr& grid, std::vector<double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw BlowUpError("non-finite value in Runge-Kutta stage");
  }
  return Field(grid, std::move(v));
}

/// One classical RK4 step of signed size dt (negative dt integrates backwards).
inline Field rk4_advance(const Field& u, int p, double dt) {
  const GridPtr& grid = u.grid_ptr();
  const auto& u0 = u.vector();
  const Field k1 = bbm_rhs(u, p);
  const Field k2 = bbm_rhs(checked_stage(grid, axpy(u0, 0.5 * dt, k1.vector())), p);
  const Field k3 = bbm_rhs(checked_stage(grid, axpy(u0, 0.5 * dt, k2.vector())), p);
  const Field k4 = bbm_rhs(checked_stage(grid, axpy(u0, dt, k3.vector())), p);
  std::vector<double> next(u0.size());
  for (std::size_t j = 0; j < next.size(); ++j) {
    next[j] = u0[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return checked_stage(grid, std::move(next));
}

}  // namespace detail

/// Advances the state by dt with classical RK4. The step is rejected
/// (BlowUpError) if any stage is non-finite or max|u| more than doubles.
inline SolverState step_rk4(const SolverState& state, double dt) {
  require_power(state.p);
  if (!(dt > 0.0) || dt > 0.5) {
    throw std::invalid_argument("time step must lie in (0, 0.5], got " + std::to_string(dt));
  }
  Field next = detail::rk4_advance(state.u, state.p, dt);
  const double before = state.u.max_abs();
  const double after = next.max_abs();
  if (after > 2.0 * before && after > 0.0) {
    throw BlowUpError("max|u| grew from " + std::to_string(before) + " to " + std::to_string(after) +
                      " in one step at t = " + std::to_string(state.t));
  }
  return SolverState{state.t + dt, std::move(next), state.p, state.step_count + 1};
}

/// M[u] = (1/2) int (u^2 + u_x^2).
inline double mass(const Field& u) {
  const Field ux = derivative(u, 1);
  const Field one = Field::constant(u.grid_ptr(), 1.0);
  return 0.5 * (weighted_integral(one, u, u) + weighted_integral(one, ux, ux));
}

/// E[u] = int (u^2/2 + u^{p+1}/(p+1)).
inline double energy(const Field& u, int p) {
  require_power(p);
  const Field one = Field::constant(u.grid_ptr(), 1.0);
  const Field up1 = power(u, p + 1);
  return 0.5 * weighted_integral(one, u, u) + weighted_integral(one, up1) / (p + 1);
}

inline ConservedPair conserved(const Field& u, int p) { return {mass(u), energy(u, p)}; }

/// sqrt(int u^2 + u_x^2).
inline double h1_norm(const Field& u) { return std::sqrt(2.0 * mass(u)); }

/// Ground state Q(s) = ((p+1) / (2 cosh^2((p-1) s / 2)))^{1/(p-1)}.
inline double ground_state(int p, double s) {
  const double ch = std::cosh(0.5 * (p - 1) * s);
  if (!std::isfinite(ch)) return 0.0;
  return std::pow((p + 1) / (2.0 * ch * ch), 1.0 / (p - 1));
}

namespace detail {

/// Displacement wrapped into [-L/2, L/2) so travelling profiles re-enter periodically.
inline double periodic_offset(double d, double length) {
  d = std::fmod(d + 0.5 * length, length);
  if (d < 0.0) d += length;
  return d - 0.5 * length;
}

}  // namespace detail

/// Right-moving solitary wave of speed c > 1 centred at x0 + c t.
inline Field solitary_wave(int p, double c, double x0, double t, const GridPtr& grid) {
  require_power(p);
  if (!(c > 1.0)) throw std::invalid_argument("right-moving solitary waves need c > 1");
  const double amplitude = std::pow(c - 1.0, 1.0 / (p - 1));
  const double scale = std::sqrt((c - 1.0) / c);
  const double length = grid->domain_length();
  return Field::from_function(grid, [&](double x) {
    return amplitude * ground_state(p, scale * detail::periodic_offset(x - x0 - c * t, length));
  });
}

/// Left-moving (negative) solitary wave of speed -c, c > 0, for even p.
inline Field left_solitary_wave(int p, double c, double x0, double t, const GridPtr& grid) {
  require_power(p);
  if (p % 2 != 0) throw std::invalid_argument("left-moving solitary waves exist only for even p");
  if (!(c > 0.0)) throw std::invalid_argument("left-moving solitary waves need c > 0");
  const double amplitude = std::pow(c + 1.0, 1.0 / (p - 1));
  const double scale = std::sqrt((c + 1.0) / c);
  const double length = grid->domain_length();
  return Field::from_function(grid, [&](double x) {
    return -amplitude * ground_state(p, scale * detail::periodic_offset(x - x0 + c * t, length));
  });
}

/// Gaussian bump A exp(-(x-center)^2 / (2 width^2)) with A chosen so that the
/// discrete H^1 norm equals target_h1.
inline Field gaussian_data(double target_h1, double width, double center, const GridPtr& grid) {
  if (!(target_h1 > 0.0) || !std::isfinite(target_h1)) {
    throw std::invalid_argument("gaussian_data: target H^1 norm must be positive");
  }
  if (!(width >= grid->spacing()) || !std::isfinite(width)) {
    throw std::invalid_argument("gaussian_data: width must be finite and at least one grid spacing");
  }
  const Field shape = Field::from_function(grid, [&](double x) {
    const double d = detail::periodic_offset(x - center, grid->domain_length());
    return std::exp(-d * d / (2.0 * width * width));
  });
  return shape * (target_h1 / h1_norm(shape));
}

}  // namespace bbm

#pragma once

// Small-data decay experiments: evolve, sample local H^1 norms of the left
// region (-inf, -a t) and right region ((1+b) t, inf), track sech^2-weighted
// densities and their time integrals, and evaluate the virial decomposition
// for both weight cases along the trajectory.
//
// All t -> infinity statements become finite-horizon surrogates; see
// DecaySummary for the thresholds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bbmlab/dynamics.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/random_field.hpp"
#include "bbmlab/spectral.hpp"
#include "bbmlab/virial.hpp"
#include "bbmlab/weight.hpp"

namespace bbm {

enum class DataKind { Gaussian, Solitary, Custom };

inline std::string_view to_string(DataKind k) {
  switch (k) {
    case DataKind::Gaussian: return "gaussian";
    case DataKind::Solitary: return "solitary";
    case DataKind::Custom: return "custom";
  }
  return "unknown";
}

struct SimConfig {
  std::string name = "run";
  int p = 2;
  std::size_t n_points = 4096;
  double domain_length = 400.0;
  double x_min = -100.0;
  double dt = 0.01;
  double t_end = 200.0;
  double dt_out = 0.5;

  DataKind data = DataKind::Gaussian;
  double epsilon = 0.01;      // H^1 size of gaussian / custom data
  double data_width = 1.0;    // gaussian width, or envelope width of custom data
  double data_center = 0.0;
  double wave_speed = 1.5;    // solitary data
  std::uint64_t seed = 0;     // custom data

  double b = 0.5;             // right region x > (1+b) t
  double a = 0.25;            // left region x < -a t
  double L = 50.0;
  double sigma_tilde = 0.5;   // left-case frame speed (1 + sigma_tilde)/8
  double alpha_right = 0.0;
  double alpha_left = 1.0;
  std::vector<double> sigma_list{-1.5, 0.1875};
  std::vector<double> t0_list{};
};

inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  require_power(c.p);
  if (c.n_points < 8 || c.n_points % 2 != 0) fail("n_points must be even and at least 8");
  if (!(c.domain_length > 0.0)) fail("domain_length must be positive");
  if (!std::isfinite(c.x_min)) fail("x_min must be finite");
  if (!(c.dt > 0.0 && c.dt <= 0.5)) fail("dt must lie in (0, 0.5]");
  if (!(c.t_end > 0.0)) fail("t_end must be positive");
  if (!(c.dt_out >= c.dt)) fail("dt_out must be at least dt");
  const double ratio = c.dt_out / c.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) fail("dt_out must be a whole multiple of dt");
  if (!(c.epsilon >= 0.0)) fail("epsilon must be nonnegative");
  if (c.data != DataKind::Solitary && c.epsilon > 0.0 && !(c.data_width > 0.0)) fail("data_width must be positive");
  if (c.data == DataKind::Solitary && !(c.wave_speed > 1.0)) fail("wave_speed must exceed 1");
  if (!(c.b > 0.0)) fail("b must be positive");
  if (!(c.a > 0.125)) fail("a must exceed 1/8");
  if (!(c.L > 0.0)) fail("L must be positive");
  if (!(c.sigma_tilde > 0.0)) fail("sigma_tilde must be positive");
  if (c.sigma_list.empty()) fail("sigma_list must not be empty");
  for (double t0 : c.t0_list) {
    if (!(t0 > 2.0)) fail("every t0 must exceed 2");
    if (t0 > c.t_end + 1e-9) fail("every t0 must be at most t_end");
  }
}

inline GridPtr make_grid(const SimConfig& c) { return make_grid(c.n_points, c.domain_length, c.x_min); }

inline Field initial_data(const SimConfig& c, const GridPtr& grid) {
  switch (c.data) {
    case DataKind::Gaussian:
      if (c.epsilon == 0.0) return Field::zeros(grid);
      return gaussian_data(c.epsilon, c.data_width, c.data_center, grid);
    case DataKind::Solitary: return solitary_wave(c.p, c.wave_speed, c.data_center, 0.0, grid);
    case DataKind::Custom: {
      if (c.epsilon == 0.0) return Field::zeros(grid);
      RandomFieldSpec spec;
      spec.envelope_width = c.data_width;
      spec.envelope_center = c.data_center;
      const Field f = random_smooth_field(grid, c.seed, spec);
      return f * (c.epsilon / h1_norm(f));
    }
  }
  throw std::invalid_argument("unknown data kind");
}

// ---------------------------------------------------------------------------
// Region norms and densities

struct RegionNorms {
  double left = 0.0;
  double right = 0.0;
  bool left_empty = false;
  bool right_empty = false;
};

/// H^1 norms over (-inf, -a t) and ((1+b) t, inf) intersected with the grid.
/// Node j stands for the cell [x_j - h/2, x_j + h/2); a cell cut by the region
/// boundary contributes in proportion to the part inside.
inline RegionNorms region_h1(const Field& u, double t, double a, double b) {
  if (!(t >= 0.0)) throw std::invalid_argument("region norms need t >= 0");
  const Grid1D& g = u.grid();
  const Field ux = derivative(u, 1);
  const double h = g.spacing();
  const double left_edge = -a * t;
  const double right_edge = (1.0 + b) * t;
  const double lo = g.x_min() - 0.5 * h;
  const double hi = g.x_min() + g.domain_length() - 0.5 * h;
  RegionNorms r;
  r.left_empty = left_edge <= lo;
  r.right_empty = right_edge >= hi;
  double sl = 0.0, sr = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double x = g.x(j);
    const double e = u[j] * u[j] + ux[j] * ux[j];
    sl += std::clamp((left_edge - (x - 0.5 * h)) / h, 0.0, 1.0) * e;
    sr += std::clamp(((x + 0.5 * h) - right_edge) / h, 0.0, 1.0) * e;
  }
  r.left = r.left_empty ? 0.0 : std::sqrt(sl * h);
  r.right = r.right_empty ? 0.0 : std::sqrt(sr * h);
  return r;
}

/// int sech^2((x + sigma t)/L) (u^2 + u_x^2) dx.
inline double weighted_density(const Field& u, double sigma, double L, double t) {
  const Field w = weight_eval({WeightShape::Sech2, sigma, L}, t, u.grid_ptr(), 0);
  const Field ux = derivative(u, 1);
  return weighted_integral(w, u, u) + weighted_integral(w, ux, ux);
}

/// Share of int (u^2 + u_x^2) held in the outer `edge` fraction of the box at
/// either end; large values mean the periodic images are interacting.
inline double boundary_energy(const Field& u, double edge = 0.05) {
  const Grid1D& g = u.grid();
  const Field ux = derivative(u, 1);
  const double lo = g.x_min() + edge * g.domain_length();
  const double hi = g.x_min() + (1.0 - edge) * g.domain_length();
  double total = 0.0, outer = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double e = u[j] * u[j] + ux[j] * ux[j];
    total += e;
    if (g.x(j) < lo || g.x(j) > hi) outer += e;
  }
  return total > 0.0 ? outer / total : 0.0;
}

// ---------------------------------------------------------------------------
// Shifted functional

/// I_t0(t) = (1/2) int phi((x + sigma t0 - sigma_tilde (t0 - t))/L) (u^2 + u_x^2)
/// with phi = (1 + tanh)/2, sigma = -(1+b), sigma_tilde = -(1+b/2).
inline double shifted_functional_value(const Field& u, double t, double t0, double b, double L) {
  const double sigma = -(1.0 + b);
  const double sigma_tilde = -(1.0 + 0.5 * b);
  const double shift = sigma * t0 - sigma_tilde * (t0 - t);
  const Field phi =
      Field::from_function(u.grid_ptr(), [&](double x) { return 0.5 * (1.0 + std::tanh((x + shift) / L)); });
  const Field ux = derivative(u, 1);
  return 0.5 * (weighted_integral(phi, u, u) + weighted_integral(phi, ux, ux));
}

struct ShiftedFunctionalCheck {
  double t0 = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> increments;  // values[k] - values[k-1]
  double tolerance = 0.0;          // 1e-6 * I_t0(2)
  double worst_increment() const {
    return increments.empty() ? 0.0 : *std::max_element(increments.begin(), increments.end());
  }
  bool nonincreasing() const { return worst_increment() <= tolerance; }

  void finish() {
    increments.clear();
    for (std::size_t k = 1; k < values.size(); ++k) increments.push_back(values[k] - values[k - 1]);
    tolerance = values.empty() ? 0.0 : 1e-6 * std::abs(values.front());
  }
};

using Trajectory = std::vector<std::pair<double, Field>>;

/// Evaluates I_t0 on the samples of `traj` in [2, t0].
inline ShiftedFunctionalCheck shifted_functional_check(const Trajectory& traj, double t0, double b, double L) {
  if (!(t0 > 2.0)) throw std::invalid_argument("shifted functional needs t0 > 2");
  ShiftedFunctionalCheck c;
  c.t0 = t0;
  for (const auto& [t, u] : traj) {
    if (t < 2.0 - 1e-12 || t > t0 + 1e-12) continue;
    c.times.push_back(t);
    c.values.push_back(shifted_functional_value(u, t, t0, b, L));
  }
  c.finish();
  return c;
}

// ---------------------------------------------------------------------------
// Experiment

struct CaseSample {
  double Q = 0.0, S = 0.0, N = 0.0, dH_dt = 0.0;
  double identity_residual = 0.0;
};

struct DecayRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double h1_left = 0.0;
  double h1_right = 0.0;
  bool left_empty = false;
  bool right_empty = false;
  std::vector<double> density;     // per sigma_list entry
  std::vector<double> cumulative;  // per sigma_list entry, int_2^t, left rectangle rule
  CaseSample right_case;
  CaseSample left_case;
  double coercivity_margin = 0.0;  // left case: -16 L Q minus its lower bound
  std::optional<double> I_t0_margin;  // worst normalised increment of I_t0 at this sample
  double boundary_energy = 0.0;
};

/// Finite-horizon surrogates of the decay statements.
struct DecaySummary {
  double h1_left_at_2 = 0.0, h1_right_at_2 = 0.0;
  double h1_left_final = 0.0, h1_right_final = 0.0;
  bool h1_left_decayed = false;   // final < 10% of the value at t = 2
  bool h1_right_decayed = false;
  std::vector<double> cumulative_final;
  std::vector<double> cumulative_over_eps2;
  std::vector<double> density_min_fraction;  // min over samples / initial density
  std::vector<bool> density_dipped;          // min fraction < 10%
  std::vector<bool> increments_decay;        // final density < average density over [2, T]
  bool right_Q_nonpositive = true;
  bool left_coercivity_holds = true;
  bool right_dH_nonpositive = true;
  bool left_dH_nonpositive = true;
  double max_mass_drift = 0.0;
  double max_energy_drift = 0.0;
  double max_boundary_energy = 0.0;
  double max_identity_residual = 0.0;  // Q+S+N vs dI/dt + alpha dJ/dt, both cases
  std::vector<ShiftedFunctionalCheck> shifted;
};

struct DecayReport {
  SimConfig config;
  std::vector<DecayRow> rows;
  DecaySummary summary;
  bool tainted = false;
  bool blow_up = false;
  double blow_up_time = 0.0;  // time of the last accepted step
  std::string error;  // nonempty when the run failed for another reason (sweep isolation)
};

namespace detail {

inline CaseSample case_sample(const VirialBreakdown& b) { return {b.Q, b.S, b.N, b.dH_dt_exact, b.identity_residual}; }

inline double relative_drift(double now, double initial) {
  const double scale = std::abs(initial);
  return scale > 0.0 ? std::abs(now - initial) / scale : std::abs(now - initial);
}

inline void summarise(DecayReport& rep, std::vector<ShiftedFunctionalCheck> shifted) {
  const SimConfig& c = rep.config;
  DecaySummary& s = rep.summary;
  const std::size_t ns = c.sigma_list.size();
  s.cumulative_final.assign(ns, 0.0);
  s.cumulative_over_eps2.assign(ns, std::numeric_limits<double>::quiet_NaN());
  s.density_min_fraction.assign(ns, std::numeric_limits<double>::quiet_NaN());
  s.density_dipped.assign(ns, false);
  s.increments_decay.assign(ns, false);
  if (rep.rows.empty()) return;

  const DecayRow& first = rep.rows.front();
  const DecayRow& last = rep.rows.back();
  const DecayRow* at2 = nullptr;
  for (const auto& r : rep.rows) {
    if (r.t >= 2.0 - 1e-12) {
      at2 = &r;
      break;
    }
  }
  if (at2 != nullptr) {
    s.h1_left_at_2 = at2->h1_left;
    s.h1_right_at_2 = at2->h1_right;
  }
  s.h1_left_final = last.h1_left;
  s.h1_right_final = last.h1_right;
  s.h1_left_decayed = at2 != nullptr && last.t > at2->t && last.h1_left < 0.1 * at2->h1_left;
  s.h1_right_decayed = at2 != nullptr && last.t > at2->t && last.h1_right < 0.1 * at2->h1_right;

  const double eps2 = c.epsilon * c.epsilon;
  for (std::size_t k = 0; k < ns; ++k) {
    s.cumulative_final[k] = last.cumulative[k];
    if (eps2 > 0.0) s.cumulative_over_eps2[k] = last.cumulative[k] / eps2;
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) mn = std::min(mn, r.density[k]);
    if (first.density[k] > 0.0) {
      s.density_min_fraction[k] = mn / first.density[k];
      s.density_dipped[k] = s.density_min_fraction[k] < 0.1;
    }
    const double span = last.t - 2.0;
    s.increments_decay[k] = span > 0.0 && last.cumulative[k] > 0.0 && last.density[k] < last.cumulative[k] / span;
  }
  for (const auto& r : rep.rows) {
    s.right_Q_nonpositive = s.right_Q_nonpositive && r.right_case.Q <= 0.0;
    s.left_coercivity_holds = s.left_coercivity_holds && r.coercivity_margin >= 0.0;
    s.right_dH_nonpositive = s.right_dH_nonpositive && r.right_case.dH_dt <= 0.0;
    s.left_dH_nonpositive = s.left_dH_nonpositive && r.left_case.dH_dt <= 0.0;
    s.max_mass_drift = std::max(s.max_mass_drift, relative_drift(r.mass, first.mass));
    s.max_energy_drift = std::max(s.max_energy_drift, relative_drift(r.energy, first.energy));
    s.max_boundary_energy = std::max(s.max_boundary_energy, r.boundary_energy);
    s.max_identity_residual =
        std::max({s.max_identity_residual, r.right_case.identity_residual, r.left_case.identity_residual});
  }
  for (auto& chk : shifted) chk.finish();
  s.shifted = std::move(shifted);
}

}  // namespace detail

/// Runs one experiment. Samples every dt_out (and at t = 0). A blow-up guard
/// trip ends the run early with the rows gathered so far; any sample with
/// boundary_energy above 1% marks the report tainted.
inline DecayReport run_decay_experiment(const SimConfig& cfg) {
  validate(cfg);
  DecayReport rep;
  rep.config = cfg;
  const GridPtr grid = make_grid(cfg);
  const std::size_t ns = cfg.sigma_list.size();
  const long steps_per_sample = std::lround(cfg.dt_out / cfg.dt);
  const long total_steps = std::lround(cfg.t_end / cfg.dt);
  const WeightProfile right_w = right_case_weight(cfg.b, cfg.L);
  const WeightProfile left_w = left_case_weight(cfg.sigma_tilde, cfg.L);

  std::vector<ShiftedFunctionalCheck> shifted(cfg.t0_list.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i].t0 = cfg.t0_list[i];
  std::vector<double> running(ns, 0.0);
  double previous_t = 0.0;
  std::vector<double> previous_density(ns, 0.0);

  auto sample = [&](const SolverState& s) {
    DecayRow row;
    row.t = s.t;
    const auto cons = conserved(s.u, cfg.p);
    row.mass = cons.mass;
    row.energy = cons.energy;
    const auto region = region_h1(s.u, s.t, cfg.a, cfg.b);
    row.h1_left = region.left;
    row.h1_right = region.right;
    row.left_empty = region.left_empty;
    row.right_empty = region.right_empty;
    row.density.resize(ns);
    row.cumulative.resize(ns);
    for (std::size_t k = 0; k < ns; ++k) {
      row.density[k] = weighted_density(s.u, cfg.sigma_list[k], cfg.L, s.t);
      // Left rectangle rule on [2, t].
      if (!rep.rows.empty() && previous_t >= 2.0 - 1e-12) running[k] += previous_density[k] * (s.t - previous_t);
      row.cumulative[k] = running[k];
    }
    // Residuals are recorded rather than enforced: mass near the periodic seam
    // (a tainted run) legitimately breaks the identity.
    constexpr double no_limit = std::numeric_limits<double>::infinity();
    row.right_case = detail::case_sample(decompose_QSN(s.u, right_w, s.t, cfg.p, cfg.alpha_right, no_limit));
    row.left_case = detail::case_sample(decompose_QSN(s.u, left_w, s.t, cfg.p, cfg.alpha_left, no_limit));
    row.coercivity_margin = left_case_coercivity(s.u, cfg.sigma_tilde, cfg.L, s.t).margin();
    if (s.t >= 2.0 - 1e-12) {
      std::optional<double> worst;
      for (auto& chk : shifted) {
        if (s.t > chk.t0 + 1e-12) continue;
        auto& values = chk.values;
        chk.times.push_back(s.t);
        values.push_back(shifted_functional_value(s.u, s.t, chk.t0, cfg.b, cfg.L));
        if (values.size() >= 2) {
          const double scale = std::abs(values.front());
          const double inc = values.back() - values[values.size() - 2];
          const double m = scale > 0.0 ? inc / scale : inc;
          worst = worst ? std::max(*worst, m) : m;
        }
      }
      row.I_t0_margin = worst;
    }
    row.boundary_energy = boundary_energy(s.u);
    if (row.boundary_energy > 0.01) rep.tainted = true;
    previous_t = s.t;
    previous_density = row.density;
    rep.rows.push_back(std::move(row));
  };

  SolverState state{0.0, initial_data(cfg, grid), cfg.p, 0};
  sample(state);
  try {
    for (long step = 1; step <= total_steps; ++step) {
      state = step_rk4(state, cfg.dt);
      state.t = static_cast<double>(step) * cfg.dt;  // no accumulated rounding in sample times
      if (step % steps_per_sample == 0 || step == total_steps) sample(state);
    }
  } catch (const BlowUpError&) {
    rep.blow_up = true;
    rep.blow_up_time = state.t;
  }
  detail::summarise(rep, std::move(shifted));
  return rep;
}

/// Runs each config independently on the worker pool; reports come back in
/// input order. A failing config yields a report with `error` set.
inline std::vector<DecayReport> sweep(const std::vector<SimConfig>& cfgs, unsigned workers = default_workers()) {
  std::vector<DecayReport> out(cfgs.size());
  parallel_for(
      cfgs.size(),
      [&](std::size_t i) {
        try {
          out[i] = run_decay_experiment(cfgs[i]);
        } catch (const std::exception& e) {
          out[i] = DecayReport{};
          out[i].config = cfgs[i];
          out[i].error = e.what();
        }
      },
      workers);
  return out;
}

}  // namespace bbm

#pragma once

// Randomised checks of the supporting inequalities: norm equivalence between
// the f-weighted and u-weighted local H^1 quantities, the comparison principle
// for (1-d^2)^{-1}, the quartic form in g, the smallness of the nonlinear part
// N(t), and the pointwise weight hypotheses.
//
// "Up to a constant" statements are checked the only way numerics can: the
// empirical constant is reported and must stay finite and stable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bbmlab/dynamics.hpp"
#include "bbmlab/parallel.hpp"
#include "bbmlab/random_field.hpp"
#include "bbmlab/spectral.hpp"
#include "bbmlab/virial.hpp"
#include "bbmlab/weight.hpp"

namespace bbm {

using ordered_json = nlohmann::ordered_json;

/// Outcome of one randomised suite. worst_margin is the most adverse
/// normalised slack of the inequality (negative means violated); witness holds
/// what is needed to regenerate that trial.
struct PropertyReport {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  ordered_json witness = ordered_json::object();
  std::map<std::string, double> metrics;

  bool passed() const { return failures == 0 && trials > 0; }
};

inline ordered_json to_json(const PropertyReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  j["failures"] = r.failures;
  j["worst_margin"] = std::isfinite(r.worst_margin) ? ordered_json(r.worst_margin) : ordered_json(nullptr);
  j["passed"] = r.passed();
  ordered_json m = ordered_json::object();
  for (const auto& [k, v] : r.metrics) m[k] = std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
  j["metrics"] = m;
  j["witness"] = r.witness;
  return j;
}

namespace detail {

/// Per-trial result gathered by index, then folded in trial order so the
/// report does not depend on scheduling.
struct TrialOutcome {
  bool skipped = false;
  bool failed = false;
  double margin = std::numeric_limits<double>::infinity();
  ordered_json witness;
};

inline void fold(PropertyReport& r, const std::vector<TrialOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    if (o.skipped) continue;
    ++r.trials;
    if (o.failed) ++r.failures;
    if (o.margin < r.worst_margin) {
      r.worst_margin = o.margin;
      r.witness = o.witness;
    }
  }
}

inline ordered_json trial_witness(std::uint64_t seed, std::size_t trial) {
  return ordered_json{{"suite_seed", seed}, {"trial", trial}, {"trial_seed", mix_seed(seed, trial)}};
}

inline void require_trials(std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("suite size must be positive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Norm equivalence

/// R(u) = int phi (a1 f^2 + a2 f_x^2 + a3 f_xx^2 + a4 f_xxx^2) / int phi (u^2 + u_x^2)
/// for a positive weight phi sampled at t = 0. Rejects u = 0.
inline double check_norm_equivalence(const Field& u, const WeightProfile& phi, const std::array<double, 4>& a) {
  validate(phi);
  for (double ai : a) {
    if (!(ai > 0.0)) throw std::invalid_argument("norm equivalence coefficients must be positive");
  }
  const Field w = weight_eval(phi, 0.0, u.grid_ptr(), 0);
  const Field ux = derivative(u, 1);
  const double den = weighted_integral(w, u, u) + weighted_integral(w, ux, ux);
  if (!(den > 0.0)) throw std::invalid_argument("norm equivalence is undefined for a zero field");
  const Field f = bessel_inverse(u);
  const Field fx = derivative(f, 1);
  const Field fxx = derivative(f, 2);
  const Field fxxx = derivative(f, 3);
  const double num = a[0] * weighted_integral(w, f, f) + a[1] * weighted_integral(w, fx, fx) +
                     a[2] * weighted_integral(w, fxx, fxx) + a[3] * weighted_integral(w, fxxx, fxxx);
  return num / den;
}

/// Multiplier value of R for a single Fourier mode and phi = 1.
inline double norm_equivalence_single_mode(double k, const std::array<double, 4>& a) {
  const double q = k * k;
  return (a[0] + a[1] * q + a[2] * q * q + a[3] * q * q * q) / std::pow(1 + q, 3);
}

/// Empirical c1 and C1 over `trials` random localised fields, plus the same
/// bounds over the first half of the suite. A bound moving by more than 20%
/// when the suite doubles counts as a failure (the constant is not settling).
inline PropertyReport norm_equivalence_suite(const GridPtr& grid, double L, const std::array<double, 4>& a,
                                             std::size_t trials, std::uint64_t seed) {
  detail::require_trials(trials);
  const WeightProfile phi{WeightShape::Sech2, 0.0, L};
  std::vector<double> ratios(trials);
  parallel_for(trials, [&](std::size_t i) {
    ratios[i] = check_norm_equivalence(random_trial_field(grid, seed, i, 0.05 * grid->domain_length()), phi, a);
  });

  PropertyReport r;
  r.name = "norm_equivalence";
  r.seed = seed;
  r.trials = trials;
  const std::size_t half = std::max<std::size_t>(1, trials / 2);
  const auto [lo_h, hi_h] = std::minmax_element(ratios.begin(), ratios.begin() + half);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  r.metrics["ratio_low"] = *lo;
  r.metrics["ratio_high"] = *hi;
  r.metrics["ratio_low_half_suite"] = *lo_h;
  r.metrics["ratio_high_half_suite"] = *hi_h;
  r.metrics["lambda"] = 6.0 / (L * L);  // sup |phi''|/phi for sech^2(x/L)
  const double drift = std::max(std::abs(*lo / *lo_h - 1), std::abs(*hi / *hi_h - 1));
  r.metrics["bound_drift"] = drift;
  for (std::size_t i = 0; i < trials; ++i) {
    if (!(ratios[i] > 0.0) || !std::isfinite(ratios[i])) ++r.failures;
  }
  if (drift > 0.2) ++r.failures;
  r.worst_margin = 0.2 - drift;
  r.witness = detail::trial_witness(seed, static_cast<std::size_t>(
                                              (std::abs(*lo / *lo_h - 1) > std::abs(*hi / *hi_h - 1) ? lo : hi) -
                                              ratios.begin()));
  return r;
}

// ---------------------------------------------------------------------------
// Comparison principle

/// Slack of (1-d^2)^{-1} w - (1-d^2)^{-1} v >= 0: its minimum over the grid,
/// and that minimum normalised by the size of the transforms.
struct ComparisonResult {
  double min_gap = 0.0;
  double normalised = 0.0;
  bool holds(double tol = 1e-12) const { return min_gap >= -tol; }
};

inline ComparisonResult check_comparison_principle(const Field& v, const Field& w) {
  v.check_same_grid(w);
  const Field kv = bessel_inverse(v);
  const Field kw = bessel_inverse(w);
  ComparisonResult c;
  c.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j) c.min_gap = std::min(c.min_gap, kw[j] - kv[j]);
  const double scale = std::max(kv.max_abs(), kw.max_abs());
  c.normalised = scale > 0.0 ? c.min_gap / scale : c.min_gap;
  return c;
}

/// Ordered pair for one trial: v smooth random, w = v + nonnegative Gaussian bump.
inline std::pair<Field, Field> comparison_pair(const GridPtr& grid, std::uint64_t seed, std::size_t trial) {
  std::mt19937_64 rng(mix_seed(seed, trial));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::uint64_t v_seed = rng();
  const double envelope = unit(rng) < 0.5 ? 0.0 : 0.1 * grid->domain_length();
  const Field v = random_trial_field(grid, v_seed, 0, envelope);
  const double amp = 2.0 * unit(rng);
  const double width = std::max(0.5, 8 * grid->spacing()) * (1.0 + 5.0 * unit(rng));
  const double center = grid->x_min() + grid->domain_length() * unit(rng);
  const double length = grid->domain_length();
  const Field bump = Field::from_function(grid, [&](double x) {
    const double d = detail::periodic_offset(x - center, length);
    return amp * std::exp(-d * d / (2 * width * width));
  });
  for (double b : bump.values()) {
    if (b < 0.0) throw std::logic_error("comparison generator produced a negative bump");
  }
  return {v, v + bump};
}

inline PropertyReport comparison_principle_suite(const GridPtr& grid, std::size_t trials, std::uint64_t seed) {
  detail::require_trials(trials);
  std::vector<detail::TrialOutcome> out(trials);
  parallel_for(trials, [&](std::size_t i) {
    const auto [v, w] = comparison_pair(grid, seed, i);
    const auto c = check_comparison_principle(v, w);
    out[i].failed = !c.holds();
    out[i].margin = c.normalised;
    out[i].witness = detail::trial_witness(seed, i);
    out[i].witness["min_gap"] = c.min_gap;
  });
  PropertyReport r;
  r.name = "comparison_principle";
  r.seed = seed;
  detail::fold(r, out);
  return r;
}

// ---------------------------------------------------------------------------
// Quartic form

/// D = int g_xxx^2 - 4 int g_xx^2 - 3 int g_x^2 + 18 int g^2 and the square
/// D' = int (g_xxx - sqrt2 g_xx + 3 g_x - 3 sqrt2 g)^2 it equals after
/// periodic integration by parts. scale is the sum of the absolute terms of D.
struct QuarticForm {
  double D = 0.0;
  double D_square = 0.0;
  double scale = 0.0;
  double relative_gap() const { return scale > 0.0 ? std::abs(D - D_square) / scale : 0.0; }
  double normalised() const { return scale > 0.0 ? D / scale : 0.0; }
};

inline QuarticForm check_quartic_inequality(const Field& g) {
  const Field one = Field::constant(g.grid_ptr(), 1.0);
  const Field g1 = derivative(g, 1);
  const Field g2 = derivative(g, 2);
  const Field g3 = derivative(g, 3);
  const double i0 = weighted_integral(one, g, g);
  const double i1 = weighted_integral(one, g1, g1);
  const double i2 = weighted_integral(one, g2, g2);
  const double i3 = weighted_integral(one, g3, g3);
  const double r2 = std::sqrt(2.0);
  const Field sq = g3 - g2 * r2 + g1 * 3.0 - g * (3.0 * r2);
  QuarticForm q;
  q.D = i3 - 4 * i2 - 3 * i1 + 18 * i0;
  q.D_square = weighted_integral(one, sq, sq);
  q.scale = i3 + 4 * i2 + 3 * i1 + 18 * i0;
  return q;
}

inline PropertyReport quartic_suite(const GridPtr& grid, std::size_t trials, std::uint64_t seed) {
  detail::require_trials(trials);
  std::vector<detail::TrialOutcome> out(trials);
  std::vector<double> gaps(trials);
  parallel_for(trials, [&](std::size_t i) {
    const auto q = check_quartic_inequality(random_trial_field(grid, seed, i, 0.0));
    gaps[i] = q.relative_gap();
    out[i].failed = q.D < -1e-10 * q.scale || q.relative_gap() > 1e-9;
    out[i].margin = q.normalised();
    out[i].witness = detail::trial_witness(seed, i);
    out[i].witness["D"] = q.D;
    out[i].witness["D_square"] = q.D_square;
  });
  PropertyReport r;
  r.name = "quartic_form";
  r.seed = seed;
  detail::fold(r, out);
  r.metrics["max_relative_gap"] = *std::max_element(gaps.begin(), gaps.end());
  return r;
}

// ---------------------------------------------------------------------------
// Nonlinear term

/// rho(u) = L |N(t)| / int |phi'| (u^2 + u_x^2); NaN when the
/// weighted norm underflows (the trial is then skipped).
inline double nonlinear_ratio(const Field& u, const WeightProfile& w, double t, int p, double alpha) {
  const Field abs_phi1 = weight_eval(w, t, u.grid_ptr(), 1).map([](double x) { return std::abs(x); });
  const Field ux = derivative(u, 1);
  const double den = weighted_integral(abs_phi1, u, u) + weighted_integral(abs_phi1, ux, ux);
  if (!(den > std::numeric_limits<double>::min() * 1e10)) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(decompose_QSN(u, w, t, p, alpha).N) / den * w.L;
}

/// Fits log max rho against log eps over the same random shapes rescaled to
/// each H^1 size; the slope should be p - 1. The extra factor L in
/// nonlinear_ratio removes the common 1/L of N so the ratio is O(1) in L.
inline PropertyReport check_nonlinear_bound(const GridPtr& grid, const WeightProfile& w, int p, double alpha,
                                            const std::vector<double>& eps_list, std::size_t shapes,
                                            std::uint64_t seed) {
  require_power(p);
  detail::require_trials(shapes);
  if (eps_list.size() < 2) throw std::invalid_argument("nonlinear bound needs at least two sizes");
  for (double e : eps_list) {
    if (!(e > 0.0) || e > 0.1) throw std::invalid_argument("nonlinear bound sizes must lie in (0, 0.1]");
  }
  const std::size_t ne = eps_list.size();
  std::vector<double> rho(shapes * ne);
  parallel_for(shapes, [&](std::size_t i) {
    const Field shape = random_trial_field(grid, seed, i, 0.05 * grid->domain_length());
    const double norm = h1_norm(shape);
    for (std::size_t e = 0; e < ne; ++e) {
      rho[i * ne + e] = norm > 0.0 ? nonlinear_ratio(shape * (eps_list[e] / norm), w, 0.0, p, alpha)
                                   : std::numeric_limits<double>::quiet_NaN();
    }
  });

  PropertyReport r;
  r.name = "nonlinear_bound_p" + std::to_string(p);
  r.seed = seed;
  std::vector<double> max_rho(ne, 0.0);
  std::vector<std::size_t> arg(ne, 0);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < shapes; ++i) {
    for (std::size_t e = 0; e < ne; ++e) {
      const double v = rho[i * ne + e];
      if (!std::isfinite(v)) {
        ++skipped;
        continue;
      }
      ++r.trials;
      if (v > max_rho[e]) {
        max_rho[e] = v;
        arg[e] = i;
      }
    }
  }
  // Least-squares slope of log max rho on log eps.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t e = 0; e < ne; ++e) {
    if (!(max_rho[e] > 0.0)) continue;
    const double x = std::log(eps_list[e]);
    const double y = std::log(max_rho[e]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  const double slope =
      used >= 2 ? (used * sxy - sx * sy) / (used * sxx - sx * sx) : std::numeric_limits<double>::quiet_NaN();
  r.metrics["slope"] = slope;
  r.metrics["expected_slope"] = p - 1;
  r.metrics["skipped"] = static_cast<double>(skipped);
  for (std::size_t e = 0; e < ne; ++e) {
    char key[64];
    std::snprintf(key, sizeof key, "max_rho_eps_%.6g", eps_list[e]);
    r.metrics[key] = max_rho[e];
  }
  r.worst_margin = std::isfinite(slope) ? 0.3 - std::abs(slope - (p - 1)) : -std::numeric_limits<double>::infinity();
  if (!(r.worst_margin >= 0.0)) r.failures = 1;
  r.witness = detail::trial_witness(seed, arg.front());
  r.witness["eps"] = eps_list.front();
  return r;
}

// ---------------------------------------------------------------------------
// Weight hypotheses

/// Smallest C with (1-d^2)^{-1} phi <= C phi and |phi^(n)| <= C phi (n <= 3)
/// on the grid, excluding a guard band of `guard` of the domain at each end
/// where the periodic images of the tails interact.
inline PropertyReport check_weight_hypotheses(const WeightProfile& w, const GridPtr& grid, double guard = 0.1) {
  validate(w);
  if (!(guard >= 0.0 && guard < 0.5)) throw std::invalid_argument("guard band must be in [0, 0.5)");
  const Field phi = weight_eval(w, 0.0, grid, 0);
  const Field kphi = bessel_inverse(phi);
  std::array<Field, 3> d{weight_eval(w, 0.0, grid, 1), weight_eval(w, 0.0, grid, 2), weight_eval(w, 0.0, grid, 3)};

  PropertyReport r;
  r.name = "weight_hypotheses_" + std::string(to_string(w.shape));
  const double lo = grid->x_min() + guard * grid->domain_length();
  const double hi = grid->x_min() + (1 - guard) * grid->domain_length();
  double c_inv = 0.0;
  std::array<double, 3> c_der{0.0, 0.0, 0.0};
  double worst_x = 0.0;
  for (std::size_t j = 0; j < grid->n_points(); ++j) {
    const double x = grid->x(j);
    if (x < lo || x > hi) continue;
    ++r.trials;
    if (!(phi[j] > 0.0)) {
      ++r.failures;
      worst_x = x;
      continue;
    }
    const double ri = kphi[j] / phi[j];
    if (ri > c_inv) {
      c_inv = ri;
      worst_x = x;
    }
    for (int n = 0; n < 3; ++n) c_der[n] = std::max(c_der[n], std::abs(d[n][j]) / std::pow(w.L, n + 1) / phi[j]);
  }
  const double C = std::max({c_inv, c_der[0], c_der[1], c_der[2]});
  r.metrics["C"] = C;
  r.metrics["C_inverse"] = c_inv;
  r.metrics["C_d1"] = c_der[0];
  r.metrics["C_d2"] = c_der[1];
  r.metrics["C_d3"] = c_der[2];
  if (!std::isfinite(C)) ++r.failures;
  r.worst_margin = std::isfinite(C) ? 1.0 / C : 0.0;
  r.witness = ordered_json{{"shape", to_string(w.shape)}, {"L", w.L}, {"x", worst_x}};
  return r;
}

}  // namespace bbm

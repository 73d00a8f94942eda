#pragma once

// Weighted functionals I, J, H = I + alpha J, the exact expressions for their
// time derivatives along the flow, and the split dH/dt = Q + S + N.
//
// Conventions: for a WeightProfile w, "phi^(k)" below always means the shape
// derivative phi^(k)((x + sigma t)/L); the explicit 1/L, 1/L^3 prefactors
// appear in the formulas exactly where the chain rule puts them.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "bbmlab/dynamics.hpp"
#include "bbmlab/spectral.hpp"
#include "bbmlab/weight.hpp"

namespace bbm {

inline double functional_I(const Field& u, const WeightProfile& w, double t) {
  const Field phi = weight_eval(w, t, u.grid_ptr(), 0);
  const Field ux = derivative(u, 1);
  return 0.5 * (weighted_integral(phi, u, u) + weighted_integral(phi, ux, ux));
}

inline double functional_J(const Field& u, const WeightProfile& w, double t, int p) {
  require_power(p);
  const Field phi = weight_eval(w, t, u.grid_ptr(), 0);
  const Field up1 = power(u, p + 1);
  return 0.5 * weighted_integral(phi, u, u) + weighted_integral(phi, up1) / (p + 1);
}

inline double functional_H(const Field& u, const WeightProfile& w, double t, int p, double alpha) {
  return functional_I(u, w, t) + alpha * functional_J(u, w, t, p);
}

/// Scalars of one virial evaluation. Every displayed integral is kept in
/// sub_terms (already multiplied by its coefficient).
struct VirialBreakdown {
  double t = 0.0;
  double alpha = 0.0;
  double Q = 0.0;
  double S = 0.0;
  double N = 0.0;
  double dH_dt_exact = 0.0;  // Q + S + N
  double dI_dt = 0.0;
  double dJ_dt = 0.0;
  double identity_residual = 0.0;  // |Q+S+N - (dI + alpha dJ)| / magnitude of the terms
  std::map<std::string, double> sub_terms;
};

namespace detail {

/// Everything the virial formulas need, computed once per snapshot.
struct VirialFields {
  Field phi1, phi3, ux, f, fx, fxx, fxxx, up1, h, hx;
  Field u;

  VirialFields(const Field& u_in, const WeightProfile& w, double t, int p)
      : phi1(weight_eval(w, t, u_in.grid_ptr(), 1)),
        phi3(weight_eval(w, t, u_in.grid_ptr(), 3)),
        ux(derivative(u_in, 1)),
        f(bessel_inverse(u_in)),
        fx(derivative(f, 1)),
        fxx(derivative(f, 2)),
        fxxx(derivative(f, 3)),
        up1(power(u_in, p + 1)),
        h(bessel_inverse(power(u_in, p))),
        hx(derivative(h, 1)),
        u(u_in) {}
};

inline std::map<std::string, double> dI_terms(const VirialFields& v, const WeightProfile& w, int p) {
  const double L = w.L;
  const double sg = w.sigma;
  return {
      {"dI.ux2", sg / (2 * L) * weighted_integral(v.phi1, v.ux, v.ux)},
      {"dI.u2", (sg - 1) / (2 * L) * weighted_integral(v.phi1, v.u, v.u)},
      {"dI.uKu", 1 / L * weighted_integral(v.phi1, v.u, v.f)},
      {"dI.up1", -1 / (L * (p + 1)) * weighted_integral(v.phi1, v.up1)},
      {"dI.uKup", 1 / L * weighted_integral(v.phi1, v.u, v.h)},
  };
}

inline std::map<std::string, double> dJ_terms(const VirialFields& v, const WeightProfile& w, int p) {
  const double L = w.L;
  const double sg = w.sigma;
  const Field vv = v.f + v.h;
  const Field vx = v.fx + v.hx;
  return {
      {"dJ.sigma", sg / (2 * L) *
                       (weighted_integral(v.phi1, v.u, v.u) + 2.0 / (p + 1) * weighted_integral(v.phi1, v.up1))},
      {"dJ.v", 1 / (2 * L) * (weighted_integral(v.phi1, vv, vv) - weighted_integral(v.phi1, vx, vx))},
  };
}

inline double sum_values(const std::map<std::string, double>& m) {
  double s = 0.0;
  for (const auto& [k, x] : m) s += x;
  return s;
}

inline double sum_abs(const std::map<std::string, double>& m) {
  double s = 0.0;
  for (const auto& [k, x] : m) s += std::abs(x);
  return s;
}

}  // namespace detail

/// Right-hand side of the dI/dt identity (five terms).
inline double dI_dt_rhs(const Field& u, const WeightProfile& w, double t, int p) {
  require_power(p);
  validate(w);
  return detail::sum_values(detail::dI_terms(detail::VirialFields(u, w, t, p), w, p));
}

/// Right-hand side of the dJ/dt identity, with v = (1-d^2)^{-1}(u + u^p).
inline double dJ_dt_rhs(const Field& u, const WeightProfile& w, double t, int p) {
  require_power(p);
  validate(w);
  return detail::sum_values(detail::dJ_terms(detail::VirialFields(u, w, t, p), w, p));
}

/// Q, S, N of dH/dt for H = I + alpha J, with f = (1-d^2)^{-1} u and
/// h = (1-d^2)^{-1} u^p. The frame speed sigma is the weight's.
///
/// Throws std::logic_error if Q + S + N and dI/dt + alpha dJ/dt disagree by
/// more than max_residual of the magnitude of the terms: the two are the same
/// quantity rearranged, so a gap means a broken formula (or a weight whose
/// jump across the periodic seam carries weight, which breaks the
/// integrations by parts).
inline VirialBreakdown decompose_QSN(const Field& u, const WeightProfile& w, double t, int p, double alpha,
                                     double max_residual = 1e-10) {
  require_power(p);
  validate(w);
  const detail::VirialFields v(u, w, t, p);
  const double L = w.L;
  const double L3 = L * L * L;
  const double sg = w.sigma;
  const double a = alpha;

  VirialBreakdown out;
  out.t = t;
  out.alpha = alpha;
  auto& st = out.sub_terms;

  st["Q.f2"] = (1 + sg) * (1 + a) / (2 * L) * weighted_integral(v.phi1, v.f, v.f);
  st["Q.fx2"] = (sg * (3 + 2 * a) - a) / (2 * L) * weighted_integral(v.phi1, v.fx, v.fx);
  st["Q.fxx2"] = ((3 + a) * sg - 1) / (2 * L) * weighted_integral(v.phi1, v.fxx, v.fxx);
  st["Q.fxxx2"] = sg / (2 * L) * weighted_integral(v.phi1, v.fxxx, v.fxxx);

  // The two phi''' f^2 terms are kept separate, as displayed.
  st["S.f2_a"] = -(sg * (1 + a) - 1) / (2 * L3) * weighted_integral(v.phi3, v.f, v.f);
  st["S.fx2"] = -sg / (2 * L3) * weighted_integral(v.phi3, v.fx, v.fx);
  st["S.f2_b"] = -1 / (2 * L3) * weighted_integral(v.phi3, v.f, v.f);

  st["N.fh"] = a / (2 * L) * 2 * weighted_integral(v.phi1, v.f, v.h);
  st["N.h2"] = a / (2 * L) * weighted_integral(v.phi1, v.h, v.h);
  st["N.fxhx"] = -a / (2 * L) * 2 * weighted_integral(v.phi1, v.fx, v.hx);
  st["N.hx2"] = -a / (2 * L) * weighted_integral(v.phi1, v.hx, v.hx);
  // Coefficient (alpha sigma - 1)/(L(p+1)): the sum of -1/(L(p+1)) from dI/dt
  // and alpha sigma/(L(p+1)) from alpha dJ/dt.
  st["N.up1"] = (a * sg - 1) / (L * (p + 1)) * weighted_integral(v.phi1, v.up1);
  st["N.uh"] = 1 / L * weighted_integral(v.phi1, v.u, v.h);

  for (const auto& [name, value] : st) {
    if (name.starts_with("Q.")) out.Q += value;
    else if (name.starts_with("S.")) out.S += value;
    else out.N += value;
  }
  out.dH_dt_exact = out.Q + out.S + out.N;

  const auto di = detail::dI_terms(v, w, p);
  const auto dj = detail::dJ_terms(v, w, p);
  out.dI_dt = detail::sum_values(di);
  out.dJ_dt = detail::sum_values(dj);
  for (const auto& [name, value] : di) st[name] = value;
  for (const auto& [name, value] : dj) st[name] = value;

  const double magnitude = detail::sum_abs(di) + std::abs(a) * detail::sum_abs(dj);
  const double gap = std::abs(out.dH_dt_exact - (out.dI_dt + a * out.dJ_dt));
  out.identity_residual = magnitude > 0.0 ? gap / magnitude : gap;
  if (out.identity_residual > max_residual) {
    throw std::logic_error("Q + S + N differs from dI/dt + alpha dJ/dt by relative " +
                           std::to_string(out.identity_residual));
  }
  return out;
}

/// x>0 case: phi = tanh, alpha = 0, sigma = -(1+b). Q in the closed form with
/// four negative coefficients.
inline double right_case_Q_closed_form(const Field& u, double b, double L, double t) {
  const WeightProfile w = right_case_weight(b, L);
  const Field phi1 = weight_eval(w, t, u.grid_ptr(), 1);
  const Field f = bessel_inverse(u);
  const Field fx = derivative(f, 1);
  const Field fxx = derivative(f, 2);
  const Field fxxx = derivative(f, 3);
  return -b / (2 * L) * weighted_integral(phi1, f, f) - 3 * (1 + b) / (2 * L) * weighted_integral(phi1, fx, fx) -
         (4 + 3 * b) / (2 * L) * weighted_integral(phi1, fxx, fxx) -
         (1 + b) / (2 * L) * weighted_integral(phi1, fxxx, fxxx);
}

/// x<0 case lower bound on -16 L Q (phi = -tanh, alpha = 1, sigma = (1+s)/8).
struct CoercivityCheck {
  double lhs = 0.0;  // -16 L Q
  double rhs = 0.0;  // (s/2) int|phi'| f^2 + 3s int|phi'| f_x^2 + 2s int|phi'| f_xx^2 + (s/4) int|phi'| f_xxx^2
  double margin() const { return lhs - rhs; }
  bool holds() const { return lhs >= rhs; }
};

inline CoercivityCheck left_case_coercivity(const Field& u, double sigma_tilde, double L, double t) {
  const WeightProfile w = left_case_weight(sigma_tilde, L);
  const Field abs_phi1 = weight_eval(w, t, u.grid_ptr(), 1).map([](double x) { return std::abs(x); });
  const Field f = bessel_inverse(u);
  const Field fx = derivative(f, 1);
  const Field fxx = derivative(f, 2);
  const Field fxxx = derivative(f, 3);
  const double s = sigma_tilde;
  // Q of the x<0 case, written with phi' = -|phi'|.
  const double sg = w.sigma;
  const double q = -(2 * (1 + sg) * weighted_integral(abs_phi1, f, f) + (5 * sg - 1) * weighted_integral(abs_phi1, fx, fx) +
                     (4 * sg - 1) * weighted_integral(abs_phi1, fxx, fxx) +
                     sg * weighted_integral(abs_phi1, fxxx, fxxx)) /
                   (2 * L);
  CoercivityCheck c;
  c.lhs = -16 * L * q;
  c.rhs = 0.5 * s * weighted_integral(abs_phi1, f, f) + 3 * s * weighted_integral(abs_phi1, fx, fx) +
          2 * s * weighted_integral(abs_phi1, fxx, fxx) + 0.25 * s * weighted_integral(abs_phi1, fxxx, fxxx);
  return c;
}

/// Residuals of the three integration-by-parts identities that rewrite
/// int phi' u^2, int phi' u_x^2 and int phi' u (1-d^2)^{-1} u in terms of f.
struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double scale = 0.0;  // sum of |terms|
  double absolute() const { return std::abs(lhs - rhs); }
  double relative() const { return scale > 0.0 ? absolute() / scale : absolute(); }
};

struct WeightedIdentityReport {
  IdentityResidual u2;
  IdentityResidual ux2;
  IdentityResidual u_inv_u;
  double worst_relative() const { return std::max({u2.relative(), ux2.relative(), u_inv_u.relative()}); }
};

inline WeightedIdentityReport verify_weighted_identities(const Field& u, const WeightProfile& w, double t) {
  validate(w);
  const Field phi1 = weight_eval(w, t, u.grid_ptr(), 1);
  const Field phi3 = weight_eval(w, t, u.grid_ptr(), 3);
  const Field ux = derivative(u, 1);
  const Field f = bessel_inverse(u);
  const Field fx = derivative(f, 1);
  const Field fxx = derivative(f, 2);
  const Field fxxx = derivative(f, 3);
  const double L2 = w.L * w.L;

  auto build = [](double lhs, std::initializer_list<double> terms) {
    IdentityResidual r;
    r.lhs = lhs;
    r.scale = std::abs(lhs);
    for (double x : terms) {
      r.rhs += x;
      r.scale += std::abs(x);
    }
    return r;
  };

  WeightedIdentityReport rep;
  rep.u2 = build(weighted_integral(phi1, u, u),
                 {weighted_integral(phi1, f, f), 2 * weighted_integral(phi1, fx, fx), weighted_integral(phi1, fxx, fxx),
                  -weighted_integral(phi3, f, f) / L2});
  rep.ux2 = build(weighted_integral(phi1, ux, ux),
                  {weighted_integral(phi1, fx, fx), 2 * weighted_integral(phi1, fxx, fxx),
                   weighted_integral(phi1, fxxx, fxxx), -weighted_integral(phi3, fx, fx) / L2});
  rep.u_inv_u = build(weighted_integral(phi1, u, f), {weighted_integral(phi1, f, f), weighted_integral(phi1, fx, fx),
                                                      -0.5 * weighted_integral(phi3, f, f) / L2});
  return rep;
}

/// Pointwise residuals of the g = sech((x+sigma t)/L) f relations for g_xx and
/// g_xxx, normalised by the largest term in each relation.
struct GSubstitutionReport {
  double gxx = 0.0;
  double gxxx = 0.0;
  double worst() const { return std::max(gxx, gxxx); }
};

inline GSubstitutionReport verify_g_substitution(const Field& f, const WeightProfile& w, double t) {
  validate(w);
  if (w.shape != WeightShape::MinusTanh) {
    throw std::invalid_argument("g-substitution check requires the minus_tanh weight (|phi'|^{1/2} = sech)");
  }
  const GridPtr& grid = f.grid_ptr();
  const double L = w.L;
  const Field sech = Field::from_function(grid, [&](double x) {
    const double c = std::cosh(w.argument(x, t));
    return std::isfinite(c) ? 1.0 / c : 0.0;
  });
  const Field th = Field::from_function(grid, [&](double x) { return std::tanh(w.argument(x, t)); });
  const Field g = sech * f;
  const Field gx = derivative(g, 1);
  const Field gxx = derivative(g, 2);
  const Field gxxx = derivative(g, 3);
  const Field fxx = derivative(f, 2);
  const Field fxxx = derivative(f, 3);

  GSubstitutionReport rep;
  double worst2 = 0.0, scale2 = 0.0, worst3 = 0.0, scale3 = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double a1 = -g[j] / (L * L);
    const double a2 = -2.0 / L * th[j] * gx[j];
    const double a3 = sech[j] * fxx[j];
    worst2 = std::max(worst2, std::abs(gxx[j] - (a1 + a2 + a3)));
    scale2 = std::max({scale2, std::abs(gxx[j]), std::abs(a1), std::abs(a2), std::abs(a3)});

    const double b1 = -th[j] * g[j] / (L * L * L);
    const double b2 = -3.0 / (L * L) * gx[j];
    const double b3 = -3.0 / L * th[j] * gxx[j];
    const double b4 = sech[j] * fxxx[j];
    worst3 = std::max(worst3, std::abs(gxxx[j] - (b1 + b2 + b3 + b4)));
    scale3 = std::max({scale3, std::abs(gxxx[j]), std::abs(b1), std::abs(b2), std::abs(b3), std::abs(b4)});
  }
  rep.gxx = scale2 > 0.0 ? worst2 / scale2 : worst2;
  rep.gxxx = scale3 > 0.0 ? worst3 / scale3 : worst3;
  return rep;
}

}  // namespace bbm

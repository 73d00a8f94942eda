#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bbmlab/spectral.hpp"

namespace bbm {

enum class WeightShape { Tanh, MinusTanh, HalfOnePlusTanh, HalfOneMinusTanh, Sech2, Constant };

inline std::string_view to_string(WeightShape s) {
  switch (s) {
    case WeightShape::Tanh: return "tanh";
    case WeightShape::MinusTanh: return "minus_tanh";
    case WeightShape::HalfOnePlusTanh: return "half_one_plus_tanh";
    case WeightShape::HalfOneMinusTanh: return "half_one_minus_tanh";
    case WeightShape::Sech2: return "sech2";
    case WeightShape::Constant: return "constant";
  }
  return "unknown";
}

namespace detail {

// tanh and its first three derivatives in terms of t = tanh(y), s = sech^2(y).
inline double tanh_derivative(double y, int order) {
  const double t = std::tanh(y);
  const double c = std::cosh(y);
  const double s = std::isfinite(c) ? 1.0 / (c * c) : 0.0;
  switch (order) {
    case 0: return t;
    case 1: return s;
    case 2: return -2.0 * s * t;
    case 3: return 4.0 * s * t * t - 2.0 * s * s;
  }
  throw std::invalid_argument("weight derivative order must be 0..3");
}

inline double sech2_derivative(double y, int order) {
  const double t = std::tanh(y);
  const double c = std::cosh(y);
  const double s = std::isfinite(c) ? 1.0 / (c * c) : 0.0;
  switch (order) {
    case 0: return s;
    case 1: return -2.0 * s * t;
    case 2: return 4.0 * s * t * t - 2.0 * s * s;
    case 3: return -8.0 * s * t * t * t + 16.0 * s * s * t;
  }
  throw std::invalid_argument("weight derivative order must be 0..3");
}

}  // namespace detail

/// A weight phi((x + sigma t) / L). `profile` returns derivatives of the shape
/// phi itself; chain-rule powers of 1/L are left to the caller.
struct WeightProfile {
  WeightShape shape = WeightShape::Tanh;
  double sigma = 0.0;
  double L = 1.0;

  double argument(double x, double t) const { return (x + sigma * t) / L; }

  double profile(double y, int order) const {
    if (order < 0 || order > 3) throw std::invalid_argument("weight derivative order must be 0..3");
    switch (shape) {
      case WeightShape::Tanh: return detail::tanh_derivative(y, order);
      case WeightShape::MinusTanh: return -detail::tanh_derivative(y, order);
      case WeightShape::HalfOnePlusTanh:
        return order == 0 ? 0.5 * (1.0 + std::tanh(y)) : 0.5 * detail::tanh_derivative(y, order);
      case WeightShape::HalfOneMinusTanh:
        return order == 0 ? 0.5 * (1.0 - std::tanh(y)) : -0.5 * detail::tanh_derivative(y, order);
      case WeightShape::Sech2: return detail::sech2_derivative(y, order);
      case WeightShape::Constant: return order == 0 ? 1.0 : 0.0;
    }
    throw std::invalid_argument("unknown weight shape");
  }
};

inline void validate(const WeightProfile& w) {
  if (!(w.L > 0.0) || !std::isfinite(w.L)) throw std::invalid_argument("weight scale L must be positive");
  if (!std::isfinite(w.sigma)) throw std::invalid_argument("weight frame speed must be finite");
}

/// Samples phi^{(order)}((x + sigma t)/L) on the grid.
inline Field weight_eval(const WeightProfile& w, double t, const GridPtr& grid, int order) {
  validate(w);
  if (order < 0 || order > 3) {
    throw std::invalid_argument("weight derivative order must be 0..3, got " + std::to_string(order));
  }
  return Field::from_function(grid, [&](double x) { return w.profile(w.argument(x, t), order); });
}

/// Right-region weight of the x>0 case: phi = tanh, sigma = -(1+b).
inline WeightProfile right_case_weight(double b, double L) {
  return {WeightShape::Tanh, -(1.0 + b), L};
}

/// Left-region weight of the x<0 case: phi = -tanh, sigma = (1 + sigma_tilde)/8.
inline WeightProfile left_case_weight(double sigma_tilde, double L) {
  return {WeightShape::MinusTanh, 0.125 * (1.0 + sigma_tilde), L};
}

}  // namespace bbm

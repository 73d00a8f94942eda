#pragma once

// Reference evaluation of (1 - d^2/dx^2)^{-1} f as the convolution
// (1/2) exp(-|x|) * f, computed directly in physical space without any FFT.
// Used as ground truth for bessel_inverse.

#include <array>
#include <cmath>
#include <iostream>
#include <vector>

#include "bbmlab/spectral.hpp"

namespace bbm {

namespace detail {

/// Gauss-Legendre nodes/weights on [0, 1].
inline void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[i] = 0.5 * (1.0 - z);
    weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace detail

/// True when exp(-domain_length/2) < 1e-12, i.e. the kernel tail is negligible
/// where the periodic images meet.
inline bool green_tail_negligible(const Grid1D& grid) {
  return std::exp(-0.5 * grid.domain_length()) < 1e-12;
}

/// Direct O(n^2) product-integration of the periodised kernel (1/2)e^{-|x|}.
///
/// On every cell the samples are replaced by the degree-7 interpolant through
/// the eight surrounding nodes, and the exponential is integrated exactly
/// against it. Each source cell contributes through its two nearest periodic
/// images; farther images are below the tail bound checked above.
inline Field green_convolution_oracle(const Field& f) {
  const Grid1D& grid = f.grid();
  if (!green_tail_negligible(grid)) {
    std::cerr << "warning: green_convolution_oracle: exp(-L/2) >= 1e-12 for L = "
              << grid.domain_length() << "; periodic images are not negligible\n";
  }
  constexpr int kStencil = 8;
  constexpr int kOffset = 3;  // cell [node 0, node 1] sits between stencil entries 3 and 4
  const std::size_t n = grid.n_points();
  const double h = grid.spacing();

  std::vector<double> gl_x, gl_w;
  detail::gauss_legendre_unit(16, gl_x, gl_w);
  std::array<double, kStencil> w_right{};  // h * int_0^1 e^{-h s} l_k(s) ds
  std::array<double, kStencil> w_left{};   // h * int_0^1 e^{-h (1-s)} l_k(s) ds
  for (std::size_t q = 0; q < gl_x.size(); ++q) {
    const double s = gl_x[q];
    for (int k = 0; k < kStencil; ++k) {
      double lk = 1.0;
      for (int j = 0; j < kStencil; ++j) {
        if (j == k) continue;
        lk *= (s - (j - kOffset)) / static_cast<double>(k - j);
      }
      w_right[k] += h * gl_w[q] * std::exp(-h * s) * lk;
      w_left[k] += h * gl_w[q] * std::exp(-h * (1.0 - s)) * lk;
    }
  }

  // Effective discrete kernel indexed by source offset (mod n).
  const auto nn = static_cast<long>(n);
  auto wrap = [nn](long i) { return static_cast<std::size_t>(((i % nn) + nn) % nn); };
  std::vector<double> kernel(n, 0.0);
  for (long r = 0; r < nn; ++r) {
    const double decay = 0.5 * std::exp(-static_cast<double>(r) * h);
    for (int k = 0; k < kStencil; ++k) {
      kernel[wrap(r + k - kOffset)] += decay * w_right[k];
      kernel[wrap(-r - 1 + k - kOffset)] += decay * w_left[k];
    }
  }

  std::vector<double> out(n, 0.0);
  const auto values = f.values();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
      std::size_t j = i + o;
      if (j >= n) j -= n;
      acc += kernel[o] * values[j];
    }
    out[i] = acc;
  }
  return Field(f.grid_ptr(), std::move(out));
}

}  // namespace bbm

#pragma once

// Reproducible random smooth fields: band-limited Gaussian spectra with random
// phases, optionally localised by a Gaussian envelope.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "bbmlab/spectral.hpp"

namespace bbm {

/// SplitMix64 finaliser; derives independent per-trial seeds from (suite seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct RandomFieldSpec {
  double k_scale = 2.0;        // Gaussian spectral width: |a_k| ~ exp(-(k/k_scale)^2 / 2)
  double k_max = 6.0;          // hard band limit
  double envelope_width = 0.0; // 0: periodic (no envelope)
  double envelope_center = 0.0;
};

/// Random smooth field with unit L2 norm (before the envelope is applied the
/// spectrum is band-limited; the envelope keeps it smooth).
inline Field random_smooth_field(const GridPtr& grid, std::uint64_t seed, const RandomFieldSpec& spec) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Spectrum s(grid->n_half_modes(), 0.0);
  for (std::size_t m = 1; m + 1 < s.size(); ++m) {
    const double k = grid->half_wavenumber(m);
    if (k > spec.k_max) break;
    const double a = std::exp(-0.5 * (k / spec.k_scale) * (k / spec.k_scale));
    const double re = normal(rng);
    const double im = normal(rng);
    s[m] = a * std::complex<double>(re, im);
  }
  Field f = Field::from_spectrum(grid, s);
  if (spec.envelope_width > 0.0) {
    const double w = spec.envelope_width;
    f = f * Field::from_function(grid, [&](double x) {
      const double d = x - spec.envelope_center;
      return std::exp(-d * d / (2.0 * w * w));
    });
  }
  const double norm = l2_norm(f);
  return norm > 0.0 ? f * (1.0 / norm) : f;
}

/// Draws the spectral parameters themselves at random (band and width per trial).
inline Field random_trial_field(const GridPtr& grid, std::uint64_t suite_seed, std::uint64_t trial,
                                double envelope_width) {
  std::mt19937_64 rng(mix_seed(suite_seed, trial));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomFieldSpec spec;
  spec.k_scale = 0.5 + 2.5 * unit(rng);
  spec.k_max = 3.0 + 4.0 * unit(rng);
  spec.envelope_width = envelope_width;
  const double span = envelope_width > 0.0 ? 0.2 * grid->domain_length() : 0.0;
  spec.envelope_center = grid->x_min() + 0.5 * grid->domain_length() + span * (unit(rng) - 0.5);
  const double amplitude = 0.2 + 1.8 * unit(rng);
  return random_smooth_field(grid, rng(), spec) * amplitude;
}

}  // namespace bbm

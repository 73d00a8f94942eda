#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "bbmlab/green_oracle.hpp"
#include "bbmlab/random_field.hpp"
#include "bbmlab/spectral.hpp"

using namespace bbm;

namespace {

constexpr double kPi = std::numbers::pi;

double sech2(double x) {
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace

TEST(Grid, SpacingAndWavenumbers) {
  auto g = make_grid(256, 2 * kPi, -kPi);
  EXPECT_DOUBLE_EQ(g->spacing(), 2 * kPi / 256);
  std::set<long> modes;
  for (double k : g->wavenumbers()) {
    const double r = std::round(k);
    EXPECT_NEAR(k, r, 1e-12);
    modes.insert(static_cast<long>(r));
  }
  EXPECT_EQ(modes.size(), 256u);
  EXPECT_EQ(*modes.begin(), -127);
  EXPECT_EQ(*modes.rbegin(), 128);
  EXPECT_EQ(g->mode_index(g->nyquist_index()), 128);

  auto g8 = make_grid(8, 8.0, 0.0);
  EXPECT_DOUBLE_EQ(g8->spacing(), 1.0);
  EXPECT_DOUBLE_EQ(g8->x(3), 3.0);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(make_grid(255, 2 * kPi, -kPi), std::invalid_argument);
  EXPECT_THROW(make_grid(6, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_grid(16, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_grid(16, -1.0, 0.0), std::invalid_argument);
}

TEST(Field, RejectsNonFiniteValues) {
  auto g = make_grid(8, 8.0, 0.0);
  std::vector<double> v(8, 0.0);
  v[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Field(g, v), std::domain_error);
  EXPECT_THROW(Field(g, std::vector<double>(7, 0.0)), std::invalid_argument);
}

TEST(Field, SpectralRoundTrip) {
  auto g = make_grid(512, 40.0, -20.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    // Include rough content up to Nyquist.
    std::mt19937_64 rng(s);
    std::normal_distribution<double> nd;
    std::vector<double> v(g->n_points());
    for (double& x : v) x = nd(rng);
    const Field f(g, v);
    const Field back = Field::from_spectrum(g, f.spectrum());
    const double tol = 10 * std::numeric_limits<double>::epsilon() * g->n_points();
    EXPECT_LT(l2_distance(f, back) / l2_norm(f), tol);
  }
}

TEST(Derivative, BandLimitedExamples) {
  auto g = make_grid(256, 2 * kPi, 0.0);
  const Field s = Field::from_function(g, [](double x) { return std::sin(x); });
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  EXPECT_LT(max_abs_diff(derivative(s, 1), c), 1e-12);

  const Field one = Field::constant(g, 3.5);
  for (int order = 1; order <= 3; ++order) EXPECT_LT(derivative(one, order).max_abs(), 1e-12);

  const Field s3 = Field::from_function(g, [](double x) { return std::sin(3 * x); });
  // Roundoff in high modes is amplified by k^order (k_max = 128 here).
  EXPECT_LT(max_abs_diff(derivative(s3, 2), s3 * -9.0), 1e-10);
  EXPECT_LT(max_abs_diff(derivative(s3, 3), Field::from_function(g, [](double x) { return -27 * std::cos(3 * x); })),
            1e-8);
}

TEST(Derivative, RejectsOrder) {
  auto g = make_grid(16, 1.0, 0.0);
  const Field f = Field::zeros(g);
  EXPECT_THROW(derivative(f, 0), std::invalid_argument);
  EXPECT_THROW(derivative(f, 4), std::invalid_argument);
}

TEST(Derivative, NyquistConvention) {
  auto g = make_grid(16, 2 * kPi, 0.0);
  // Pure Nyquist mode: (-1)^j.
  std::vector<double> v(16);
  for (std::size_t j = 0; j < 16; ++j) v[j] = j % 2 == 0 ? 1.0 : -1.0;
  const Field nyq(g, v);
  EXPECT_LT(derivative(nyq, 1).max_abs(), 1e-13);
  EXPECT_LT(derivative(nyq, 3).max_abs(), 1e-11);
  // Even order keeps it: second derivative is -k_N^2 times the mode, k_N = 8.
  EXPECT_LT(max_abs_diff(derivative(nyq, 2), nyq * -64.0), 1e-11);
}

TEST(BesselInverse, Eigenfunctions) {
  auto g = make_grid(128, 2 * kPi, -kPi);
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  EXPECT_LT(max_abs_diff(bessel_inverse(c), c * 0.5), 1e-14);
  const Field one = Field::constant(g, 1.0);
  EXPECT_LT(max_abs_diff(bessel_inverse(one), one), 1e-14);
}

TEST(BesselInverse, MatchesGreenOracleOnSech2) {
  auto g = make_grid(2048, 80.0, -40.0);
  const Field f = Field::from_function(g, [](double x) { return sech2(x); });
  const Field spectral = bessel_inverse(f);
  const Field oracle = green_convolution_oracle(f);
  EXPECT_LT(l2_distance(spectral, oracle) / l2_norm(oracle), 1e-8);
}

TEST(BesselInverse, InvertsOneMinusSecondDerivative) {
  auto g = make_grid(512, 60.0, -30.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Field f = random_trial_field(g, 11, s, 0.0);
    const Field lf = f - derivative(f, 2);
    EXPECT_LT(l2_distance(bessel_inverse(lf), f) / l2_norm(f), 1e-10);
  }
}

TEST(BesselInverse, CommutesWithDerivative) {
  auto g = make_grid(256, 30.0, -15.0);
  const Field f = random_trial_field(g, 5, 0, 4.0);
  EXPECT_LT(l2_distance(bessel_inverse(derivative(f, 1)), derivative(bessel_inverse(f), 1)), 1e-13);
}

TEST(GreenOracle, SpikeReproducesKernel) {
  auto g = make_grid(1024, 64.0, -32.0);
  const std::size_t j0 = 512;
  std::vector<double> v(g->n_points(), 0.0);
  v[j0] = 1.0 / g->spacing();
  const Field out = green_convolution_oracle(Field(g, v));
  // Away from the spike the interpolated delta integrates to exactly one node weight.
  for (std::size_t j = 0; j < g->n_points(); ++j) {
    const double d = std::abs(g->x(j) - g->x(j0));
    if (d < 8 * g->spacing()) continue;
    EXPECT_NEAR(out[j], 0.5 * std::exp(-d), 1e-6) << "at x=" << g->x(j);
  }
}

TEST(GreenOracle, ConstantMapsToConstant) {
  auto g = make_grid(512, 64.0, 0.0);
  const Field out = green_convolution_oracle(Field::constant(g, 1.0));
  for (double v : out.values()) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_TRUE(green_tail_negligible(*g));
  EXPECT_FALSE(green_tail_negligible(*make_grid(64, 20.0, 0.0)));
}

TEST(GreenOracle, AgreesWithSpectralInverseOnRandomFields) {
  auto g = make_grid(1024, 64.0, -32.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Field f = random_trial_field(g, 99, s, 0.0);
    const Field oracle = green_convolution_oracle(f);
    EXPECT_LT(l2_distance(bessel_inverse(f), oracle) / l2_norm(oracle), 1e-8);
  }
}

TEST(WeightedIntegral, Examples) {
  auto g = make_grid(256, 2 * kPi, 0.0);
  const Field one = Field::constant(g, 1.0);
  const Field s = Field::from_function(g, [](double x) { return std::sin(x); });
  EXPECT_NEAR(weighted_integral(one, s), 0.0, 1e-12);
  EXPECT_NEAR(weighted_integral(one, s, s), kPi, 1e-10);

  auto big = make_grid(2048, 80.0, -40.0);
  const Field w = Field::from_function(big, [](double x) { return sech2(x); });
  EXPECT_NEAR(weighted_integral(w, Field::constant(big, 1.0)), 2.0, 1e-10);
}

TEST(WeightedIntegral, GridMismatchIsRejected) {
  auto a = make_grid(16, 1.0, 0.0);
  auto b = make_grid(16, 2.0, 0.0);
  EXPECT_THROW(weighted_integral(Field::zeros(a), Field::zeros(b)), std::invalid_argument);
}

TEST(WeightedIntegral, LinearityAndShiftInvariance) {
  auto g = make_grid(256, 40.0, -20.0);
  const Field w = Field::from_function(g, [](double x) { return sech2(x / 4); });
  const Field f = random_trial_field(g, 3, 0, 5.0);
  const Field h = random_trial_field(g, 3, 1, 5.0);
  const Field k = random_trial_field(g, 3, 2, 5.0);
  EXPECT_NEAR(weighted_integral(w, f * 2.0 + h, k), 2 * weighted_integral(w, f, k) + weighted_integral(w, h, k),
              1e-12);

  auto shift = [](const Field& x, std::size_t by) {
    std::vector<double> v(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) v[(j + by) % x.size()] = x[j];
    return Field(x.grid_ptr(), v);
  };
  EXPECT_NEAR(weighted_integral(shift(w, 37), shift(f, 37), shift(k, 37)), weighted_integral(w, f, k), 1e-13);
}

TEST(WeightedIntegral, DiscreteIntegrationByParts) {
  auto g = make_grid(512, 50.0, -25.0);
  const Field one = Field::constant(g, 1.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Field f = random_trial_field(g, 21, 2 * s, 0.0);
    const Field h = random_trial_field(g, 21, 2 * s + 1, 0.0);
    EXPECT_NEAR(weighted_integral(one, derivative(f, 1), h), -weighted_integral(one, f, derivative(h, 1)), 1e-10);
  }
}

TEST(Dealias, Examples) {
  auto g = make_grid(32, 2 * kPi, 0.0);
  const Field low = Field::from_function(g, [](double x) { return std::cos(2 * x) + std::sin(5 * x); });
  EXPECT_LT(max_abs_diff(dealias(low), low), 1e-14);

  std::vector<double> v(32);
  for (std::size_t j = 0; j < 32; ++j) v[j] = j % 2 == 0 ? 1.0 : -1.0;
  EXPECT_LT(dealias(Field(g, v)).max_abs(), 1e-14);

  // sin^3 has modes 1 and 3 (retained); the added mode 14 lies above 2/3 * 16.
  const Field cube = Field::from_function(g, [](double x) { return std::pow(std::sin(x), 3); });
  const Field high = Field::from_function(g, [](double x) { return std::sin(14 * x); });
  const Spectrum before = (cube + high).spectrum();
  const Spectrum after = dealias(cube + high).spectrum();
  for (std::size_t m = 0; m < after.size(); ++m) {
    if (m <= 10) {
      EXPECT_NEAR(std::abs(after[m] - before[m]), 0.0, 1e-15);
    } else {
      EXPECT_NEAR(std::abs(after[m]), 0.0, 1e-15);
    }
  }
  EXPECT_NEAR(std::abs(after[14]), 0.0, 1e-15);
  EXPECT_GT(std::abs(before[14]), 0.4);
  EXPECT_THROW(dealias(low, 0.0), std::invalid_argument);
  EXPECT_THROW(dealias(low, 1.5), std::invalid_argument);
}

#pragma once

// Periodic grids, sampled fields and the Fourier multipliers used by the
// solver and the virial machinery. Transforms are delegated to FFTW.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbm {

using Spectrum = std::vector<std::complex<double>>;

/// Uniform periodic grid on [x_min, x_min + domain_length).
class Grid1D {
 public:
  Grid1D(std::size_t n_points, double domain_length, double x_min)
      : n_(n_points), length_(domain_length), x_min_(x_min) {
    if (n_points < 8 || n_points % 2 != 0) {
      throw std::invalid_argument("grid needs an even number of points >= 8, got " +
                                  std::to_string(n_points));
    }
    if (!(domain_length > 0.0) || !std::isfinite(domain_length)) {
      throw std::invalid_argument("grid domain length must be positive and finite");
    }
    if (!std::isfinite(x_min)) {
      throw std::invalid_argument("grid x_min must be finite");
    }
    spacing_ = length_ / static_cast<double>(n_);
    wavenumbers_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      wavenumbers_[j] = 2.0 * std::numbers::pi * static_cast<double>(mode_index(j)) / length_;
    }
  }

  std::size_t n_points() const { return n_; }
  double domain_length() const { return length_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_min_ + length_; }
  double spacing() const { return spacing_; }
  double x(std::size_t j) const { return x_min_ + static_cast<double>(j) * spacing_; }

  /// Signed mode index in FFT order: 0, 1, ..., n/2 (Nyquist), -(n/2-1), ..., -1.
  long mode_index(std::size_t j) const {
    const auto half = static_cast<long>(n_ / 2);
    const auto jj = static_cast<long>(j);
    return jj <= half ? jj : jj - static_cast<long>(n_);
  }
  std::size_t nyquist_index() const { return n_ / 2; }

  /// Full wavenumber array in FFT order.
  std::span<const double> wavenumbers() const { return wavenumbers_; }

  /// Wavenumber of half-spectrum entry m (0 <= m <= n/2).
  double half_wavenumber(std::size_t m) const { return wavenumbers_[m]; }
  std::size_t n_half_modes() const { return n_ / 2 + 1; }

  std::vector<double> coordinates() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
  }

  bool same_as(const Grid1D& other) const {
    return n_ == other.n_ && length_ == other.length_ && x_min_ == other.x_min_;
  }

 private:
  std::size_t n_;
  double length_;
  double x_min_;
  double spacing_ = 0.0;
  std::vector<double> wavenumbers_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

inline GridPtr make_grid(std::size_t n_points, double domain_length, double x_min) {
  return std::make_shared<const Grid1D>(n_points, domain_length, x_min);
}

namespace detail {

// FFTW planning is not thread-safe; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (ptr_ == nullptr) throw std::bad_alloc();
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  ~FftwBuffer() { fftw_free(ptr_); }
  T* data() { return ptr_; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  T* ptr_;
};

struct FftwPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  FftwPlans() = default;
  FftwPlans(const FftwPlans&) = delete;
  FftwPlans& operator=(const FftwPlans&) = delete;
  ~FftwPlans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

// Plans are made with FFTW_ESTIMATE so the chosen algorithm (and hence every
// rounding) is the same on every run.
inline std::shared_ptr<const FftwPlans> plans_for(std::size_t n) {
  // The planner mutex must outlive the cache (plans lock it on destruction).
  std::mutex& planner = fftw_planner_mutex();
  static std::map<std::size_t, std::shared_ptr<const FftwPlans>> cache;
  static std::mutex cache_mutex;
  std::lock_guard<std::mutex> cache_lock(cache_mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  auto plans = std::make_shared<FftwPlans>();
  FftwBuffer<double> real(n);
  FftwBuffer<fftw_complex> cplx(n / 2 + 1);
  {
    std::lock_guard<std::mutex> lock(planner);
    plans->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), cplx.data(),
                                          FFTW_ESTIMATE);
    plans->backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx.data(), real.data(),
                                           FFTW_ESTIMATE);
  }
  if (!plans->forward || !plans->backward) throw std::runtime_error("FFTW planning failed");
  cache.emplace(n, plans);
  return plans;
}

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite value in ") + what);
  }
}

}  // namespace detail

/// Real function sampled on a Grid1D. Values are always finite.
class Field {
 public:
  Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw std::invalid_argument("field requires a grid");
    if (values_.size() != grid_->n_points()) {
      throw std::invalid_argument("field size does not match grid");
    }
    detail::require_finite(values_, "field");
  }

  static Field zeros(GridPtr grid) {
    const auto n = grid->n_points();
    return Field(std::move(grid), std::vector<double>(n, 0.0));
  }
  static Field constant(GridPtr grid, double c) {
    const auto n = grid->n_points();
    return Field(std::move(grid), std::vector<double>(n, c));
  }
  template <class F>
  static Field from_function(GridPtr grid, F&& f) {
    std::vector<double> v(grid->n_points());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid->x(j));
    return Field(std::move(grid), std::move(v));
  }

  const Grid1D& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Half spectrum (n/2+1 entries), normalised so entry m is the Fourier
  /// coefficient of exp(i k_m (x - x_min)).
  Spectrum spectrum() const {
    const std::size_t n = values_.size();
    auto plans = detail::plans_for(n);
    detail::FftwBuffer<double> in(n);
    detail::FftwBuffer<fftw_complex> out(n / 2 + 1);
    std::copy(values_.begin(), values_.end(), in.data());
    fftw_execute_dft_r2c(plans->forward, in.data(), out.data());
    Spectrum s(n / 2 + 1);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t m = 0; m < s.size(); ++m) {
      s[m] = {out.data()[m][0] * scale, out.data()[m][1] * scale};
    }
    return s;
  }

  static Field from_spectrum(GridPtr grid, const Spectrum& s) {
    const std::size_t n = grid->n_points();
    if (s.size() != n / 2 + 1) throw std::invalid_argument("spectrum size does not match grid");
    auto plans = detail::plans_for(n);
    detail::FftwBuffer<fftw_complex> in(n / 2 + 1);
    detail::FftwBuffer<double> out(n);
    for (std::size_t m = 0; m < s.size(); ++m) {
      in.data()[m][0] = s[m].real();
      in.data()[m][1] = s[m].imag();
    }
    // A real signal has real zero and Nyquist coefficients.
    in.data()[0][1] = 0.0;
    in.data()[n / 2][1] = 0.0;
    fftw_execute_dft_c2r(plans->backward, in.data(), out.data());
    return Field(std::move(grid), std::vector<double>(out.data(), out.data() + n));
  }

  Field& operator+=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
    detail::require_finite(values_, "field sum");
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
    detail::require_finite(values_, "field difference");
    return *this;
  }
  Field& operator*=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] *= o.values_[j];
    detail::require_finite(values_, "field product");
    return *this;
  }
  Field& operator*=(double c) {
    for (double& v : values_) v *= c;
    detail::require_finite(values_, "scaled field");
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, const Field& b) { return a *= b; }
  friend Field operator*(Field a, double c) { return a *= c; }
  friend Field operator*(double c, Field a) { return a *= c; }

  /// Pointwise map.
  template <class F>
  Field map(F&& f) const {
    std::vector<double> v(values_.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(values_[j]);
    return Field(grid_, std::move(v));
  }

  void check_same_grid(const Field& o) const {
    if (!grid_->same_as(*o.grid_)) throw std::invalid_argument("fields live on different grids");
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Applies a Fourier multiplier. `symbol(k, m)` receives the wavenumber and
/// the half-spectrum index and returns the complex factor for that mode.
template <class Symbol>
Field apply_multiplier(const Field& f, Symbol&& symbol) {
  Spectrum s = f.spectrum();
  const Grid1D& g = f.grid();
  for (std::size_t m = 0; m < s.size(); ++m) s[m] *= symbol(g.half_wavenumber(m), m);
  return Field::from_spectrum(f.grid_ptr(), s);
}

/// Spectral derivative of order 1..3. The Nyquist mode is dropped for odd
/// orders and kept for even orders.
inline Field derivative(const Field& f, int order) {
  if (order < 1 || order > 3) {
    throw std::invalid_argument("derivative order must be 1, 2 or 3, got " + std::to_string(order));
  }
  const std::size_t nyq = f.grid().nyquist_index();
  return apply_multiplier(f, [&](double k, std::size_t m) -> std::complex<double> {
    if (order % 2 == 1 && m == nyq) return 0.0;
    const std::complex<double> ik(0.0, k);
    std::complex<double> r = ik;
    for (int i = 1; i < order; ++i) r *= ik;
    return r;
  });
}

/// (1 - d^2/dx^2)^{-1}: the multiplier 1/(1+k^2).
inline Field bessel_inverse(const Field& f) {
  return apply_multiplier(f, [](double k, std::size_t) -> std::complex<double> {
    return 1.0 / (1.0 + k * k);
  });
}

/// Zeroes every mode with |m| > fraction * n/2.
inline Field dealias(const Field& f, double fraction = 2.0 / 3.0) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("dealias fraction must lie in (0, 1]");
  }
  const double cutoff = fraction * static_cast<double>(f.grid().n_points() / 2);
  return apply_multiplier(f, [cutoff](double, std::size_t m) -> std::complex<double> {
    return static_cast<double>(m) > cutoff ? 0.0 : 1.0;
  });
}

/// Periodic rectangle rule for  spacing * sum_j w_j * prod_i factors_i[j].
template <class... Factors>
double weighted_integral(const Field& w, const Factors&... factors) {
  static_assert(sizeof...(Factors) >= 1 && sizeof...(Factors) <= 4,
                "weighted_integral takes between one and four factors");
  (w.check_same_grid(factors), ...);
  const std::size_t n = w.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += w[j] * (factors[j] * ...);
  return w.grid().spacing() * sum;
}

/// Integral of a single field.
inline double integral(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return f.grid().spacing() * sum;
}

/// Discrete L2 norm sqrt(spacing * sum f^2).
inline double l2_norm(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v * v;
  return std::sqrt(f.grid().spacing() * sum);
}

inline double l2_distance(const Field& a, const Field& b) {
  a.check_same_grid(b);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return std::sqrt(a.grid().spacing() * sum);
}

/// Integer power with repeated multiplication (bit-reproducible, unlike pow).
inline double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

inline Field power(const Field& f, int p) {
  return f.map([p](double v) { return ipow(v, p); });
}

}  // namespace bbm

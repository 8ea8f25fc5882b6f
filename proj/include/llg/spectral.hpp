#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "llg/error.hpp"
#include "llg/field.hpp"
#include "llg/grid.hpp"

namespace llg {

/// Fourier coefficients f^_k = sum_j f_j exp(-i k.x_j) of a field (unnormalized forward DFT).
class Spectrum {
 public:
  explicit Spectrum(const GridSpec& g) : grid_(g), modes_(g.size()) {}

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return modes_.size(); }
  cplx& operator[](std::size_t i) { return modes_[i]; }
  const cplx& operator[](std::size_t i) const { return modes_[i]; }
  std::span<cplx> modes() { return modes_; }
  std::span<const cplx> modes() const { return modes_; }

 private:
  GridSpec grid_;
  std::vector<cplx> modes_;
};

namespace detail {
// The FFTW planner is not thread-safe; plan creation and destruction go through this lock.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Transform plans and cached wavenumbers for one grid. Instances are per-thread
/// (see spectral::workspace) because the scratch buffer is mutated by transforms.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const GridSpec& g) : grid_(g) {
    const std::size_t n = g.size();
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buffer_ == nullptr) throw Error(ErrorKind::InvalidArgument, "FFT buffer allocation failed");
    std::array<int, 3> dims{g.points, g.points, g.points};
    {
      std::lock_guard lock(detail::planner_mutex());
      forward_ = fftw_plan_dft(g.dimension, dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft(g.dimension, dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    const double k0 = 2.0 * std::numbers::pi / g.length;
    const int cutoff = g.points / 3;
    for (int a = 0; a < 3; ++a) derivative_k_[a].assign(a < g.dimension ? n : 0, 0.0);
    k_squared_.assign(n, 0.0);
    dealias_mask_.assign(n, 1);
    for (std::size_t idx = 0; idx < n; ++idx) {
      auto ijk = g.unflatten(idx);
      double k2 = 0.0;
      for (int a = 0; a < g.dimension; ++a) {
        int m = g.frequency(ijk[a]);
        double k = k0 * m;
        k2 += k * k;
        // Odd derivatives drop the Nyquist mode so real input stays real.
        derivative_k_[a][idx] = (ijk[a] == g.points / 2) ? 0.0 : k;
        if (std::abs(m) > cutoff) dealias_mask_[idx] = 0;
      }
      k_squared_[idx] = k2;
    }
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  ~SpectralWorkspace() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  const GridSpec& grid() const { return grid_; }

  void forward(std::span<const cplx> in, std::span<cplx> out) {
    load(in);
    fftw_execute(forward_);
    store(out, 1.0);
  }

  /// Normalized inverse: inverse(forward(f)) == f.
  void inverse(std::span<const cplx> in, std::span<cplx> out) {
    load(in);
    fftw_execute(backward_);
    store(out, 1.0 / static_cast<double>(grid_.size()));
  }

  std::span<const double> derivative_wavenumber(int axis) const { return derivative_k_[axis]; }
  std::span<const double> wavenumber_squared() const { return k_squared_; }
  std::span<const std::uint8_t> dealias_mask() const { return dealias_mask_; }

 private:
  void load(std::span<const cplx> in) {
    require(in.size() == grid_.size(), "transform size mismatch");
    auto* dst = reinterpret_cast<cplx*>(buffer_);
    std::copy(in.begin(), in.end(), dst);
  }
  void store(std::span<cplx> out, double scale) {
    require(out.size() == grid_.size(), "transform size mismatch");
    const auto* src = reinterpret_cast<const cplx*>(buffer_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i] * scale;
  }

  GridSpec grid_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::array<std::vector<double>, 3> derivative_k_;
  std::vector<double> k_squared_;
  std::vector<std::uint8_t> dealias_mask_;
};

namespace spectral {

/// Per-thread workspace for a grid, created on first use.
inline SpectralWorkspace& workspace(const GridSpec& g) {
  thread_local std::vector<std::unique_ptr<SpectralWorkspace>> cache;
  for (auto& w : cache)
    if (w->grid() == g) return *w;
  constexpr std::size_t kMaxCached = 8;
  if (cache.size() >= kMaxCached) cache.erase(cache.begin());
  cache.push_back(std::make_unique<SpectralWorkspace>(g));
  return *cache.back();
}

inline Spectrum forward(const ComplexField& f) {
  require_finite(f, "forward transform");
  Spectrum s(f.grid());
  workspace(f.grid()).forward(f.values(), s.modes());
  return s;
}

inline Spectrum forward(const RealField& f) { return forward(to_complex(f)); }

inline ComplexField inverse_complex(const Spectrum& s) {
  ComplexField out(s.grid());
  workspace(s.grid()).inverse(s.modes(), out.values());
  return out;
}

inline RealField inverse_real(const Spectrum& s) { return real_part(inverse_complex(s)); }

/// Multiplies a spectrum by i k_axis.
inline Spectrum differentiate(const Spectrum& s, int axis) {
  require(axis >= 0 && axis < s.grid().dimension, "derivative axis out of range");
  auto k = workspace(s.grid()).derivative_wavenumber(axis);
  Spectrum out(s.grid());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = cplx(0.0, k[i]) * s[i];
  return out;
}

inline Spectrum apply_laplacian(const Spectrum& s) {
  auto k2 = workspace(s.grid()).wavenumber_squared();
  Spectrum out(s.grid());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = -k2[i] * s[i];
  return out;
}

inline void truncate(Spectrum& s) {
  auto mask = workspace(s.grid()).dealias_mask();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!mask[i]) s[i] = 0.0;
}

inline RealField partial(const RealField& f, int axis) { return inverse_real(differentiate(forward(f), axis)); }
inline ComplexField partial(const ComplexField& f, int axis) {
  return inverse_complex(differentiate(forward(f), axis));
}

/// Spectral gradient; component j is the inverse transform of i k_j f^.
inline RealVectorField gradient(const RealField& f) {
  Spectrum s = forward(f);
  RealVectorField out;
  out.reserve(f.grid().dimension);
  for (int a = 0; a < f.grid().dimension; ++a) out.push_back(inverse_real(differentiate(s, a)));
  return out;
}

inline ComplexVectorField gradient(const ComplexField& f) {
  Spectrum s = forward(f);
  ComplexVectorField out;
  out.reserve(f.grid().dimension);
  for (int a = 0; a < f.grid().dimension; ++a) out.push_back(inverse_complex(differentiate(s, a)));
  return out;
}

inline RealField laplacian(const RealField& f) { return inverse_real(apply_laplacian(forward(f))); }
inline ComplexField laplacian(const ComplexField& f) { return inverse_complex(apply_laplacian(forward(f))); }

namespace detail {
template <class T>
Spectrum divergence_spectrum(const std::vector<Field<T>>& v) {
  const GridSpec& g = common_grid(v);
  require(static_cast<int>(v.size()) == g.dimension, "divergence needs one component per axis");
  Spectrum acc(g);
  for (int a = 0; a < g.dimension; ++a) {
    Spectrum d = differentiate(forward(v[a]), a);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  return acc;
}
}  // namespace detail

inline RealField divergence(const RealVectorField& v) { return inverse_real(detail::divergence_spectrum(v)); }
inline ComplexField divergence(const ComplexVectorField& v) {
  return inverse_complex(detail::divergence_spectrum(v));
}

/// Mean-zero solution v of -Lap v = div f on the torus (zero mode pinned to 0).
/// The symbol is that of div(grad), so div(f + grad v) vanishes exactly; it
/// differs from the Laplacian only on modes carrying a Nyquist index, where
/// div f is already partial.
inline RealField solve_poisson_div(const RealVectorField& f) {
  require_finite(f, "solve_poisson_div");
  Spectrum s = detail::divergence_spectrum(f);
  auto& ws = workspace(s.grid());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double k2 = 0.0;
    for (int a = 0; a < s.grid().dimension; ++a) k2 += ws.derivative_wavenumber(a)[i] * ws.derivative_wavenumber(a)[i];
    s[i] = k2 > 0.0 ? s[i] / k2 : cplx(0.0);
  }
  return inverse_real(s);
}

/// Mean-zero solution of -Lap v = g.
inline RealField solve_poisson(const RealField& g) {
  Spectrum s = forward(g);
  auto k2 = workspace(s.grid()).wavenumber_squared();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = k2[i] > 0.0 ? s[i] / k2[i] : cplx(0.0);
  return inverse_real(s);
}

/// 2/3-rule truncation of a pointwise product.
inline RealField dealias(const RealField& f) {
  Spectrum s = forward(f);
  truncate(s);
  return inverse_real(s);
}
inline ComplexField dealias(const ComplexField& f) {
  Spectrum s = forward(f);
  truncate(s);
  return inverse_complex(s);
}

/// In-place multiplication by exp((i - lambda)|k|^2 t).
inline void apply_semigroup(Spectrum& s, double t, double lambda) {
  require(t >= 0.0, "semigroup time must be non-negative", ErrorKind::InvalidArgument);
  require(lambda > 0.0, "damping must be positive");
  if (t == 0.0) return;
  auto k2 = workspace(s.grid()).wavenumber_squared();
  const cplx rate(-lambda, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::exp(rate * (k2[i] * t));
}

/// Dissipative Schroedinger semigroup S(t) = exp(t (lambda - i) Lap).
inline ComplexField semigroup_apply(const ComplexField& f, double t, double lambda) {
  require(t >= 0.0, "semigroup time must be non-negative");
  require(lambda > 0.0, "damping must be positive");
  if (t == 0.0) {
    require_finite(f, "semigroup_apply");
    return f;
  }
  Spectrum s = forward(f);
  apply_semigroup(s, t, lambda);
  return inverse_complex(s);
}

inline ComplexVectorField semigroup_apply(const ComplexVectorField& f, double t, double lambda) {
  ComplexVectorField out;
  out.reserve(f.size());
  for (const auto& c : f) out.push_back(semigroup_apply(c, t, lambda));
  return out;
}

/// (sum |f|^p h^n)^(1/p) for a non-negative magnitude field; p = inf gives the max.
inline double lp_norm_of_magnitude(const RealField& mag, double p) {
  require(p >= 1.0, "Lp exponent must be >= 1");
  require_finite(mag, "lp_norm");
  double peak = 0.0;
  for (double v : mag) peak = std::max(peak, std::abs(v));
  if (std::isinf(p) || peak == 0.0) return peak;
  double s = 0.0;
  for (double v : mag) s += std::pow(std::abs(v) / peak, p);
  return peak * std::pow(s * mag.grid().cell_volume(), 1.0 / p);
}

inline double lp_norm(const RealField& f, double p) { return lp_norm_of_magnitude(magnitude(f), p); }
inline double lp_norm(const ComplexField& f, double p) { return lp_norm_of_magnitude(magnitude(f), p); }
template <class T>
double lp_norm(const std::vector<Field<T>>& v, double p) {
  return lp_norm_of_magnitude(magnitude(v), p);
}

namespace detail {
inline double sobolev_sum(const Spectrum& s, int sigma) {
  auto k2 = workspace(s.grid()).wavenumber_squared();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::pow(1.0 + k2[i], sigma) * std::norm(s[i]);
  const double n = static_cast<double>(s.grid().size());
  return acc * s.grid().cell_volume() / n;
}
}  // namespace detail

/// H^sigma norm (sum (1 + |k|^2)^sigma |f^|^2)^(1/2), scaled so sigma = 0 is the L2 norm.
template <class T>
double sobolev_norm(const Field<T>& f, int sigma) {
  require(sigma >= 0, "Sobolev order must be >= 0");
  return std::sqrt(detail::sobolev_sum(forward(f), sigma));
}

template <class T>
double sobolev_norm(const std::vector<Field<T>>& v, int sigma) {
  require(sigma >= 0, "Sobolev order must be >= 0");
  double acc = 0.0;
  for (const auto& c : v) acc += detail::sobolev_sum(forward(c), sigma);
  return std::sqrt(acc);
}

}  // namespace spectral
}  // namespace llg

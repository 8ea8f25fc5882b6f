#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "llg/error.hpp"
#include "llg/grid.hpp"

namespace llg {

using cplx = std::complex<double>;

/// Value-semantic array of samples on a periodic grid.
template <class T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  explicit Field(const GridSpec& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}
  Field(const GridSpec& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
    require(values_.size() == grid_.size(), "field value count does not match grid");
  }

  template <class F>
  static Field sample(const GridSpec& grid, F&& fn) {
    Field out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] = fn(grid.position(i));
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) {
      if constexpr (std::is_same_v<T, cplx>) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      } else {
        return std::isfinite(v);
      }
    });
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(T s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, T s) { return a *= s; }
  friend Field operator*(T s, Field a) { return a *= s; }

  /// this += s * o
  void axpy(T s, const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += s * o.values_[i];
  }

 private:
  void check_same(const Field& o) const {
    require(grid_ == o.grid_, "field operands live on different grids");
  }

  GridSpec grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// Multi-component fields: 3 components for spins, n components for gradients.
using RealVectorField = std::vector<RealField>;
using ComplexVectorField = std::vector<ComplexField>;

inline RealVectorField make_real_vector(const GridSpec& g, std::size_t components) {
  return RealVectorField(components, RealField(g));
}
inline ComplexVectorField make_complex_vector(const GridSpec& g, std::size_t components) {
  return ComplexVectorField(components, ComplexField(g));
}

inline std::array<double, 3> at3(const RealVectorField& v, std::size_t i) {
  return {v[0][i], v[1][i], v[2][i]};
}
inline void set3(RealVectorField& v, std::size_t i, const std::array<double, 3>& x) {
  v[0][i] = x[0];
  v[1][i] = x[1];
  v[2][i] = x[2];
}

inline double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm3(const std::array<double, 3>& a) { return std::sqrt(dot3(a, a)); }

template <class T>
void require_finite(const Field<T>& f, const char* where) {
  if (!f.all_finite()) throw Error(ErrorKind::NonFinite, std::string(where) + ": non-finite field entry");
}
template <class T>
void require_finite(const std::vector<Field<T>>& v, const char* where) {
  for (const auto& f : v) require_finite(f, where);
}

template <class T>
const GridSpec& common_grid(const std::vector<Field<T>>& v) {
  require(!v.empty(), "empty vector field");
  for (const auto& f : v) require(f.grid() == v.front().grid(), "vector components on different grids");
  return v.front().grid();
}

/// Pointwise Euclidean magnitude of a (real or complex) vector field.
template <class T>
RealField magnitude(const std::vector<Field<T>>& v) {
  const GridSpec& g = common_grid(v);
  RealField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c[i]);
    out[i] = std::sqrt(s);
  }
  return out;
}

inline RealField magnitude(const RealField& f) {
  RealField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::abs(f[i]);
  return out;
}
inline RealField magnitude(const ComplexField& f) {
  RealField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::abs(f[i]);
  return out;
}

inline double max_abs(const RealField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}
template <class T>
double max_magnitude(const std::vector<Field<T>>& v) {
  return max_abs(magnitude(v));
}
inline double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (const cplx& v : f) m = std::max(m, std::abs(v));
  return m;
}

inline double mean(const RealField& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(f.size());
}
inline cplx mean(const ComplexField& f) {
  cplx s = 0.0;
  for (const cplx& v : f) s += v;
  return s / static_cast<double>(f.size());
}

inline ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
  return out;
}
inline RealField real_part(const ComplexField& f) {
  RealField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real();
  return out;
}
inline RealField imag_part(const ComplexField& f) {
  RealField out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].imag();
  return out;
}

template <class T>
std::vector<Field<T>> operator-(const std::vector<Field<T>>& a, const std::vector<Field<T>>& b) {
  require(a.size() == b.size(), "component count mismatch");
  std::vector<Field<T>> out = a;
  for (std::size_t c = 0; c < a.size(); ++c) out[c] -= b[c];
  return out;
}
template <class T>
std::vector<Field<T>> operator+(const std::vector<Field<T>>& a, const std::vector<Field<T>>& b) {
  require(a.size() == b.size(), "component count mismatch");
  std::vector<Field<T>> out = a;
  for (std::size_t c = 0; c < a.size(); ++c) out[c] += b[c];
  return out;
}
template <class T>
std::vector<Field<T>> scaled(std::vector<Field<T>> a, T s) {
  for (auto& c : a) c *= s;
  return a;
}

}  // namespace llg

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "llg/error.hpp"

namespace llg {

/// Periodic box [0, L)^n sampled with N points per axis.
struct GridSpec {
  static constexpr std::size_t kDefaultPointBudget = std::size_t{1} << 24;

  int dimension = 1;
  int points = 8;
  double length = 1.0;

  GridSpec() = default;

  GridSpec(int n, int N, double L, std::size_t point_budget = kDefaultPointBudget)
      : dimension(n), points(N), length(L) {
    require(n >= 1 && n <= 3, "grid dimension must be 1, 2 or 3, got " + std::to_string(n));
    require(N >= 8 && N % 2 == 0, "points per axis must be even and >= 8, got " + std::to_string(N));
    require(std::isfinite(L) && L > 0.0, "box length must be positive");
    double total = std::pow(static_cast<double>(N), n);
    require(total <= static_cast<double>(point_budget),
            "grid of " + std::to_string(static_cast<long long>(total)) +
                " points exceeds the memory budget of " + std::to_string(point_budget));
  }

  double spacing() const { return length / points; }
  double cell_volume() const { return std::pow(spacing(), dimension); }
  double volume() const { return std::pow(length, dimension); }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dimension; ++a) s *= static_cast<std::size_t>(points);
    return s;
  }

  /// Extent per axis, with unused axes collapsed to 1 (row-major, axis 0 slowest).
  std::array<int, 3> shape() const {
    std::array<int, 3> s{1, 1, 1};
    for (int a = 0; a < dimension; ++a) s[a] = points;
    return s;
  }

  std::array<int, 3> unflatten(std::size_t idx) const {
    std::array<int, 3> out{0, 0, 0};
    for (int a = dimension - 1; a >= 0; --a) {
      out[a] = static_cast<int>(idx % points);
      idx /= points;
    }
    return out;
  }

  std::size_t flatten(std::array<int, 3> ijk) const {
    std::size_t idx = 0;
    for (int a = 0; a < dimension; ++a) {
      int i = ((ijk[a] % points) + points) % points;
      idx = idx * points + static_cast<std::size_t>(i);
    }
    return idx;
  }

  /// Physical coordinates of a grid point; unused axes are 0.
  std::array<double, 3> position(std::size_t idx) const {
    auto ijk = unflatten(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dimension; ++a) x[a] = ijk[a] * spacing();
    return x;
  }

  /// Signed integer frequency of index i along an axis: 0..N/2-1, -N/2..-1.
  int frequency(int i) const { return i < points / 2 ? i : i - points; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dimension == b.dimension && a.points == b.points && a.length == b.length;
  }
};

/// Minimum-image displacement x - y on the periodic box.
inline std::array<double, 3> periodic_displacement(const GridSpec& g, std::array<double, 3> x,
                                                   std::array<double, 3> y) {
  std::array<double, 3> d{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dimension; ++a) {
    double v = x[a] - y[a];
    v -= g.length * std::round(v / g.length);
    d[a] = v;
  }
  return d;
}

}  // namespace llg

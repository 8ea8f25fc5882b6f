#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llg/error.hpp"
#include "llg/field.hpp"
#include "llg/spectral.hpp"

namespace llg {

struct NonlinearitySplit {
  ComplexVectorField f1;
  ComplexVectorField f2;
  ComplexVectorField f3;

  ComplexVectorField total() const {
    ComplexVectorField out = f1;
    for (std::size_t l = 0; l < out.size(); ++l) {
      out[l] += f2[l];
      out[l] += f3[l];
    }
    return out;
  }
};

struct A0Decomposition {
  RealField a0_1;
  RealField a0_2;

  RealField total() const { return a0_1 + a0_2; }
};

namespace detail {

inline RealField maybe_dealias(RealField f, bool dealias) { return dealias ? spectral::dealias(f) : f; }
inline ComplexField maybe_dealias(ComplexField f, bool dealias) { return dealias ? spectral::dealias(f) : f; }

inline std::size_t check_derived(const ComplexVectorField& u) {
  require(!u.empty(), "derived field has no components");
  const GridSpec& g = common_grid(u);
  require(static_cast<int>(u.size()) == g.dimension, "derived field needs one component per axis");
  require_finite(u, "derived field");
  return u.size();
}

}  // namespace detail

/// Coulomb-gauge connection of u: -Lap a_l = sum_k d_k Im(u_l conj(u_k)), mean zero.
inline RealVectorField connection_from_u(const ComplexVectorField& u, bool dealias = true) {
  const std::size_t n = detail::check_derived(u);
  const GridSpec& g = u.front().grid();
  RealVectorField a;
  for (std::size_t l = 0; l < n; ++l) {
    RealVectorField source = make_real_vector(g, n);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == l) continue;
      for (std::size_t i = 0; i < g.size(); ++i) source[k][i] = (u[l][i] * std::conj(u[k][i])).imag();
      source[k] = detail::maybe_dealias(std::move(source[k]), dealias);
    }
    a.push_back(spectral::solve_poisson_div(source));
  }
  return a;
}

/// a0 = a0_1 + a0_2 with
///   -Lap a0_1 = div(lambda Im(conj(u) div u) - Re(conj(u) div u)),
///   -Lap a0_2 = div(lambda Re(conj(u) (a.u)) + Im(conj(u) (a.u))).
inline A0Decomposition a0_decompose(const ComplexVectorField& u, const RealVectorField& a, double lambda,
                                    bool dealias = true) {
  const std::size_t n = detail::check_derived(u);
  require(a.size() == n, "connection and derived field disagree in dimension");
  require(a.front().grid() == u.front().grid(), "connection and derived field live on different grids");
  const GridSpec& g = u.front().grid();
  ComplexField div = spectral::divergence(u);
  ComplexField adotu(g, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) adotu[i] += a[k][i] * u[k][i];
  adotu = detail::maybe_dealias(std::move(adotu), dealias);

  RealVectorField s1 = make_real_vector(g, n), s2 = make_real_vector(g, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      cplx z1 = std::conj(u[k][i]) * div[i];
      cplx z2 = std::conj(u[k][i]) * adotu[i];
      s1[k][i] = lambda * z1.imag() - z1.real();
      s2[k][i] = lambda * z2.real() + z2.imag();
    }
    s1[k] = detail::maybe_dealias(std::move(s1[k]), dealias);
    s2[k] = detail::maybe_dealias(std::move(s2[k]), dealias);
  }
  return {spectral::solve_poisson_div(s1), spectral::solve_poisson_div(s2)};
}

/// Gauged nonlinearity F = f1 + f2 + f3:
///   f1 = (lambda - i) i sum_k Im(u conj(u_k)) u_k
///   f2 = (lambda - i) 2i (a.grad) u - i a0_1 u
///   f3 = -(lambda - i) |a|^2 u - i a0_2 u
inline NonlinearitySplit assemble_F(const ComplexVectorField& u, const RealVectorField& a, const A0Decomposition& a0,
                                    double lambda, bool dealias = true) {
  const std::size_t n = detail::check_derived(u);
  require(a.size() == n, "connection and derived field disagree in dimension");
  const GridSpec& g = u.front().grid();
  const cplx c(lambda, -1.0);
  const cplx I(0.0, 1.0);
  RealField a2(g, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) a2[i] += a[k][i] * a[k][i];
  a2 = detail::maybe_dealias(std::move(a2), dealias);

  NonlinearitySplit out{make_complex_vector(g, n), make_complex_vector(g, n), make_complex_vector(g, n)};
  for (std::size_t l = 0; l < n; ++l) {
    auto grad = spectral::gradient(u[l]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      cplx cubic = 0.0, transport = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        cubic += (u[l][i] * std::conj(u[k][i])).imag() * u[k][i];
        transport += a[k][i] * grad[k][i];
      }
      out.f1[l][i] = c * I * cubic;
      out.f2[l][i] = c * 2.0 * I * transport - I * a0.a0_1[i] * u[l][i];
      out.f3[l][i] = -c * a2[i] * u[l][i] - I * a0.a0_2[i] * u[l][i];
    }
    out.f1[l] = detail::maybe_dealias(std::move(out.f1[l]), dealias);
    out.f2[l] = detail::maybe_dealias(std::move(out.f2[l]), dealias);
    out.f3[l] = detail::maybe_dealias(std::move(out.f3[l]), dealias);
  }
  return out;
}

/// F(a(u), u) with the Coulomb connection and a0 split recomputed from u.
inline NonlinearitySplit nonlinearity_of(const ComplexVectorField& u, double lambda, bool dealias = true) {
  auto a = connection_from_u(u, dealias);
  auto a0 = a0_decompose(u, a, lambda, dealias);
  return assemble_F(u, a, a0, lambda, dealias);
}

namespace detail {

/// phi1(z) = (e^z - 1) / z and phi2(z) = (e^z - 1 - z) / z^2, with series near 0.
inline std::pair<cplx, cplx> phi_functions(cplx z) {
  if (std::abs(z) < 1e-3) {
    cplx p1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    cplx p2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    return {p1, p2};
  }
  cplx ez = std::exp(z);
  return {(ez - 1.0) / z, (ez - 1.0 - z) / (z * z)};
}

inline void check_mesh(const std::vector<double>& times) {
  require(times.size() >= 2, "Duhamel quadrature needs at least two time samples");
  require(times.front() == 0.0, "time mesh must start at 0");
  for (std::size_t j = 1; j < times.size(); ++j) require(times[j] > times[j - 1], "time mesh must be increasing");
}

}  // namespace detail

/// (S * f)(t_j) = int_0^{t_j} S(t_j - s) f(s) ds at every mesh time, with f
/// linearly interpolated between samples and the semigroup integrated exactly
/// per Fourier mode (product trapezoid rule; second order, exact for f
/// piecewise linear in time).
inline std::vector<ComplexVectorField> duhamel_history(const std::vector<ComplexVectorField>& f,
                                                       const std::vector<double>& times, double lambda) {
  detail::check_mesh(times);
  require(f.size() == times.size(), "forcing must be sampled at every mesh time");
  require(lambda > 0.0, "damping must be positive");
  const std::size_t comps = f.front().size();
  const GridSpec& g = common_grid(f.front());
  auto k2 = spectral::workspace(g).wavenumber_squared();
  const cplx rate(-lambda, 1.0);

  std::vector<std::vector<Spectrum>> fh(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    require(f[j].size() == comps, "forcing changes component count across time");
    for (const auto& c : f[j]) fh[j].push_back(spectral::forward(c));
  }

  std::vector<ComplexVectorField> out;
  out.push_back(make_complex_vector(g, comps));
  std::vector<Spectrum> acc(comps, Spectrum(g));
  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    const double dt = times[j + 1] - times[j];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const cplx z = rate * (k2[i] * dt);
      const auto [p1, p2] = detail::phi_functions(z);
      const cplx ez = std::exp(z);
      const cplx w0 = dt * (p1 - p2), w1 = dt * p2;
      for (std::size_t c = 0; c < comps; ++c) acc[c][i] = ez * acc[c][i] + w0 * fh[j][c][i] + w1 * fh[j + 1][c][i];
    }
    ComplexVectorField step;
    for (std::size_t c = 0; c < comps; ++c) step.push_back(spectral::inverse_complex(acc[c]));
    out.push_back(std::move(step));
  }
  return out;
}

/// (S * f)(t) at the final mesh time t = times.back().
inline ComplexVectorField duhamel_convolve(const std::vector<ComplexVectorField>& f, const std::vector<double>& times,
                                           double lambda) {
  return duhamel_history(f, times, lambda).back();
}

/// Time mesh for the mild formulation: uniform spacing t_end / intervals,
/// halved on the first 10% of [0, t_end] where the weights t^{(1-delta)/2} vary fastest.
inline std::vector<double> graded_mesh(double t_end, int intervals) {
  require(t_end > 0.0, "mesh end time must be positive");
  require(intervals >= 1, "mesh needs at least one interval");
  const int coarse_in_head = static_cast<int>(std::lround(0.1 * intervals));
  const double h = t_end / intervals;
  std::vector<double> t{0.0};
  for (int j = 1; j <= 2 * coarse_in_head; ++j) t.push_back(0.5 * h * j);
  for (int j = coarse_in_head + 1; j <= intervals; ++j) t.push_back(j == intervals ? t_end : h * j);
  return t;
}

struct PicardIterate {
  int iteration = 0;
  double sup_difference = 0.0;
  double contraction_ratio = 0.0;  // sup_difference / previous sup_difference (0 for the first)
};

struct PicardOptions {
  double lambda = 1.0;
  int max_iter = 50;
  double tol = 1e-10;
  /// ||u0||_{L^n} must lie below this; disabled when unset.
  std::optional<double> smallness_gate = 0.5;
  bool dealias = true;
  /// Called after every iterate, including the one that triggers a failure.
  std::function<void(const PicardIterate&)> on_iterate;
};

struct PicardResult {
  std::vector<double> times;
  std::vector<ComplexVectorField> u;
  std::vector<PicardIterate> history;
  bool converged = false;

  /// Largest ratio of successive differences, ignoring the first iterate.
  double max_contraction_ratio() const {
    double r = 0.0;
    for (std::size_t i = 1; i < history.size(); ++i) r = std::max(r, history[i].contraction_ratio);
    return r;
  }
};

inline double ln_norm(const ComplexVectorField& u) {
  return spectral::lp_norm(u, static_cast<double>(common_grid(u).dimension));
}

/// Mild solution u(t) = S(t)u0 + (S * F(a(u), u))(t) by Picard iteration from
/// u^(0)(t) = S(t)u0. Stops when sup_j ||u^(m+1)(t_j) - u^(m)(t_j)||_{L^n} < tol.
/// Throws SmallnessGate, NoContraction (differences grow three times in a row or
/// become non-finite) or MaxIterations; the partial history is in the message.
inline PicardResult picard_solve(const ComplexVectorField& u0, const std::vector<double>& mesh,
                                 const PicardOptions& opt) {
  detail::check_derived(u0);
  detail::check_mesh(mesh);
  require(opt.lambda > 0.0, "damping must be positive");
  require(opt.max_iter >= 1, "max_iter must be >= 1");
  require(opt.tol > 0.0, "Picard tolerance must be positive");
  const double size = ln_norm(u0);
  if (opt.smallness_gate && size >= *opt.smallness_gate)
    throw Error(ErrorKind::SmallnessGate, "||u0||_{L^n} = " + std::to_string(size) + " is not below the gate " +
                                              std::to_string(*opt.smallness_gate));

  PicardResult res;
  res.times = mesh;
  std::vector<ComplexVectorField> linear;
  for (double t : mesh) linear.push_back(spectral::semigroup_apply(u0, t, opt.lambda));
  res.u = linear;

  int growth_streak = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    std::vector<ComplexVectorField> forcing;
    forcing.reserve(mesh.size());
    for (const auto& uj : res.u) forcing.push_back(nonlinearity_of(uj, opt.lambda, opt.dealias).total());
    auto integral = duhamel_history(forcing, mesh, opt.lambda);
    double sup_diff = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      ComplexVectorField next = linear[j];
      for (std::size_t c = 0; c < next.size(); ++c) next[c] += integral[j][c];
      finite = finite && std::all_of(next.begin(), next.end(), [](const ComplexField& f) { return f.all_finite(); });
      if (!finite) break;
      ComplexVectorField diff = next;
      for (std::size_t c = 0; c < diff.size(); ++c) diff[c] -= res.u[j][c];
      sup_diff = std::max(sup_diff, ln_norm(diff));
      res.u[j] = std::move(next);
    }
    if (!finite || !std::isfinite(sup_diff)) {
      if (opt.on_iterate) opt.on_iterate({it, INFINITY, INFINITY});
      throw Error(ErrorKind::NoContraction, "Picard iterate " + std::to_string(it) + " became non-finite");
    }
    PicardIterate rec{it, sup_diff, 0.0};
    if (!res.history.empty()) {
      double prev = res.history.back().sup_difference;
      rec.contraction_ratio = prev > 0.0 ? sup_diff / prev : 0.0;
      growth_streak = sup_diff > prev ? growth_streak + 1 : 0;
    }
    res.history.push_back(rec);
    if (opt.on_iterate) opt.on_iterate(rec);
    if (sup_diff < opt.tol) {
      res.converged = true;
      return res;
    }
    if (growth_streak >= 3)
      throw Error(ErrorKind::NoContraction, "Picard differences grew for three consecutive iterates (last " +
                                                std::to_string(sup_diff) + ")");
  }
  throw Error(ErrorKind::MaxIterations, "Picard iteration did not reach tol " + std::to_string(opt.tol) + " in " +
                                            std::to_string(opt.max_iter) + " iterates (last difference " +
                                            std::to_string(res.history.back().sup_difference) + ")");
}

struct NonlinearBoundRatios {
  double f1 = 0.0;    // ||f1||_{n/(3 delta)} / ||u||_{n/delta}^3
  double f2 = 0.0;    // ||f2||_{n/(2 delta)} / (||u||_{n/delta}^2 ||grad u||_n)
  double f3 = 0.0;    // ||f3||_{n/(5 delta - 2)} / ||u||_{n/delta}^5
  double a = 0.0;     // ||a||_{n/(2 delta - 1)} / ||u||_{n/delta}^2
  double a0_1 = 0.0;  // ||a0_1||_{n/delta} / (||u||_{n/delta} ||grad u||_n)
  double a0_2 = 0.0;  // ||a0_2||_{n/(4 delta - 2)} / ||u||_{n/delta}^4

  void merge_max(const NonlinearBoundRatios& o) {
    f1 = std::max(f1, o.f1);
    f2 = std::max(f2, o.f2);
    f3 = std::max(f3, o.f3);
    a = std::max(a, o.a);
    a0_1 = std::max(a0_1, o.a0_1);
    a0_2 = std::max(a0_2, o.a0_2);
  }
};

inline double grad_complex_ln(const ComplexVectorField& u) {
  ComplexVectorField all;
  for (const auto& c : u)
    for (auto& d : spectral::gradient(c)) all.push_back(std::move(d));
  return spectral::lp_norm(all, static_cast<double>(common_grid(u).dimension));
}

/// Left/right ratios of the Lebesgue bounds for the connection, the a0 split and
/// the nonlinearity. All ratios are 0 for u = 0.
inline NonlinearBoundRatios verify_nonlinear_bounds(const ComplexVectorField& u, double delta, double lambda,
                                                    bool dealias = true) {
  if (!(delta > 0.6 && delta < 2.0 / 3.0))
    throw Error(ErrorKind::OutOfRange, "delta must lie in (3/5, 2/3)");
  detail::check_derived(u);
  const double n = static_cast<double>(common_grid(u).dimension);
  const double un = spectral::lp_norm(u, n / delta);
  NonlinearBoundRatios r;
  if (un == 0.0) return r;
  const double gu = grad_complex_ln(u);
  auto a = connection_from_u(u, dealias);
  auto a0 = a0_decompose(u, a, lambda, dealias);
  auto F = assemble_F(u, a, a0, lambda, dealias);
  r.f1 = spectral::lp_norm(F.f1, n / (3 * delta)) / std::pow(un, 3);
  r.f2 = gu > 0.0 ? spectral::lp_norm(F.f2, n / (2 * delta)) / (un * un * gu) : 0.0;
  r.f3 = spectral::lp_norm(F.f3, n / (5 * delta - 2)) / std::pow(un, 5);
  r.a = spectral::lp_norm(a, n / (2 * delta - 1)) / (un * un);
  r.a0_1 = gu > 0.0 ? spectral::lp_norm(a0.a0_1, n / delta) / (un * gu) : 0.0;
  r.a0_2 = spectral::lp_norm(a0.a0_2, n / (4 * delta - 2)) / std::pow(un, 4);
  return r;
}

}  // namespace llg

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>

#include "llg/error.hpp"
#include "llg/field.hpp"
#include "llg/llg_solver.hpp"
#include "llg/spectral.hpp"

namespace llg {

/// Orthonormal tangent pair along m with m = X x Y.
struct TangentFrame {
  RealVectorField X;
  RealVectorField Y;
  Vec3 reference{1.0, 0.0, 0.0};

  const GridSpec& grid() const { return X.front().grid(); }
};

/// Connection coefficients: a0 (time) and a_1..a_n (space).
struct ConnectionField {
  std::optional<RealField> a0;
  RealVectorField a;

  const GridSpec& grid() const { return a.front().grid(); }
};

/// Derivative coefficients u_alpha = <d_alpha m, X> + i <d_alpha m, Y>.
struct DerivedField {
  std::optional<ComplexField> u0;
  ComplexVectorField u;

  const GridSpec& grid() const { return u.front().grid(); }
};

struct GaugePotential {
  RealField theta;
};

/// Unit vector perpendicular to m_inf, taken from the coordinate axis least
/// aligned with it (e1 for m_inf = e3).
inline Vec3 default_reference(const Vec3& m_inf) {
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (std::abs(m_inf[c]) < std::abs(m_inf[best])) best = c;
  Vec3 e{0.0, 0.0, 0.0};
  e[best] = 1.0;
  double p = dot3(e, m_inf);
  for (int c = 0; c < 3; ++c) e[c] -= p * m_inf[c];
  double len = norm3(e);
  for (double& v : e) v /= len;
  return e;
}

inline constexpr double kFrameDegeneracyThreshold = 0.1;

/// X = (e x m) / |e x m|, Y = m x X.
inline TangentFrame construct_frame(const SpinField& s, const Vec3& reference) {
  require(std::abs(norm3(reference) - 1.0) < 1e-12, "frame reference must be a unit vector");
  s.require_unit(1e-6, "construct_frame");
  const GridSpec& g = s.grid();
  TangentFrame f{make_real_vector(g, 3), make_real_vector(g, 3), reference};
  double worst = INFINITY;
  std::size_t worst_index = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 m = s.at(i);
    Vec3 w = cross3(reference, m);
    double len = norm3(w);
    if (len < worst) {
      worst = len;
      worst_index = i;
    }
    if (len <= kFrameDegeneracyThreshold) continue;
    Vec3 X{w[0] / len, w[1] / len, w[2] / len};
    set3(f.X, i, X);
    set3(f.Y, i, cross3(m, X));
  }
  if (worst <= kFrameDegeneracyThreshold) {
    auto ijk = g.unflatten(worst_index);
    throw Error(ErrorKind::FrameDegenerate, "|e x m| = " + std::to_string(worst) + " <= " +
                                                std::to_string(kFrameDegeneracyThreshold) + " at grid index (" +
                                                std::to_string(ijk[0]) + ", " + std::to_string(ijk[1]) + ", " +
                                                std::to_string(ijk[2]) + ")");
  }
  return f;
}

struct FrameDefects {
  double norm = 0.0;        // max ||X| - 1|, ||Y| - 1|
  double orthogonal = 0.0;  // max |<X,m>|, |<Y,m>|, |<X,Y>|
  double product = 0.0;     // max |X x Y - m|
};

inline FrameDefects frame_defects(const SpinField& s, const TangentFrame& f) {
  require(f.grid() == s.grid(), "frame and spin field live on different grids");
  FrameDefects d;
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    Vec3 m = s.at(i), X = at3(f.X, i), Y = at3(f.Y, i);
    d.norm = std::max({d.norm, std::abs(norm3(X) - 1.0), std::abs(norm3(Y) - 1.0)});
    d.orthogonal = std::max({d.orthogonal, std::abs(dot3(X, m)), std::abs(dot3(Y, m)), std::abs(dot3(X, Y))});
    Vec3 p = cross3(X, Y);
    d.product = std::max(d.product, norm3({p[0] - m[0], p[1] - m[1], p[2] - m[2]}));
  }
  return d;
}

namespace detail {
inline std::vector<RealVectorField> vector_partials(const RealVectorField& v) {
  const int n = common_grid(v).dimension;
  std::vector<RealVectorField> out(n);
  for (const auto& comp : v) {
    auto grad = spectral::gradient(comp);
    for (int k = 0; k < n; ++k) out[k].push_back(std::move(grad[k]));
  }
  return out;
}
}  // namespace detail

/// Spatial a_k = <d_k X, Y>, u_k = <d_k m, X> + i <d_k m, Y>, and the time
/// components obtained by the chain rule through d_t m = rhs_llg(m):
/// a0 = <e x d_t m, Y> / |e x m|, u0 = <d_t m, X> + i <d_t m, Y>.
/// Time components are skipped when lambda is not given.
inline std::pair<ConnectionField, DerivedField> derive_connection(const SpinField& s, const TangentFrame& f,
                                                                 std::optional<double> lambda) {
  auto defects = frame_defects(s, f);
  require(defects.norm < 1e-8 && defects.orthogonal < 1e-8 && defects.product < 1e-8,
          "frame is not consistent with the spin field");
  const GridSpec& g = s.grid();
  const int n = g.dimension;
  auto dm = detail::vector_partials(s.m);
  auto dX = detail::vector_partials(f.X);

  ConnectionField a;
  DerivedField u;
  for (int k = 0; k < n; ++k) {
    RealField ak(g);
    ComplexField uk(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      Vec3 X = at3(f.X, i), Y = at3(f.Y, i);
      Vec3 dmk = at3(dm[k], i);
      ak[i] = dot3(at3(dX[k], i), Y);
      uk[i] = cplx(dot3(dmk, X), dot3(dmk, Y));
    }
    a.a.push_back(std::move(ak));
    u.u.push_back(std::move(uk));
  }

  if (lambda) {
    auto dtm = rhs_llg(s, *lambda, false);
    RealField a0(g);
    ComplexField u0(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      Vec3 X = at3(f.X, i), Y = at3(f.Y, i), m = s.at(i), v = at3(dtm, i);
      double w = norm3(cross3(f.reference, m));
      a0[i] = dot3(cross3(f.reference, v), Y) / w;
      u0[i] = cplx(dot3(v, X), dot3(v, Y));
    }
    a.a0 = std::move(a0);
    u.u0 = std::move(u0);
  }
  return {std::move(a), std::move(u)};
}

/// Coulomb gauge: -Lap theta = div a, a* = a + grad theta, u* = exp(-i theta) u.
/// a0 is passed through unchanged; under the Coulomb gauge it is recomputed
/// from u* by a0_decompose.
inline std::tuple<ConnectionField, DerivedField, GaugePotential> coulomb_gauge(const ConnectionField& a,
                                                                               const DerivedField& u) {
  require(a.a.size() == u.u.size() && !a.a.empty(), "connection and derived field disagree in dimension");
  require(a.grid() == u.grid(), "connection and derived field live on different grids");
  GaugePotential theta{spectral::solve_poisson_div(a.a)};
  auto grad = spectral::gradient(theta.theta);
  ConnectionField as = a;
  for (std::size_t k = 0; k < as.a.size(); ++k) as.a[k] += grad[k];
  ComplexField phase(theta.theta.grid());
  for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = std::exp(cplx(0.0, -theta.theta[i]));
  DerivedField us = u;
  for (auto& uk : us.u)
    for (std::size_t i = 0; i < uk.size(); ++i) uk[i] *= phase[i];
  if (us.u0)
    for (std::size_t i = 0; i < phase.size(); ++i) (*us.u0)[i] *= phase[i];
  return {std::move(as), std::move(us), std::move(theta)};
}

/// Applies the gauge change (u, a) -> (exp(-i theta) u, a + grad theta).
inline std::pair<ConnectionField, DerivedField> gauge_transform(const ConnectionField& a, const DerivedField& u,
                                                                const RealField& theta) {
  auto grad = spectral::gradient(theta);
  ConnectionField as = a;
  for (std::size_t k = 0; k < as.a.size(); ++k) as.a[k] += grad[k];
  DerivedField us = u;
  for (auto& uk : us.u)
    for (std::size_t i = 0; i < uk.size(); ++i) uk[i] *= std::exp(cplx(0.0, -theta[i]));
  if (us.u0)
    for (std::size_t i = 0; i < theta.size(); ++i) (*us.u0)[i] *= std::exp(cplx(0.0, -theta[i]));
  return {std::move(as), std::move(us)};
}

/// max_k ||D_k u_l - D_l u_k||_inf with D = d + i a.
inline double verify_torsion(const DerivedField& u, const ConnectionField& a) {
  const std::size_t n = u.u.size();
  require(a.a.size() == n, "connection and derived field disagree in dimension");
  std::vector<ComplexVectorField> du;
  for (const auto& uk : u.u) du.push_back(spectral::gradient(uk));
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l)
      for (std::size_t i = 0; i < u.grid().size(); ++i) {
        cplx dkul = du[l][k][i] + cplx(0.0, a.a[k][i]) * u.u[l][i];
        cplx dluk = du[k][l][i] + cplx(0.0, a.a[l][i]) * u.u[k][i];
        res = std::max(res, std::abs(dkul - dluk));
      }
  return res;
}

/// max over spatial pairs of ||d_k a_l - d_l a_k - Im(u_k conj(u_l))||_inf.
inline double verify_curvature(const DerivedField& u, const ConnectionField& a) {
  const std::size_t n = u.u.size();
  require(a.a.size() == n, "connection and derived field disagree in dimension");
  std::vector<RealVectorField> da;
  for (const auto& ak : a.a) da.push_back(spectral::gradient(ak));
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l)
      for (std::size_t i = 0; i < u.grid().size(); ++i) {
        double lhs = da[l][k][i] - da[k][l][i];
        double rhs = (u.u[k][i] * std::conj(u.u[l][i])).imag();
        res = std::max(res, std::abs(lhs - rhs));
      }
  return res;
}

/// Space-time curvature d_t a_k - d_k a0 = Im(u0 conj(u_k)) from two time
/// levels dt apart; d_t a_k is the difference quotient and the other terms are
/// averaged between the levels. Both levels must carry time components and be
/// in the same gauge.
inline double verify_curvature(const DerivedField& u_first, const ConnectionField& a_first,
                               const DerivedField& u_second, const ConnectionField& a_second, double dt) {
  require(dt > 0.0, "time levels must be separated by a positive dt");
  require(u_first.u0 && a_first.a0 && u_second.u0 && a_second.a0, "space-time check needs time components");
  const std::size_t n = u_first.u.size();
  double res = std::max(verify_curvature(u_first, a_first), verify_curvature(u_second, a_second));
  auto da0_first = spectral::gradient(*a_first.a0);
  auto da0_second = spectral::gradient(*a_second.a0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < u_first.grid().size(); ++i) {
      double dta = (a_second.a[k][i] - a_first.a[k][i]) / dt;
      double dka0 = 0.5 * (da0_first[k][i] + da0_second[k][i]);
      double rhs = 0.5 * ((*u_first.u0)[i] * std::conj(u_first.u[k][i]) +
                          (*u_second.u0)[i] * std::conj(u_second.u[k][i]))
                             .imag();
      res = std::max(res, std::abs(dta - dka0 - rhs));
    }
  return res;
}

struct U0Consistency {
  double absolute = 0.0;
  double relative = 0.0;
};

/// ||u0 - (lambda - i) sum_k D_k u_k||_inf and its ratio to ||u0||_inf.
inline U0Consistency verify_u0_consistency(const DerivedField& u, const ConnectionField& a, double lambda) {
  require(u.u0.has_value(), "u0 consistency needs the time component");
  require(a.a.size() == u.u.size(), "connection and derived field disagree in dimension");
  const GridSpec& g = u.grid();
  ComplexField div = spectral::divergence(u.u);
  const cplx factor(lambda, -1.0);
  U0Consistency out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    cplx cov = div[i];
    for (std::size_t k = 0; k < u.u.size(); ++k) cov += cplx(0.0, a.a[k][i]) * u.u[k][i];
    out.absolute = std::max(out.absolute, std::abs((*u.u0)[i] - factor * cov));
  }
  const double scale = max_abs(*u.u0);
  out.relative = scale > 0.0 ? out.absolute / scale : 0.0;
  return out;
}

/// Frame, connection, and (optionally) Coulomb-gauged fields for one snapshot.
struct FrameSnapshot {
  TangentFrame frame;
  ConnectionField a;
  DerivedField u;
  std::optional<GaugePotential> theta;
};

inline FrameSnapshot extract_frame(const SpinField& s, const Vec3& reference, std::optional<double> lambda,
                                   bool gauge_fix) {
  FrameSnapshot out{construct_frame(s, reference), {}, {}, std::nullopt};
  std::tie(out.a, out.u) = derive_connection(s, out.frame, lambda);
  if (gauge_fix) {
    auto [as, us, theta] = coulomb_gauge(out.a, out.u);
    out.a = std::move(as);
    out.u = std::move(us);
    out.theta = std::move(theta);
  }
  return out;
}

}  // namespace llg

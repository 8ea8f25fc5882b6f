#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "llg/error.hpp"
#include "llg/field.hpp"
#include "llg/field_io.hpp"
#include "llg/llg_solver.hpp"
#include "llg/moving_frame.hpp"
#include "llg/spectral.hpp"

namespace llg {

enum class ScenarioKind { LinearWave, Bubble, RandomSmall, CustomFile };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::LinearWave: return "linear-wave";
    case ScenarioKind::Bubble: return "bubble";
    case ScenarioKind::RandomSmall: return "random-small";
    case ScenarioKind::CustomFile: return "custom-file";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "linear-wave") return ScenarioKind::LinearWave;
  if (s == "bubble") return ScenarioKind::Bubble;
  if (s == "random-small") return ScenarioKind::RandomSmall;
  if (s == "custom-file") return ScenarioKind::CustomFile;
  throw Error(ErrorKind::Config, "unknown scenario kind '" + s + "'");
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::LinearWave;
  /// Wave amplitude, peak bubble rotation angle, or random perturbation scale.
  double amplitude = 0.0;
  std::array<int, 3> wavevector{1, 0, 0};
  double radius = 1.0;
  std::optional<Vec3> center;  // defaults to the box center
  std::uint64_t seed = 1;
  int mode_cutoff = 3;
  /// When set, the amplitude is found by bisection so ||grad m0||_{L^n} matches.
  std::optional<double> target_grad_ln;
  Vec3 m_infinity{0.0, 0.0, 1.0};
  std::string path;

  void validate() const {
    require(std::isfinite(amplitude) && amplitude >= 0.0, "scenario amplitude must be >= 0");
    require(std::abs(norm3(m_infinity) - 1.0) < 1e-12, "m_infinity must be a unit vector");
    if (target_grad_ln) require(*target_grad_ln >= 0.0, "target gradient norm must be >= 0");
    if (kind == ScenarioKind::Bubble) {
      require(radius > 0.0, "bubble radius must be positive");
      require(amplitude < std::numbers::pi / 2, "bubble amplitude must stay below pi/2");
    }
    if (kind == ScenarioKind::RandomSmall) require(mode_cutoff >= 1, "random mode cutoff must be >= 1");
    if (kind == ScenarioKind::CustomFile) require(!path.empty(), "custom-file scenario needs a path");
  }
};

inline double grad_ln_norm(const SpinField& s) {
  return spectral::lp_norm_of_magnitude(magnitude(spin_gradient(s.m)), static_cast<double>(s.grid().dimension));
}

namespace detail {

inline SpinField normalized(const GridSpec& g, const Vec3& m_inf, const RealVectorField& raw) {
  RealVectorField m = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 v = at3(raw, i);
    double len = norm3(v);
    if (len < 1e-12) throw Error(ErrorKind::InvalidArgument, "initial data vanishes before normalization");
    set3(m, i, {v[0] / len, v[1] / len, v[2] / len});
  }
  return SpinField(std::move(m), m_inf);
}

inline SpinField linear_wave(const ScenarioSpec& spec, const GridSpec& g, double eps) {
  const Vec3 e = spec.m_infinity;
  const Vec3 p = default_reference(e);
  const Vec3 q = cross3(e, p);
  const double k0 = 2.0 * std::numbers::pi / g.length;
  RealVectorField raw = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.position(i);
    double phase = k0 * (spec.wavevector[0] * x[0] + spec.wavevector[1] * x[1] + spec.wavevector[2] * x[2]);
    double c = eps * std::cos(phase), s = eps * std::sin(phase);
    set3(raw, i, {e[0] + c * p[0] + s * q[0], e[1] + c * p[1] + s * q[1], e[2] + c * p[2] + s * q[2]});
  }
  return normalized(g, e, raw);
}

/// Smooth bump exp(1 - 1/(1 - rho^2)) on rho < 1, equal to 1 at the center.
inline double bump_profile(double rho) {
  if (rho >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - rho * rho));
}

inline double bubble_profile_peak() {
  static const double peak = [] {
    double best = 0.0;
    for (int i = 1; i < 100000; ++i) {
      double r = i / 100000.0;
      best = std::max(best, r * bump_profile(r));
    }
    return best;
  }();
  return peak;
}

/// Hedgehog-type bubble: m_inf is rotated toward the in-plane radial direction
/// of d = x - x0 by the angle amplitude * (|d_12| / r) * bump(|d| / r) / peak,
/// where d_12 = (d_1, d_2) and peak = max rho bump(rho), so the largest angle
/// equals the amplitude.
inline SpinField bubble(const ScenarioSpec& spec, const GridSpec& g, double angle) {
  const Vec3 e = spec.m_infinity;
  const Vec3 p = default_reference(e);
  const Vec3 q = cross3(e, p);
  Vec3 center{0.0, 0.0, 0.0};
  if (spec.center) center = *spec.center;
  else
    for (int a = 0; a < g.dimension; ++a) center[a] = 0.5 * g.length;
  const double peak = bubble_profile_peak();
  RealVectorField raw = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto d = periodic_displacement(g, g.position(i), center);
    double dist = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    double planar = std::sqrt(d[0] * d[0] + d[1] * d[1]);
    double eta = angle * planar / spec.radius * bump_profile(dist / spec.radius) / peak;
    double c1 = 0.0, c2 = 0.0;
    if (planar > 0.0) {
      c1 = d[0] / planar;
      c2 = d[1] / planar;
    }
    double c = std::cos(eta), s = std::sin(eta);
    Vec3 v;
    for (int k = 0; k < 3; ++k) v[k] = c * e[k] + s * (c1 * p[k] + c2 * q[k]);
    set3(raw, i, v);
  }
  return normalized(g, e, raw);
}

/// Two mean-zero real fields sum_k c_k exp(i k.x) (real part) with Gaussian c_k
/// on integer wavevectors 0 < |k| <= cutoff, normalized so sum |c_k|^2 = 1. The
/// coefficients depend only on the seed, not on the grid resolution.
inline std::array<RealField, 2> random_tangent_components(const GridSpec& g, std::uint64_t seed, int cutoff) {
  require(cutoff < g.points / 2, "random mode cutoff must be below N/2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<RealField, 2> out{RealField(g, 0.0), RealField(g, 0.0)};
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < g.dimension; ++a) {
    lo[a] = -cutoff;
    hi[a] = cutoff;
  }
  for (auto& comp : out) {
    Spectrum s(g);
    double total = 0.0;
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) {
          double re = gauss(rng), im = gauss(rng);
          int r2 = i * i + j * j + k * k;
          if (r2 == 0 || r2 > cutoff * cutoff) continue;
          s[g.flatten({i, j, k})] = cplx(re, im) * static_cast<double>(g.size());
          total += re * re + im * im;
        }
    comp = spectral::inverse_real(s);
    if (total > 0.0) comp *= 1.0 / std::sqrt(total);
  }
  return out;
}

inline SpinField random_small(const ScenarioSpec& spec, const GridSpec& g, double scale) {
  const Vec3 e = spec.m_infinity;
  const Vec3 p = default_reference(e);
  const Vec3 q = cross3(e, p);
  auto [alpha, beta] = random_tangent_components(g, spec.seed, spec.mode_cutoff);
  RealVectorField raw = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = scale * alpha[i], b = scale * beta[i];
    set3(raw, i, {e[0] + a * p[0] + b * q[0], e[1] + a * p[1] + b * q[1], e[2] + a * p[2] + b * q[2]});
  }
  return normalized(g, e, raw);
}

inline double min_frame_clearance(const SpinField& s, const Vec3& reference) {
  double worst = INFINITY;
  for (std::size_t i = 0; i < s.grid().size(); ++i) worst = std::min(worst, norm3(cross3(reference, s.at(i))));
  return worst;
}

}  // namespace detail

/// Unit-length initial data. With target_grad_ln set, the amplitude is tuned by
/// bisection until ||grad m0||_{L^n} matches the target to 1e-6 relative; the
/// search never leaves the range where |e x m| stays above the frame threshold.
inline SpinField make_initial(const ScenarioSpec& spec, const GridSpec& g) {
  spec.validate();
  if (spec.kind == ScenarioKind::CustomFile) {
    auto comps = io::read_real_field(spec.path);
    require(comps.size() == 3, "custom-file scenario needs a 3-component field", ErrorKind::Io);
    require(comps.front().grid() == g, "custom-file grid does not match the configured grid", ErrorKind::Config);
    SpinField s(std::move(comps), spec.m_infinity);
    s.require_unit(1e-10, "custom-file scenario");
    return s;
  }

  auto build = [&](double amp) {
    switch (spec.kind) {
      case ScenarioKind::LinearWave: return detail::linear_wave(spec, g, amp);
      case ScenarioKind::Bubble: return detail::bubble(spec, g, amp);
      default: return detail::random_small(spec, g, amp);
    }
  };
  if (!spec.target_grad_ln) return build(spec.amplitude);

  const double target = *spec.target_grad_ln;
  if (target == 0.0) return build(0.0);
  const Vec3 reference = default_reference(spec.m_infinity);
  auto admissible = [&](const SpinField& s) {
    return detail::min_frame_clearance(s, reference) > kFrameDegeneracyThreshold;
  };

  double lo = 0.0;
  double hi = spec.kind == ScenarioKind::Bubble ? std::nextafter(std::numbers::pi / 2, 0.0) : 1e-3;
  if (spec.kind != ScenarioKind::Bubble) {
    while (grad_ln_norm(build(hi)) < target) {
      if (!admissible(build(hi)) || hi > 1e6) break;
      hi *= 2.0;
    }
  }
  if (grad_ln_norm(build(hi)) < target)
    throw Error(ErrorKind::InvalidArgument,
                "target ||grad m0||_{L^n} = " + std::to_string(target) + " is not reachable for this scenario");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = grad_ln_norm(build(mid));
    if (std::abs(v - target) <= 1e-9 * target) {
      lo = hi = mid;
      break;
    }
    (v < target ? lo : hi) = mid;
  }
  SpinField out = build(0.5 * (lo + hi));
  if (!admissible(out))
    throw Error(ErrorKind::InvalidArgument, "target ||grad m0||_{L^n} = " + std::to_string(target) +
                                                " would violate the frame bound |e x m| > 0.1");
  return out;
}

/// Mollify-and-project smoothing: convolution with the normalized bump
/// exp(-1/(1 - |x/eps|^2)) by physical-space quadrature, then projection.
inline SpinField mollify_project(const SpinField& s, double eps) {
  const GridSpec& g = s.grid();
  require(eps > 0.0, "mollifier radius must be positive");
  require(eps < 0.5 * g.length, "mollifier radius must be below half the box length");
  s.require_unit(1e-10, "mollify_project");
  const double h = g.spacing();
  const int reach = static_cast<int>(std::ceil(eps / h));

  struct Tap {
    std::array<int, 3> offset;
    double weight;
  };
  std::vector<Tap> taps;
  double total = 0.0;
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < g.dimension; ++a) {
    lo[a] = -reach;
    hi[a] = reach;
  }
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) {
        double r = h * std::sqrt(static_cast<double>(i * i + j * j + k * k)) / eps;
        if (r >= 1.0) continue;
        double w = std::exp(-1.0 / (1.0 - r * r));
        taps.push_back({{i, j, k}, w});
        total += w;
      }
  for (auto& t : taps) t.weight /= total;

  RealVectorField smooth = make_real_vector(g, 3);
  double min_len = INFINITY;
  std::size_t worst = 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto ijk = g.unflatten(idx);
    Vec3 acc{0.0, 0.0, 0.0};
    for (const auto& t : taps) {
      std::size_t j = g.flatten({ijk[0] + t.offset[0], ijk[1] + t.offset[1], ijk[2] + t.offset[2]});
      for (int c = 0; c < 3; ++c) acc[c] += t.weight * s.m[c][j];
    }
    double len = norm3(acc);
    if (len < min_len) {
      min_len = len;
      worst = idx;
    }
    set3(smooth, idx, acc);
  }
  if (min_len <= 0.5)
    throw Error(ErrorKind::MollifierDegenerate, "min |phi_eps * m| = " + std::to_string(min_len) +
                                                    " <= 1/2 at grid index " + std::to_string(worst));
  return detail::normalized(g, s.m_infinity, smooth);
}

/// ||f||_{H^1} + ||f||_{W^{1,n}} of a 3-vector difference field.
inline double h1_w1n_norm(const RealVectorField& f) {
  const GridSpec& g = common_grid(f);
  const double n = static_cast<double>(g.dimension);
  RealField grad = magnitude(spin_gradient(f));
  RealField val = magnitude(f);
  double l2 = spectral::lp_norm_of_magnitude(val, 2.0);
  double g2 = spectral::lp_norm_of_magnitude(grad, 2.0);
  double ln = spectral::lp_norm_of_magnitude(val, n);
  double gn = spectral::lp_norm_of_magnitude(grad, n);
  return std::sqrt(l2 * l2 + g2 * g2) + ln + gn;
}

inline double h1_w1n_distance(const SpinField& a, const SpinField& b) {
  RealVectorField d = a.m;
  for (int c = 0; c < 3; ++c) d[c] -= b.m[c];
  return h1_w1n_norm(d);
}

}  // namespace llg

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "llg/error.hpp"
#include "llg/field.hpp"
#include "llg/fit.hpp"
#include "llg/norm_series.hpp"
#include "llg/spectral.hpp"

namespace llg {

using Vec3 = std::array<double, 3>;

/// Unit-vector field m on the grid together with its far-field value.
struct SpinField {
  RealVectorField m;
  Vec3 m_infinity{0.0, 0.0, 1.0};

  SpinField() = default;
  SpinField(RealVectorField components, Vec3 m_inf) : m(std::move(components)), m_infinity(m_inf) {
    require(m.size() == 3, "spin field needs three components");
    common_grid(m);
    require(std::abs(norm3(m_infinity) - 1.0) < 1e-12, "m_infinity must be a unit vector");
  }

  static SpinField constant(const GridSpec& g, Vec3 value) {
    RealVectorField c = make_real_vector(g, 3);
    for (int k = 0; k < 3; ++k) std::fill(c[k].begin(), c[k].end(), value[k]);
    return SpinField(std::move(c), value);
  }

  const GridSpec& grid() const { return m.front().grid(); }
  Vec3 at(std::size_t i) const { return at3(m, i); }

  double max_unit_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < grid().size(); ++i) d = std::max(d, std::abs(norm3(at(i)) - 1.0));
    return d;
  }

  void require_unit(double tol, const char* where) const {
    require_finite(m, where);
    double d = max_unit_defect();
    if (d > tol)
      throw Error(ErrorKind::InvalidArgument,
                  std::string(where) + ": spin field is not unit length (defect " + std::to_string(d) + ")");
  }
};

enum class Scheme { ImexProjection, Rk4Projection };

inline const char* to_string(Scheme s) {
  return s == Scheme::ImexProjection ? "imex-projection" : "explicit-rk4-projection";
}

struct SolverConfig {
  double lambda = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::ImexProjection;
  double projection_tolerance = 1e-10;
  int record_every = 1;
  /// Ceiling for ||grad m||_inf; defaults to 1e3 / h when unset.
  std::optional<double> blowup_ceiling;
  bool dealias = true;

  void validate() const {
    require(lambda > 0.0, "damping lambda must be positive");
    require(dt > 0.0, "time step must be positive");
    require(t_end >= dt, "t_end must be at least one time step");
    require(record_every >= 1, "record_every must be >= 1");
    require(projection_tolerance > 0.0, "projection tolerance must be positive");
  }
};

struct RunFailure {
  ErrorKind kind;
  double time;
  std::string message;
};

struct Trajectory {
  SolverConfig config;
  std::vector<double> times;
  std::vector<SpinField> snapshots;
  NormSeries norms;
  /// max ||m| - 1| before projection, per recorded step.
  std::vector<double> projection_defect;
  std::optional<RunFailure> failure;

  std::size_t size() const { return times.size(); }
};

/// Pointwise gradient of a 3-vector field: entry [c * n + k] is d_k m_c.
inline RealVectorField spin_gradient(const RealVectorField& m) {
  const GridSpec& g = common_grid(m);
  RealVectorField out;
  out.reserve(3 * g.dimension);
  for (const auto& comp : m) {
    auto grad = spectral::gradient(comp);
    for (auto& d : grad) out.push_back(std::move(d));
  }
  return out;
}

/// Dirichlet energy 1/2 sum |grad m|^2 h^n.
inline double energy(const SpinField& s) {
  auto grad = spin_gradient(s.m);
  double acc = 0.0;
  for (const auto& d : grad)
    for (double v : d) acc += v * v;
  return 0.5 * acc * s.grid().cell_volume();
}

namespace detail {

inline double lp_norm_of_gradient_inf(const RealVectorField& m) {
  return spectral::lp_norm_of_magnitude(magnitude(spin_gradient(m)), INFINITY);
}

/// Semi-discrete right-hand side without the unit-length check (used for
/// Runge-Kutta stages). Only the products lambda |grad m|^2 m and
/// (m - m_inf) x Lap m are dealiased; the linear part m_inf x Lap m is not.
inline RealVectorField rhs_unchecked(const RealVectorField& m, const Vec3& e, double lambda, bool dealias) {
  const GridSpec& g = common_grid(m);
  const int n = g.dimension;
  std::array<Spectrum, 3> mh{spectral::forward(m[0]), spectral::forward(m[1]), spectral::forward(m[2])};
  RealVectorField lap = make_real_vector(g, 3);
  RealField grad2(g, 0.0);
  for (int c = 0; c < 3; ++c) {
    lap[c] = spectral::inverse_real(spectral::apply_laplacian(mh[c]));
    for (int k = 0; k < n; ++k) {
      RealField d = spectral::inverse_real(spectral::differentiate(mh[c], k));
      for (std::size_t i = 0; i < g.size(); ++i) grad2[i] += d[i] * d[i];
    }
  }
  RealVectorField nonlinear = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 mi = at3(m, i);
    Vec3 prec = cross3({mi[0] - e[0], mi[1] - e[1], mi[2] - e[2]}, at3(lap, i));
    for (int c = 0; c < 3; ++c) nonlinear[c][i] = lambda * grad2[i] * mi[c] - prec[c];
  }
  RealVectorField out = make_real_vector(g, 3);
  for (int c = 0; c < 3; ++c) nonlinear[c] = dealias ? spectral::dealias(nonlinear[c]) : nonlinear[c];
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 lin = cross3(e, at3(lap, i));
    for (int c = 0; c < 3; ++c) out[c][i] = lambda * lap[c][i] - lin[c] + nonlinear[c][i];
  }
  return out;
}

struct ProjectionResult {
  double defect = 0.0;
};

/// Pointwise renormalization onto the sphere.
inline ProjectionResult project_to_sphere(RealVectorField& m) {
  const GridSpec& g = common_grid(m);
  ProjectionResult r;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 v = at3(m, i);
    double len = norm3(v);
    if (!std::isfinite(len)) throw Error(ErrorKind::NonFinite, "non-finite spin after step");
    if (len < 0.5)
      throw Error(ErrorKind::ProjectionDegenerate,
                  "|m| = " + std::to_string(len) + " < 0.5 before projection at grid point " + std::to_string(i));
    r.defect = std::max(r.defect, std::abs(len - 1.0));
    set3(m, i, {v[0] / len, v[1] / len, v[2] / len});
  }
  return r;
}

struct StepOutcome {
  SpinField next;
  double projection_defect = 0.0;
  double linf_grad_before = 0.0;
};

/// Integrating-factor Euler step: the linearization lambda Lap v - m_inf x Lap v
/// about m_inf is advanced exactly per Fourier mode (decay exp(-lambda |k|^2 dt)
/// combined with a rotation by |k|^2 dt about m_inf); the remainder
/// lambda |grad m|^2 m - (m - m_inf) x Lap m is explicit.
inline StepOutcome imex_step(const SpinField& s, double lambda, double dt, bool dealias) {
  const GridSpec& g = s.grid();
  const int n = g.dimension;
  const Vec3 e = s.m_infinity;
  std::array<Spectrum, 3> mh{spectral::forward(s.m[0]), spectral::forward(s.m[1]),
                                       spectral::forward(s.m[2])};
  RealVectorField lap = make_real_vector(g, 3);
  RealField grad2(g, 0.0);
  for (int c = 0; c < 3; ++c) {
    lap[c] = spectral::inverse_real(spectral::apply_laplacian(mh[c]));
    for (int k = 0; k < n; ++k) {
      RealField d = spectral::inverse_real(spectral::differentiate(mh[c], k));
      for (std::size_t i = 0; i < g.size(); ++i) grad2[i] += d[i] * d[i];
    }
  }
  double max_grad2 = 0.0;
  for (double v : grad2) max_grad2 = std::max(max_grad2, v);

  RealVectorField remainder = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 mi = s.at(i);
    Vec3 vi{mi[0] - e[0], mi[1] - e[1], mi[2] - e[2]};
    Vec3 prec = cross3(vi, at3(lap, i));
    for (int c = 0; c < 3; ++c) remainder[c][i] = lambda * grad2[i] * mi[c] - prec[c];
  }

  // w = v^ + dt N^, with v = m - m_inf (only the zero mode differs from m^).
  std::array<Spectrum, 3> w = mh;
  const double count = static_cast<double>(g.size());
  for (int c = 0; c < 3; ++c) {
    Spectrum nh = spectral::forward(remainder[c]);
    if (dealias) spectral::truncate(nh);
    w[c][0] -= e[c] * count;
    for (std::size_t i = 0; i < g.size(); ++i) w[c][i] += dt * nh[i];
  }

  auto k2 = spectral::workspace(g).wavenumber_squared();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (k2[i] == 0.0) continue;
    const double decay = std::exp(-lambda * k2[i] * dt);
    const double theta = k2[i] * dt;
    const double cs = std::cos(theta), sn = std::sin(theta);
    std::array<cplx, 3> wi{w[0][i], w[1][i], w[2][i]};
    cplx par = e[0] * wi[0] + e[1] * wi[1] + e[2] * wi[2];
    std::array<cplx, 3> exw{e[1] * wi[2] - e[2] * wi[1], e[2] * wi[0] - e[0] * wi[2],
                            e[0] * wi[1] - e[1] * wi[0]};
    for (int c = 0; c < 3; ++c) {
      cplx perp = wi[c] - par * e[c];
      w[c][i] = decay * (par * e[c] + cs * perp + sn * exw[c]);
    }
  }

  RealVectorField next = make_real_vector(g, 3);
  for (int c = 0; c < 3; ++c) {
    next[c] = spectral::inverse_real(w[c]);
    for (double& v : next[c]) v += e[c];
  }
  auto proj = project_to_sphere(next);
  return {SpinField(std::move(next), e), proj.defect, std::sqrt(max_grad2)};
}

inline StepOutcome rk4_step(const SpinField& s, double lambda, double dt, bool dealias) {
  const GridSpec& g = s.grid();
  auto stage = [&](const RealVectorField& base, const RealVectorField& k, double h) {
    RealVectorField out = base;
    for (int c = 0; c < 3; ++c) out[c].axpy(h, k[c]);
    return out;
  };
  RealVectorField k1 = rhs_unchecked(s.m, s.m_infinity, lambda, dealias);
  RealVectorField k2 = rhs_unchecked(stage(s.m, k1, 0.5 * dt), s.m_infinity, lambda, dealias);
  RealVectorField k3 = rhs_unchecked(stage(s.m, k2, 0.5 * dt), s.m_infinity, lambda, dealias);
  RealVectorField k4 = rhs_unchecked(stage(s.m, k3, dt), s.m_infinity, lambda, dealias);
  RealVectorField next = s.m;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i)
      next[c][i] += dt / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);
  auto proj = project_to_sphere(next);
  double grad_inf = lp_norm_of_gradient_inf(s.m);
  return {SpinField(std::move(next), s.m_infinity), proj.defect, grad_inf};
}

}  // namespace detail

/// Right-hand side of the parabolic form lambda (Lap m + |grad m|^2 m) - m x Lap m.
/// Nonlinear products are 2/3-dealiased when requested.
inline RealVectorField rhs_llg(const SpinField& s, double lambda, bool dealias = true) {
  require(lambda > 0.0, "damping lambda must be positive");
  s.require_unit(1e-6, "rhs_llg");
  return detail::rhs_unchecked(s.m, s.m_infinity, lambda, dealias);
}

/// One step of the configured scheme followed by projection onto the sphere.
inline SpinField step(const SpinField& s, const SolverConfig& cfg) {
  cfg.validate();
  s.require_unit(1e-6, "step");
  auto out = cfg.scheme == Scheme::ImexProjection ? detail::imex_step(s, cfg.lambda, cfg.dt, cfg.dealias)
                                                  : detail::rk4_step(s, cfg.lambda, cfg.dt, cfg.dealias);
  return std::move(out.next);
}

/// Norms of m recorded at every sample.
inline NormRecord measure(const SpinField& s, double t) {
  const GridSpec& g = s.grid();
  auto grad = spin_gradient(s.m);
  RealField gmag = magnitude(grad);
  NormRecord r;
  r.t = t;
  double sum_g2 = 0.0, sum_dev2 = 0.0, dev_inf = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum_g2 += gmag[i] * gmag[i];
    Vec3 mi = s.at(i);
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) d2 += (mi[c] - s.m_infinity[c]) * (mi[c] - s.m_infinity[c]);
    sum_dev2 += d2;
    dev_inf = std::max(dev_inf, std::sqrt(d2));
  }
  const double hn = g.cell_volume();
  r.energy = 0.5 * sum_g2 * hn;
  r.linf_grad = spectral::lp_norm_of_magnitude(gmag, INFINITY);
  r.ln_grad = spectral::lp_norm_of_magnitude(gmag, static_cast<double>(g.dimension));
  r.h1_dev = std::sqrt((sum_g2 + sum_dev2) * hn);
  r.linf_dev = dev_inf;
  return r;
}

/// Runs from t = 0 to t_end. The step count is ceil(t_end / dt) with the step
/// shortened so the last sample lands exactly on t_end. Failures stop the run
/// and are reported in Trajectory::failure with the time they occurred.
inline Trajectory evolve(const SpinField& m0, const SolverConfig& cfg) {
  cfg.validate();
  m0.require_unit(1e-10, "evolve");
  const GridSpec& g = m0.grid();
  Trajectory traj;
  traj.config = cfg;
  traj.norms.dimension = g.dimension;
  traj.norms.box_length = g.length;
  traj.norms.lambda = cfg.lambda;

  const long steps = std::max(1L, static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9)));
  const double dt = cfg.t_end / static_cast<double>(steps);
  const double ceiling = cfg.blowup_ceiling.value_or(1e3 / g.spacing());

  auto record = [&](const SpinField& s, double t, double defect) {
    traj.times.push_back(t);
    traj.snapshots.push_back(s);
    traj.norms.append(measure(s, t));
    traj.projection_defect.push_back(defect);
  };

  SpinField current = m0;
  record(current, 0.0, 0.0);
  double defect_since_record = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    try {
      auto out = cfg.scheme == Scheme::ImexProjection ? detail::imex_step(current, cfg.lambda, dt, cfg.dealias)
                                                      : detail::rk4_step(current, cfg.lambda, dt, cfg.dealias);
      if (out.linf_grad_before > ceiling)
        throw Error(ErrorKind::BlowUpSuspected, "||grad m||_inf = " + std::to_string(out.linf_grad_before) +
                                                    " exceeds ceiling " + std::to_string(ceiling));
      current = std::move(out.next);
      defect_since_record = std::max(defect_since_record, out.projection_defect);
    } catch (const Error& err) {
      traj.failure = RunFailure{err.kind(), t_prev, err.message()};
      return traj;
    }
    if (k % cfg.record_every == 0 || k == steps) {
      const double t = static_cast<double>(k) * dt;
      record(current, t, defect_since_record);
      defect_since_record = 0.0;
      if (traj.norms.records.back().linf_grad > ceiling) {
        traj.failure = RunFailure{ErrorKind::BlowUpSuspected, t, "||grad m||_inf exceeds blow-up ceiling"};
        return traj;
      }
    }
  }
  return traj;
}

struct EnergyLawResidual {
  std::vector<double> times;       // interior sample times
  std::vector<double> residual;    // |(1 + lambda^2) dE/dt + lambda ||d_t m||^2|
  std::vector<double> normalized;  // residual / (lambda ||d_t m||^2), 0 when that vanishes

  double max_residual() const { return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end()); }
  double max_normalized() const {
    return normalized.empty() ? 0.0 : *std::max_element(normalized.begin(), normalized.end());
  }
};

/// Energy-law residual at interior samples. dE/dt is a three-point (possibly
/// non-uniform) difference of recorded energies; d_t m comes from rhs_llg.
inline EnergyLawResidual energy_law_residual(const Trajectory& traj) {
  require(traj.size() >= 3, "energy law residual needs at least three snapshots");
  const double lambda = traj.config.lambda;
  EnergyLawResidual out;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double h0 = traj.times[i] - traj.times[i - 1];
    const double h1 = traj.times[i + 1] - traj.times[i];
    const double em = traj.norms.records[i - 1].energy;
    const double e0 = traj.norms.records[i].energy;
    const double ep = traj.norms.records[i + 1].energy;
    const double dE = -h1 / (h0 * (h0 + h1)) * em + (h1 - h0) / (h0 * h1) * e0 + h0 / (h1 * (h0 + h1)) * ep;
    auto dtm = rhs_llg(traj.snapshots[i], lambda, traj.config.dealias);
    double l2sq = 0.0;
    for (const auto& c : dtm)
      for (double v : c) l2sq += v * v;
    l2sq *= traj.snapshots[i].grid().cell_volume();
    const double res = std::abs((1.0 + lambda * lambda) * dE + lambda * l2sq);
    out.times.push_back(traj.times[i]);
    out.residual.push_back(res);
    out.normalized.push_back(l2sq > 0.0 ? res / (lambda * l2sq) : 0.0);
  }
  return out;
}

struct SobolevSample {
  double t = 0.0;
  double grad_h_sigma_minus_1_sq = 0.0;  // ||grad m||^2_{H^{sigma-1}}
  double grad_h_sigma_sq = 0.0;          // ||grad m||^2_{H^sigma}
  double grad_linf = 0.0;                // ||grad m||_{L^inf}
  double envelope = 0.0;                 // exp(C(t)) ||grad m(0)||^2_{H^{sigma-1}}
};

struct SobolevMonitorReport {
  int sigma = 2;
  double fitted_c = 0.0;
  std::vector<SobolevSample> samples;
  std::vector<std::size_t> violations;
};

/// Higher-order energy monitor with the Gronwall envelope
/// exp(c int_0^t (1 + ||grad m||_inf^2)) ||grad m(0)||^2_{H^{sigma-1}}.
inline SobolevMonitorReport sobolev_monitor(const Trajectory& traj, int sigma) {
  require(sigma >= 2, "Sobolev monitor needs sigma >= 2");
  require(traj.size() >= 1, "empty trajectory");
  SobolevMonitorReport rep;
  rep.sigma = sigma;
  std::vector<double> y, weight;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    auto grad = spin_gradient(traj.snapshots[i].m);
    SobolevSample s;
    s.t = traj.times[i];
    double a = spectral::sobolev_norm(grad, sigma - 1);
    double b = spectral::sobolev_norm(grad, sigma);
    s.grad_h_sigma_minus_1_sq = a * a;
    s.grad_h_sigma_sq = b * b;
    s.grad_linf = traj.norms.records[i].linf_grad;
    rep.samples.push_back(s);
    y.push_back(s.grad_h_sigma_minus_1_sq);
    weight.push_back(1.0 + s.grad_linf * s.grad_linf);
  }
  auto integral = fit::cumulative_trapezoid(traj.times, weight);
  auto env = fit::fit_exponential_envelope(y, integral);
  rep.fitted_c = env.constant;
  rep.violations = env.violations;
  for (std::size_t i = 0; i < rep.samples.size(); ++i)
    rep.samples[i].envelope = y.front() * std::exp(env.constant * integral[i]);
  return rep;
}

struct StabilityReport {
  std::vector<double> times;
  std::vector<double> distance_sq;  // ||m1 - m2||_{L^2}^2
  std::vector<double> envelope;
  double fitted_c = 0.0;
  std::vector<std::size_t> violations;
  bool non_increasing = true;
};

/// L2 distance between two runs against exp(c sum_i int ||grad m_i||_inf^2) d(0).
inline StabilityReport stability_distance(const Trajectory& a, const Trajectory& b) {
  require(a.size() == b.size() && a.size() >= 1, "trajectories must share sample times");
  require(a.snapshots.front().grid() == b.snapshots.front().grid(), "trajectories live on different grids");
  require(a.config.lambda == b.config.lambda, "trajectories use different damping");
  StabilityReport rep;
  std::vector<double> weight;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(std::abs(a.times[i] - b.times[i]) <= 1e-12 * std::max(1.0, std::abs(a.times[i])),
            "trajectories must share sample times");
    const auto& ma = a.snapshots[i];
    const auto& mb = b.snapshots[i];
    double d = 0.0;
    for (int c = 0; c < 3; ++c)
      for (std::size_t j = 0; j < ma.grid().size(); ++j) {
        double diff = ma.m[c][j] - mb.m[c][j];
        d += diff * diff;
      }
    rep.times.push_back(a.times[i]);
    rep.distance_sq.push_back(d * ma.grid().cell_volume());
    double ga = a.norms.records[i].linf_grad, gb = b.norms.records[i].linf_grad;
    weight.push_back(ga * ga + gb * gb);
  }
  auto integral = fit::cumulative_trapezoid(rep.times, weight);
  auto env = fit::fit_exponential_envelope(rep.distance_sq, integral);
  rep.fitted_c = env.constant;
  rep.violations = env.violations;
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    rep.envelope.push_back(rep.distance_sq.front() * std::exp(env.constant * integral[i]));
    if (i > 0 && rep.distance_sq[i] > rep.distance_sq[i - 1] * (1.0 + 1e-10)) rep.non_increasing = false;
  }
  return rep;
}

namespace detail {
inline double ball_integral(const RealField& density, const Vec3& center, double radius) {
  const GridSpec& g = density.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto d = periodic_displacement(g, g.position(i), center);
    if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < radius * radius) acc += density[i];
  }
  return acc * g.cell_volume();
}
}  // namespace detail

struct LocalEnergyResult {
  double lhs = 0.0;  // sup_t int_{B_{r/2}} |grad m|^2 + int_{P_{r/2}} |d_t m|^2
  double rhs = 0.0;  // r^{-2} int_{P_r} |grad m|^2
  double implied_c = 0.0;
};

/// Localized energy inequality on the forward cylinder P_r(z0) = (t0, t0 + r^2) x B_r(x0).
/// The first left-hand term is the supremum over samples in the half cylinder's
/// time range; time integrals use the piecewise-linear interpolant of the samples.
inline LocalEnergyResult local_energy_check(const Trajectory& traj, const Vec3& x0, double t0, double r) {
  require(traj.size() >= 2, "local energy check needs at least two snapshots");
  const GridSpec& g = traj.snapshots.front().grid();
  if (!(r > 0.0) || r > 0.5 * g.length)
    throw Error(ErrorKind::OutOfRange, "cylinder radius must lie in (0, L/2]");
  if (t0 < traj.times.front() - 1e-12 || t0 + r * r > traj.times.back() + 1e-12)
    throw Error(ErrorKind::OutOfRange, "cylinder time range outside the recorded trajectory");
  std::size_t half_count = 0;
  for (double t : traj.times)
    if (t >= t0 - 1e-12 && t <= t0 + 0.25 * r * r + 1e-12) ++half_count;
  if (half_count < 2) throw Error(ErrorKind::OutOfRange, "fewer than two samples inside the half cylinder");

  std::vector<double> inner_grad, outer_grad, inner_dt;
  double sup_inner = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj.snapshots[i];
    RealField e = magnitude(spin_gradient(s.m));
    for (double& v : e) v *= v;
    double in = detail::ball_integral(e, x0, 0.5 * r);
    inner_grad.push_back(in);
    outer_grad.push_back(detail::ball_integral(e, x0, r));
    auto dtm = rhs_llg(s, traj.config.lambda, traj.config.dealias);
    RealField q = magnitude(dtm);
    for (double& v : q) v *= v;
    inner_dt.push_back(detail::ball_integral(q, x0, 0.5 * r));
    if (traj.times[i] >= t0 - 1e-12 && traj.times[i] <= t0 + 0.25 * r * r + 1e-12) sup_inner = std::max(sup_inner, in);
  }
  LocalEnergyResult res;
  res.lhs = sup_inner + fit::integrate_window(traj.times, inner_dt, t0, t0 + 0.25 * r * r);
  res.rhs = fit::integrate_window(traj.times, outer_grad, t0, t0 + r * r) / (r * r);
  res.implied_c = res.rhs > 0.0 ? res.lhs / res.rhs : 0.0;
  return res;
}

}  // namespace llg

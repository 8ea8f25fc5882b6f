#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "llg/csv.hpp"
#include "llg/error.hpp"
#include "llg/fit.hpp"
#include "llg/llg_solver.hpp"
#include "llg/moving_frame.hpp"
#include "llg/norm_series.hpp"
#include "llg/spectral.hpp"

namespace llg {

inline void require_delta(double delta, double lo, double hi) {
  if (!(delta > lo && delta < hi))
    throw Error(ErrorKind::OutOfRange,
                "delta = " + std::to_string(delta) + " outside (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
}

inline DerivedNorms derived_norms(const ComplexVectorField& u, double delta) {
  const double n = static_cast<double>(common_grid(u).dimension);
  DerivedNorms d;
  d.u_l_n_over_delta = spectral::lp_norm(u, n / delta);
  d.u_l_n = spectral::lp_norm(u, n);
  d.u_l_inf = spectral::lp_norm(u, INFINITY);
  ComplexVectorField grad;
  for (const auto& c : u)
    for (auto& p : spectral::gradient(c)) grad.push_back(std::move(p));
  d.grad_u_l_n = spectral::lp_norm(grad, n);
  return d;
}

/// Coulomb-gauged derivative coefficients of one spin field.
inline ComplexVectorField derived_field_of(const SpinField& s, std::optional<Vec3> reference = std::nullopt) {
  return extract_frame(s, reference.value_or(default_reference(s.m_infinity)), std::nullopt, true).u.u;
}

/// Fills the derived-field norms of every record from the trajectory snapshots
/// and returns u(0).
inline ComplexVectorField attach_derived_norms(Trajectory& traj, double delta,
                                               std::optional<Vec3> reference = std::nullopt) {
  require_delta(delta, 0.5, 1.0);
  require(!traj.snapshots.empty() && traj.snapshots.size() == traj.norms.size(),
          "trajectory snapshots and norm records are out of step");
  traj.norms.delta = delta;
  ComplexVectorField first;
  for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
    auto u = derived_field_of(traj.snapshots[j], reference);
    traj.norms.records[j].derived = derived_norms(u, delta);
    if (j == 0) first = std::move(u);
  }
  return first;
}

struct WeightedNorms {
  double delta = 0.0;
  std::vector<double> times;
  std::vector<double> K;        // sup tau^{(1-delta)/2} ||u||_{L^{n/delta}}
  std::vector<double> K_prime;  // sup tau^{1/2} ||grad u||_{L^n}
  std::vector<double> R;        // max(K, K')
};

/// Running suprema over the recorded samples up to and including each time.
inline WeightedNorms weighted_norms(const NormSeries& s, double delta) {
  require_delta(delta, 0.5, 1.0);
  require(s.has_derived(), "weighted norms need derived-field norms on every record");
  require(s.delta == delta, "series was recorded with delta = " + std::to_string(s.delta));
  WeightedNorms w;
  w.delta = delta;
  double k = 0.0, kp = 0.0;
  for (const auto& r : s.records) {
    const double tau = std::max(r.t, 0.0);
    k = std::max(k, std::pow(tau, 0.5 * (1.0 - delta)) * r.derived->u_l_n_over_delta);
    kp = std::max(kp, std::sqrt(tau) * r.derived->grad_u_l_n);
    w.times.push_back(r.t);
    w.K.push_back(k);
    w.K_prime.push_back(kp);
    w.R.push_back(std::max(k, kp));
  }
  return w;
}

struct R0Series {
  double delta = 0.0;
  std::vector<double> times;
  std::vector<double> K0;
  std::vector<double> K0_prime;
  std::vector<double> R0;
  double u0_ln = 0.0;
  double fitted_c = 0.0;  // max R0 / ||u0||_{L^n}
};

/// Weighted norms of the free evolution S(t)u0 sampled at the given times.
inline R0Series r0_series(const ComplexVectorField& u0, const std::vector<double>& times, double delta,
                          double lambda) {
  require_delta(delta, 0.5, 1.0);
  require(!times.empty(), "R0 needs at least one sample time");
  for (std::size_t j = 1; j < times.size(); ++j) require(times[j] > times[j - 1], "sample times must increase");
  require(times.front() >= 0.0, "sample times must be non-negative");
  R0Series out;
  out.delta = delta;
  out.times = times;
  out.u0_ln = spectral::lp_norm(u0, static_cast<double>(common_grid(u0).dimension));
  double k = 0.0, kp = 0.0;
  for (double t : times) {
    auto d = derived_norms(spectral::semigroup_apply(u0, t, lambda), delta);
    k = std::max(k, std::pow(t, 0.5 * (1.0 - delta)) * d.u_l_n_over_delta);
    kp = std::max(kp, std::sqrt(t) * d.grad_u_l_n);
    out.K0.push_back(k);
    out.K0_prime.push_back(kp);
    out.R0.push_back(std::max(k, kp));
  }
  if (out.u0_ln > 0.0) out.fitted_c = out.R0.back() / out.u0_ln;
  return out;
}

struct BootstrapCheck {
  bool holds = true;
  double margin = 0.0;       // min over samples with t > 0 of 2 R0 - R
  double worst_ratio = 0.0;  // max over samples of R / R0
  std::vector<std::size_t> violations;
};

inline BootstrapCheck check_bootstrap(const WeightedNorms& w, const R0Series& r0) {
  require(w.times.size() == r0.times.size(), "R and R0 sampled at different times");
  for (std::size_t j = 0; j < w.times.size(); ++j)
    require(std::abs(w.times[j] - r0.times[j]) <= 1e-12 * std::max(1.0, std::abs(w.times[j])),
            "R and R0 sampled at different times");
  BootstrapCheck b;
  bool first = true;
  for (std::size_t j = 0; j < w.times.size(); ++j) {
    if (w.R[j] > 2.0 * r0.R0[j]) {
      b.holds = false;
      b.violations.push_back(j);
    }
    if (r0.R0[j] > 0.0) b.worst_ratio = std::max(b.worst_ratio, w.R[j] / r0.R0[j]);
    if (w.times[j] > 0.0) {
      double m = 2.0 * r0.R0[j] - w.R[j];
      b.margin = first ? m : std::min(b.margin, m);
      first = false;
    }
  }
  return b;
}

struct TheoremReport {
  double smoothing_c = 0.0;  // sup (sqrt(t) ||u||_inf + ||u||_n) / ||u(0)||_n
  double theorem_c = 0.0;     // (sup sqrt(t) ||grad m||_inf + sup ||grad m||_n) / ||grad m0||_n
  double ln_c = 0.0;          // sup ||u||_n / ||u(0)||_n
  bool h1_nonincreasing = true;
  double h1_worst_increase = 0.0;
  std::vector<std::size_t> h1_violations;
};

/// Empirical constants of the global bounds. |u| = |grad m| pointwise, so the
/// u-norms are read from the gradient columns.
inline TheoremReport check_theorem_bounds(const NormSeries& s, double h1_slack = 1e-10) {
  require(!s.records.empty(), "empty norm series");
  TheoremReport rep;
  const double g0 = s.records.front().ln_grad;
  double alpha = 0.0, sup_weighted_inf = 0.0, sup_ln = 0.0;
  for (const auto& r : s.records) {
    const double rt = std::sqrt(std::max(r.t, 0.0));
    alpha = std::max(alpha, rt * r.linf_grad + r.ln_grad);
    sup_weighted_inf = std::max(sup_weighted_inf, rt * r.linf_grad);
    sup_ln = std::max(sup_ln, r.ln_grad);
  }
  if (g0 > 0.0) {
    rep.smoothing_c = alpha / g0;
    rep.theorem_c = (sup_weighted_inf + sup_ln) / g0;
    rep.ln_c = sup_ln / g0;
  }
  const double h0 = s.records.front().h1_dev;
  for (std::size_t j = 1; j < s.records.size(); ++j) {
    double inc = s.records[j].h1_dev - s.records[j - 1].h1_dev;
    rep.h1_worst_increase = std::max(rep.h1_worst_increase, inc);
    if (inc > h1_slack * std::max(h0, 1e-300)) {
      rep.h1_nonincreasing = false;
      rep.h1_violations.push_back(j);
    }
  }
  return rep;
}

enum class SeriesField { Energy, LinfGrad, LnGrad, H1Dev, LinfDev };

inline const char* to_string(SeriesField f) {
  switch (f) {
    case SeriesField::Energy: return "energy";
    case SeriesField::LinfGrad: return "linf_grad";
    case SeriesField::LnGrad: return "ln_grad";
    case SeriesField::H1Dev: return "h1_dev";
    case SeriesField::LinfDev: return "linf_dev";
  }
  return "unknown";
}

inline SeriesField series_field_from_string(const std::string& s) {
  for (auto f : {SeriesField::Energy, SeriesField::LinfGrad, SeriesField::LnGrad, SeriesField::H1Dev,
                 SeriesField::LinfDev})
    if (s == to_string(f)) return f;
  throw Error(ErrorKind::Config, "unknown series field '" + s + "'");
}

inline double select(const NormRecord& r, SeriesField f) {
  switch (f) {
    case SeriesField::Energy: return r.energy;
    case SeriesField::LinfGrad: return r.linf_grad;
    case SeriesField::LnGrad: return r.ln_grad;
    case SeriesField::H1Dev: return r.h1_dev;
    case SeriesField::LinfDev: return r.linf_dev;
  }
  return 0.0;
}

/// Time after which the lowest nonzero mode of the box dominates: L^2 / (4 pi^2 lambda).
inline double spectral_gap_time(const NormSeries& s) {
  return s.box_length * s.box_length / (4.0 * std::numbers::pi * std::numbers::pi * s.lambda);
}

struct DecayFit {
  double exponent = 0.0;
  double constant = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double residual = 0.0;  // rms residual of the log-log regression
  std::size_t samples = 0;
  bool poor_power_law = false;
};

inline std::vector<std::size_t> window_indices(const NormSeries& s, double t0, double t1, bool enforce_gap) {
  require(t0 > 0.0 && t0 < t1, "decay window must satisfy 0 < t0 < t1", ErrorKind::OutOfRange);
  require(!s.records.empty() && t0 >= s.records.front().t && t1 <= s.records.back().t * (1 + 1e-12),
          "decay window outside the recorded times", ErrorKind::OutOfRange);
  if (enforce_gap)
    require(t1 <= spectral_gap_time(s) * (1 + 1e-12),
            "decay window ends after the spectral-gap time " + std::to_string(spectral_gap_time(s)),
            ErrorKind::OutOfRange);
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < s.records.size(); ++j)
    if (s.records[j].t >= t0 * (1 - 1e-12) && s.records[j].t <= t1 * (1 + 1e-12)) idx.push_back(j);
  require(idx.size() >= 3, "decay window holds fewer than three samples", ErrorKind::OutOfRange);
  return idx;
}

/// Least-squares fit of log(value) against log(t) over [t0, t1].
inline DecayFit fit_decay_exponent(const NormSeries& s, SeriesField field, double t0, double t1,
                                   bool enforce_gap = true, double poor_fit_threshold = 0.02) {
  auto idx = window_indices(s, t0, t1, enforce_gap);
  std::vector<double> x, y;
  for (auto j : idx) {
    double v = select(s.records[j], field);
    require(v > 0.0, std::string("non-positive ") + to_string(field) + " in decay window");
    x.push_back(std::log(s.records[j].t));
    y.push_back(std::log(v));
  }
  auto line = fit::least_squares_line(x, y);
  DecayFit d;
  d.exponent = line.slope;
  d.constant = std::exp(line.intercept);
  d.t0 = t0;
  d.t1 = t1;
  d.residual = line.rms_residual;
  d.samples = idx.size();
  d.poor_power_law = line.rms_residual > poor_fit_threshold;
  return d;
}

struct DecayBoundCheck {
  double exponent = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  fit::EnvelopeFit envelope;
  bool holds() const { return envelope.violations.empty(); }
};

/// One-sided check ||m - m_inf||_{L^inf} <= c t^exponent on [t0, t1] with c
/// fitted on the first quarter of the window samples.
inline DecayBoundCheck check_decay_bound(const NormSeries& s, double t0, double t1,
                                         std::optional<double> exponent = std::nullopt) {
  const double n = static_cast<double>(s.dimension);
  DecayBoundCheck c;
  c.exponent = exponent.value_or(-(n - 2.0) / (2.0 * n));
  c.t0 = t0;
  c.t1 = t1;
  auto idx = window_indices(s, t0, t1, true);
  std::vector<double> t, y;
  for (auto j : idx) {
    t.push_back(s.records[j].t);
    y.push_back(s.records[j].linf_dev);
  }
  c.envelope = fit::fit_power_envelope(t, y, c.exponent);
  return c;
}

/// One CSV row per sample; delta is repeated on every row and derived or
/// weighted columns are left empty when absent.
inline void write_series_csv(std::ostream& os, const NormSeries& s, const WeightedNorms* w = nullptr) {
  csv::write_row(os, {"t", "delta", "energy", "linf_grad", "ln_grad", "h1_dev", "linf_dev", "u_l_n_over_delta",
                      "grad_u_l_n", "u_l_n", "u_l_inf", "K", "K_prime", "R"});
  if (w) require(w->times.size() == s.size(), "weighted norms do not match the series");
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& r = s.records[j];
    std::vector<std::string> row{csv::number(r.t),        csv::number(s.delta),    csv::number(r.energy),
                                 csv::number(r.linf_grad), csv::number(r.ln_grad), csv::number(r.h1_dev),
                                 csv::number(r.linf_dev)};
    if (r.derived) {
      for (double v : {r.derived->u_l_n_over_delta, r.derived->grad_u_l_n, r.derived->u_l_n, r.derived->u_l_inf})
        row.push_back(csv::number(v));
    } else {
      row.insert(row.end(), 4, "");
    }
    if (w) {
      for (double v : {w->K[j], w->K_prime[j], w->R[j]}) row.push_back(csv::number(v));
    } else {
      row.insert(row.end(), 3, "");
    }
    csv::write_row(os, row);
  }
}

}  // namespace llg

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "llg/error.hpp"

namespace llg::fit {

/// Number of leading samples used to fit a constant; the rest are held out.
inline std::size_t fit_window_size(std::size_t count) {
  return std::max<std::size_t>(1, (count + 3) / 4);
}

struct EnvelopeFit {
  double constant = 0.0;
  std::size_t fit_count = 0;
  std::vector<std::size_t> violations;  // held-out indices where the envelope fails
  double worst_ratio = 0.0;             // max value / envelope over held-out samples
};

/// Gronwall-type envelope y_i <= y_0 exp(c I_i). The constant is the smallest
/// c >= 0 that covers the first quarter of the samples; the remainder is tested.
inline EnvelopeFit fit_exponential_envelope(const std::vector<double>& y, const std::vector<double>& integral,
                                            double slack = 1e-9) {
  require(y.size() == integral.size() && !y.empty(), "envelope fit needs matching non-empty series");
  EnvelopeFit out;
  out.fit_count = fit_window_size(y.size());
  const double y0 = y.front();
  for (std::size_t i = 1; i < out.fit_count; ++i) {
    if (integral[i] <= 0.0 || y0 <= 0.0 || y[i] <= 0.0) continue;
    out.constant = std::max(out.constant, std::log(y[i] / y0) / integral[i]);
  }
  for (std::size_t i = out.fit_count; i < y.size(); ++i) {
    double env = y0 * std::exp(out.constant * integral[i]);
    double ratio = env > 0.0 ? y[i] / env : (y[i] > 0.0 ? INFINITY : 0.0);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (y[i] > env * (1.0 + slack) + 1e-300) out.violations.push_back(i);
  }
  return out;
}

/// Power-law envelope y_i <= c t_i^exponent on samples with t_i > 0, fitted on the
/// first quarter of those samples and tested on the remainder.
inline EnvelopeFit fit_power_envelope(const std::vector<double>& t, const std::vector<double>& y,
                                      double exponent, double slack = 1e-9) {
  require(t.size() == y.size() && !t.empty(), "envelope fit needs matching non-empty series");
  for (double ti : t) require(ti > 0.0, "power envelope needs positive times");
  EnvelopeFit out;
  out.fit_count = fit_window_size(t.size());
  for (std::size_t i = 0; i < out.fit_count; ++i)
    out.constant = std::max(out.constant, y[i] * std::pow(t[i], -exponent));
  for (std::size_t i = out.fit_count; i < t.size(); ++i) {
    double env = out.constant * std::pow(t[i], exponent);
    double ratio = env > 0.0 ? y[i] / env : (y[i] > 0.0 ? INFINITY : 0.0);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (y[i] > env * (1.0 + slack)) out.violations.push_back(i);
  }
  return out;
}

/// Cumulative trapezoid integral of samples (t_i, f_i), starting at 0.
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  require(t.size() == f.size(), "trapezoid needs matching series");
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

/// Integral over [a, b] of the piecewise-linear interpolant of (t_i, f_i).
inline double integrate_window(const std::vector<double>& t, const std::vector<double>& f, double a, double b) {
  require(t.size() == f.size() && t.size() >= 2, "window integral needs at least two samples");
  require(a >= t.front() - 1e-12 && b <= t.back() + 1e-12 && a <= b, "integration window outside samples");
  auto value_at = [&](double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - t.begin(), 1, t.size() - 1));
    double w = (x - t[j - 1]) / (t[j] - t[j - 1]);
    return (1.0 - w) * f[j - 1] + w * f[j];
  };
  std::vector<double> xs{a};
  std::vector<double> ys{value_at(a)};
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > a && t[i] < b) {
      xs.push_back(t[i]);
      ys.push_back(f[i]);
    }
  xs.push_back(b);
  ys.push_back(value_at(b));
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  return acc;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

}  // namespace llg::fit

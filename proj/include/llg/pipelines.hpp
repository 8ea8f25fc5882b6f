#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "llg/config.hpp"
#include "llg/covariant_cgl.hpp"
#include "llg/csv.hpp"
#include "llg/field_io.hpp"
#include "llg/llg_solver.hpp"
#include "llg/moving_frame.hpp"
#include "llg/norms_monitor.hpp"
#include "llg/scenario.hpp"

namespace llg::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kBlowUp = 10,
  kFrameDegenerate = 11,
  kNoContraction = 12,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BlowUpSuspected:
    case ErrorKind::ProjectionDegenerate:
    case ErrorKind::NonFinite: return kBlowUp;
    case ErrorKind::FrameDegenerate:
    case ErrorKind::MollifierDegenerate: return kFrameDegenerate;
    case ErrorKind::NoContraction:
    case ErrorKind::MaxIterations:
    case ErrorKind::SmallnessGate: return kNoContraction;
    case ErrorKind::Io: return kIoError;
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
    case ErrorKind::OutOfRange: return kConfigError;
  }
  return kConfigError;
}

struct RunReport {
  int exit_code = kOk;
  json summary;
};

namespace detail {

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class RunOutput {
 public:
  RunOutput(std::string command, const RunConfig& cfg) : dir_(cfg.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
    summary_["schema_version"] = 1;
    summary_["command"] = std::move(command);
    summary_["status"] = "ok";
    summary_["exit_code"] = 0;
    summary_["error"] = nullptr;
    json conf = json::object();
    for (const auto& [k, v] : cfg.echo) conf[k] = v;
    summary_["config"] = conf;
    summary_["outputs"] = json::array();
    summary_["results"] = json::object();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name), std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path(name));
    summary_["outputs"].push_back(name);
    return os;
  }

  void field(const std::string& name, const RealVectorField& v) {
    io::write_field(path(name), v);
    summary_["outputs"].push_back(name);
  }
  void field(const std::string& name, const ComplexVectorField& v) {
    io::write_field(path(name), v);
    summary_["outputs"].push_back(name);
  }

  /// Spin field plus a sidecar holding its time, so --resume can continue.
  void checkpoint(const std::string& name, const SpinField& s, double t) {
    field(name, s.m);
    auto os = open(name + ".json");
    json meta{{"t", t}, {"m_infinity", s.m_infinity}};
    os << meta.dump(2) << "\n";
  }

  json& results() { return summary_["results"]; }

  RunReport fail(const Error& e, std::optional<double> time = std::nullopt) {
    return fail(e.kind(), e.message(), time);
  }
  RunReport fail(ErrorKind kind, const std::string& message, std::optional<double> time) {
    summary_["status"] = "failed";
    summary_["exit_code"] = exit_code_for(kind);
    summary_["error"] = {{"kind", to_string(kind)}, {"message", message},
                         {"time", time ? json(*time) : json(nullptr)}};
    return finish();
  }

  RunReport finish() {
    std::ofstream os(path("summary.json"), std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path("summary.json"));
    os << summary_.dump(2) << "\n";
    return {summary_["exit_code"].get<int>(), summary_};
  }

 private:
  std::filesystem::path dir_;
  json summary_;
};

struct LoadedField {
  SpinField field;
  double t = 0.0;
};

inline LoadedField load_checkpoint(const std::string& path, const RunConfig& cfg) {
  auto comps = io::read_real_field(path);
  require(comps.size() == 3, "checkpoint " + path + " does not hold a 3-component spin field", ErrorKind::Io);
  require(comps.front().grid() == cfg.grid, "checkpoint grid does not match grid.* in the config", ErrorKind::Config);
  Vec3 m_inf = cfg.scenario.m_infinity;
  double t = 0.0;
  std::ifstream meta(path + ".json");
  if (meta) {
    try {
      json j = json::parse(meta);
      t = j.value("t", 0.0);
      if (j.contains("m_infinity")) m_inf = j["m_infinity"].get<Vec3>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Io, "unreadable checkpoint metadata " + path + ".json: " + e.what());
    }
  }
  SpinField s(std::move(comps), m_inf);
  s.require_unit(1e-10, "checkpoint");
  return {std::move(s), t};
}

inline SpinField initial_field(const RunConfig& cfg, const std::optional<std::string>& resume, double& t0) {
  t0 = 0.0;
  if (resume) {
    auto loaded = load_checkpoint(*resume, cfg);
    t0 = loaded.t;
    return std::move(loaded.field);
  }
  return make_initial(cfg.scenario, cfg.grid);
}

inline Vec3 frame_reference(const RunConfig& cfg, const SpinField& s) {
  return cfg.frames.reference.value_or(default_reference(s.m_infinity));
}

inline std::optional<std::array<double, 2>> decay_window(const RunConfig& cfg, const NormSeries& s) {
  if (s.records.empty()) return std::nullopt;
  std::array<double, 2> w{0.1, 0.5 * spectral_gap_time(s)};
  if (cfg.monitor.decay_window) w = *cfg.monitor.decay_window;
  w[1] = std::min(w[1], s.records.back().t);
  if (!(w[0] >= s.records.front().t && w[0] < w[1])) return std::nullopt;
  return w;
}

/// Theorem constants, H1 monotonicity and the decay checks shared by run-llg and monitor.
inline void monitor_results(json& out, const RunConfig& cfg, const NormSeries& s) {
  auto th = check_theorem_bounds(s);
  out["theorem"] = {{"smoothing_c", th.smoothing_c},
                    {"theorem_c", th.theorem_c},
                    {"ln_c", th.ln_c},
                    {"h1_nonincreasing", th.h1_nonincreasing},
                    {"h1_worst_increase", th.h1_worst_increase}};
  out["spectral_gap_time"] = spectral_gap_time(s);
  auto window = decay_window(cfg, s);
  if (!window) {
    out["decay"] = nullptr;
    return;
  }
  json decay{{"window", {(*window)[0], (*window)[1]}}};
  try {
    auto bound = check_decay_bound(s, (*window)[0], (*window)[1]);
    decay["exponent"] = bound.exponent;
    decay["bound_holds"] = bound.holds();
    decay["fitted_c"] = bound.envelope.constant;
    decay["worst_ratio"] = finite_or_null(bound.envelope.worst_ratio);
    auto fit = fit_decay_exponent(s, SeriesField::LinfDev, (*window)[0], (*window)[1]);
    decay["fitted_exponent"] = fit.exponent;
    decay["fit_residual"] = fit.residual;
    decay["poor_power_law"] = fit.poor_power_law;
  } catch (const Error& e) {
    decay["skipped"] = e.message();
  }
  out["decay"] = decay;
}

}  // namespace detail

/// Evolves the configured initial data, monitors it and writes norms.csv,
/// bootstrap.csv, final.bin (plus checkpoints) and summary.json.
inline RunReport run_llg(const RunConfig& cfg, const std::optional<std::string>& resume = std::nullopt) {
  detail::RunOutput out("run-llg", cfg);
  double t0 = 0.0;
  SpinField m0 = detail::initial_field(cfg, resume, t0);
  SolverConfig solver = cfg.solver;
  require(cfg.solver.t_end - t0 >= cfg.solver.dt, "checkpoint time is already at or past solver.t_end",
          ErrorKind::Config);
  solver.t_end = cfg.solver.t_end - t0;

  Trajectory traj = evolve(m0, solver);
  for (auto& t : traj.times) t += t0;
  for (auto& r : traj.norms.records) r.t += t0;
  traj.norms.delta = cfg.monitor.delta;

  auto& res = out.results();
  res["start_time"] = t0;
  res["samples"] = traj.size();
  res["final_time"] = traj.times.back();
  res["energy_initial"] = traj.norms.records.front().energy;
  res["energy_final"] = traj.norms.records.back().energy;
  bool energy_down = true;
  for (std::size_t j = 1; j < traj.size(); ++j)
    energy_down = energy_down && traj.norms.records[j].energy <= traj.norms.records[j - 1].energy * (1 + 1e-12);
  res["energy_nonincreasing"] = energy_down;
  res["max_projection_defect"] = *std::max_element(traj.projection_defect.begin(), traj.projection_defect.end());
  if (traj.size() >= 3) res["energy_law_max_normalized"] = energy_law_residual(traj).max_normalized();

  if (cfg.scenario.kind == ScenarioKind::LinearWave && !resume && traj.size() >= 2) {
    const double k0 = 2.0 * std::numbers::pi / cfg.grid.length;
    double k2 = 0.0;
    for (int a = 0; a < cfg.grid.dimension; ++a) k2 += std::pow(k0 * cfg.scenario.wavevector[a], 2);
    std::vector<double> x, y;
    for (const auto& r : traj.norms.records)
      if (r.linf_grad > 0.0) {
        x.push_back(r.t);
        y.push_back(std::log(r.linf_grad));
      }
    if (x.size() >= 2 && k2 > 0.0) {
      auto line = fit::least_squares_line(x, y);
      res["linear_wave"] = {{"fitted_decay_rate", -line.slope},
                            {"expected_decay_rate", cfg.solver.lambda * k2},
                            {"relative_error", std::abs(-line.slope - cfg.solver.lambda * k2) /
                                                   (cfg.solver.lambda * k2)}};
    }
  }

  std::optional<WeightedNorms> weighted;
  if (cfg.monitor.derived && !resume) {
    try {
      auto u0 = attach_derived_norms(traj, cfg.monitor.delta, detail::frame_reference(cfg, m0));
      weighted = weighted_norms(traj.norms, cfg.monitor.delta);
      auto r0 = r0_series(u0, traj.times, cfg.monitor.delta, cfg.solver.lambda);
      auto boot = check_bootstrap(*weighted, r0);
      res["bootstrap"] = {{"holds", boot.holds},
                          {"margin", boot.margin},
                          {"worst_R_over_R0", boot.worst_ratio},
                          {"r0_fitted_c", r0.fitted_c}};
      auto os = out.open("bootstrap.csv");
      csv::write_row(os, {"t", "delta", "R", "R0"});
      for (std::size_t j = 0; j < traj.size(); ++j)
        csv::write_row(os, {csv::number(traj.times[j]), csv::number(cfg.monitor.delta), csv::number(weighted->R[j]),
                            csv::number(r0.R0[j])});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FrameDegenerate) throw;
      for (auto& r : traj.norms.records) r.derived.reset();
      auto os = out.open("norms.csv");
      write_series_csv(os, traj.norms);
      return out.fail(e);
    }
  }

  detail::monitor_results(res, cfg, traj.norms);
  {
    auto os = out.open("norms.csv");
    write_series_csv(os, traj.norms, weighted ? &*weighted : nullptr);
  }
  if (cfg.checkpoint_every > 0)
    for (std::size_t j = static_cast<std::size_t>(cfg.checkpoint_every); j < traj.size();
         j += static_cast<std::size_t>(cfg.checkpoint_every)) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(5) << std::setfill('0') << j << ".bin";
      out.checkpoint(name.str(), traj.snapshots[j], traj.times[j]);
    }
  out.checkpoint("final.bin", traj.snapshots.back(), traj.times.back());

  if (traj.failure) return out.fail(traj.failure->kind, traj.failure->message, traj.failure->time + t0);
  return out.finish();
}

/// Frame, connection and derived field of one spin field (the checkpoint given
/// by --resume, or the configured scenario), with identity residuals.
inline RunReport run_frames(const RunConfig& cfg, const std::optional<std::string>& resume = std::nullopt) {
  detail::RunOutput out("run-frames", cfg);
  double t = 0.0;
  SpinField s = detail::initial_field(cfg, resume, t);
  FrameSnapshot snap;
  try {
    snap = extract_frame(s, detail::frame_reference(cfg, s), cfg.solver.lambda, cfg.frames.coulomb_gauge);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FrameDegenerate) throw;
    return out.fail(e, t);
  }
  auto defects = frame_defects(s, snap.frame);
  const double torsion = verify_torsion(snap.u, snap.a);
  const double curvature = verify_curvature(snap.u, snap.a);
  const auto u0 = verify_u0_consistency(snap.u, snap.a, cfg.solver.lambda);
  const double div_a = max_abs(spectral::divergence(snap.a.a));
  double a_scale = 0.0;
  for (const auto& c : snap.a.a) a_scale = std::max(a_scale, max_abs(c));
  double u_inf = spectral::lp_norm(snap.u.u, INFINITY);
  const double tol = cfg.frames.residual_tolerance * (1.0 + u_inf * u_inf);

  {
    auto os = out.open("frames.csv");
    csv::write_row(os, {"t", "torsion", "curvature", "u0_consistency", "u0_consistency_relative", "div_a",
                        "frame_norm_defect", "frame_orthogonality_defect", "frame_product_defect"});
    csv::write_row(os, {csv::number(t), csv::number(torsion), csv::number(curvature), csv::number(u0.absolute),
                        csv::number(u0.relative), csv::number(div_a), csv::number(defects.norm),
                        csv::number(defects.orthogonal), csv::number(defects.product)});
  }
  RealVectorField conn = snap.a.a;
  conn.insert(conn.begin(), *snap.a.a0);
  out.field("connection.bin", conn);
  ComplexVectorField derived = snap.u.u;
  derived.insert(derived.begin(), *snap.u.u0);
  out.field("derived.bin", derived);
  if (snap.theta) out.field("gauge_theta.bin", RealVectorField{snap.theta->theta});

  auto& res = out.results();
  res["time"] = t;
  res["torsion"] = torsion;
  res["curvature"] = curvature;
  res["u0_consistency"] = u0.absolute;
  res["div_a"] = div_a;
  res["div_a_relative"] = a_scale > 0.0 ? div_a / a_scale : 0.0;
  res["coulomb_gauge"] = cfg.frames.coulomb_gauge;
  res["tolerance"] = tol;
  res["within_tolerance"] = torsion < tol && curvature < tol && u0.absolute < tol;
  return out.finish();
}

/// Relative L^n gap between a Picard trajectory and frame-extracted u from an
/// RK4 LLG run sampled on the same mesh, after removing the best constant phase
/// at each time (a0 is fixed only up to a spatial constant).
inline std::vector<double> compare_with_llg(const SpinField& m0, const PicardResult& picard, double lambda,
                                            double dt, const Vec3& reference) {
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.scheme = Scheme::Rk4Projection;
  std::vector<double> gaps{0.0};
  SpinField s = m0;
  const double n = static_cast<double>(m0.grid().dimension);
  for (std::size_t j = 1; j < picard.times.size(); ++j) {
    cfg.t_end = picard.times[j] - picard.times[j - 1];
    cfg.dt = std::min(dt, cfg.t_end);
    cfg.record_every = std::numeric_limits<int>::max();
    auto traj = evolve(s, cfg);
    if (traj.failure) throw Error(traj.failure->kind, traj.failure->message);
    s = traj.snapshots.back();
    auto u = extract_frame(s, reference, std::nullopt, true).u.u;
    const auto& v = picard.u[j];
    cplx inner = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c)
      for (std::size_t i = 0; i < u[c].size(); ++i) inner += std::conj(v[c][i]) * u[c][i];
    const cplx phase = std::abs(inner) > 0.0 ? inner / std::abs(inner) : cplx(1.0, 0.0);
    ComplexVectorField d = u;
    for (std::size_t c = 0; c < u.size(); ++c)
      for (std::size_t i = 0; i < u[c].size(); ++i) d[c][i] -= phase * v[c][i];
    const double ref = spectral::lp_norm(u, n);
    const double gap = spectral::lp_norm(d, n);
    gaps.push_back(ref > 0.0 ? gap / ref : gap);
  }
  return gaps;
}

/// Picard solve of the covariant equation from the Coulomb-gauged u of the initial data.
inline RunReport run_picard(const RunConfig& cfg, const std::optional<std::string>& resume = std::nullopt) {
  detail::RunOutput out("run-picard", cfg);
  double t0 = 0.0;
  SpinField m0 = detail::initial_field(cfg, resume, t0);
  const Vec3 reference = detail::frame_reference(cfg, m0);
  ComplexVectorField u0;
  try {
    u0 = derived_field_of(m0, reference);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FrameDegenerate) throw;
    return out.fail(e, t0);
  }
  auto mesh = graded_mesh(cfg.picard.t_end, cfg.picard.intervals);
  PicardOptions opt;
  opt.lambda = cfg.solver.lambda;
  opt.max_iter = cfg.picard.max_iter;
  opt.tol = cfg.picard.tol;
  opt.smallness_gate = cfg.picard.smallness_gate;
  opt.dealias = cfg.solver.dealias;
  std::vector<PicardIterate> history;
  opt.on_iterate = [&](const PicardIterate& it) { history.push_back(it); };

  auto write_history = [&] {
    auto os = out.open("picard_history.csv");
    csv::write_row(os, {"iteration", "sup_difference", "contraction_ratio"});
    for (const auto& h : history)
      csv::write_row(os, {std::to_string(h.iteration), csv::number(h.sup_difference),
                          csv::number(h.contraction_ratio)});
  };

  auto& res = out.results();
  res["u0_ln"] = ln_norm(u0);
  res["mesh_points"] = mesh.size();
  PicardResult pr;
  try {
    pr = picard_solve(u0, mesh, opt);
  } catch (const Error& e) {
    write_history();
    res["iterations"] = history.size();
    return out.fail(e);
  }
  write_history();
  res["iterations"] = pr.history.size();
  res["converged"] = pr.converged;
  res["final_difference"] = pr.history.back().sup_difference;
  res["max_contraction_ratio"] = pr.max_contraction_ratio();

  std::vector<double> gaps;
  if (cfg.picard.compare_llg) {
    gaps = compare_with_llg(m0, pr, cfg.solver.lambda, cfg.picard.llg_dt, reference);
    res["llg_max_relative_gap"] = *std::max_element(gaps.begin(), gaps.end());
  }
  {
    auto os = out.open("picard_norms.csv");
    std::vector<std::string> head{"t", "delta", "u_l_n", "u_l_n_over_delta", "grad_u_l_n", "u_l_inf"};
    if (!gaps.empty()) head.push_back("llg_relative_gap");
    csv::write_row(os, head);
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      auto d = derived_norms(pr.u[j], cfg.monitor.delta);
      std::vector<std::string> row{csv::number(mesh[j]),         csv::number(cfg.monitor.delta),
                                   csv::number(d.u_l_n),          csv::number(d.u_l_n_over_delta),
                                   csv::number(d.grad_u_l_n),     csv::number(d.u_l_inf)};
      if (!gaps.empty()) row.push_back(csv::number(gaps[j]));
      csv::write_row(os, row);
    }
  }
  out.field("picard_final.bin", pr.u.back());
  return out.finish();
}

/// Reads a norms CSV written by run-llg.
inline NormSeries read_norms_csv(const std::string& path, const RunConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open norms CSV " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto rows = csv::parse(buf.str());
  require(rows.size() >= 2, "norms CSV " + path + " has no samples", ErrorKind::Io);
  const auto& head = rows.front();
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < head.size(); ++i)
      if (head[i] == name) return i;
    throw Error(ErrorKind::Io, "norms CSV " + path + " lacks column '" + name + "'");
  };
  NormSeries s;
  s.dimension = cfg.grid.dimension;
  s.box_length = cfg.grid.length;
  s.lambda = cfg.solver.lambda;
  const std::size_t ct = col("t"), cd = col("delta"), ce = col("energy"), cg = col("linf_grad"), cn = col("ln_grad"),
                    ch = col("h1_dev"), cl = col("linf_dev"), cu = col("u_l_n_over_delta"), cgu = col("grad_u_l_n"),
                    cun = col("u_l_n"), cui = col("u_l_inf");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require(row.size() == head.size(), "norms CSV row " + std::to_string(r + 1) + " has the wrong width",
            ErrorKind::Io);
    auto num = [&](std::size_t c) {
      auto v = csv::to_number(row[c]);
      if (!v) throw Error(ErrorKind::Io, "norms CSV row " + std::to_string(r + 1) + ": bad number '" + row[c] + "'");
      return *v;
    };
    double delta = num(cd);
    if (r == 1) s.delta = delta;
    require(delta == s.delta, "norms CSV mixes delta values", ErrorKind::Io);
    NormRecord rec;
    rec.t = num(ct);
    rec.energy = num(ce);
    rec.linf_grad = num(cg);
    rec.ln_grad = num(cn);
    rec.h1_dev = num(ch);
    rec.linf_dev = num(cl);
    if (!row[cu].empty()) rec.derived = DerivedNorms{num(cu), num(cgu), num(cun), num(cui)};
    s.append(rec);
  }
  return s;
}

/// Re-evaluates the monitor suite on a stored norms CSV (monitor.input or --resume).
inline RunReport run_monitor(const RunConfig& cfg, const std::optional<std::string>& input = std::nullopt) {
  detail::RunOutput out("monitor", cfg);
  std::string path = input.value_or(cfg.monitor.input);
  require(!path.empty(), "monitor needs monitor.input or --resume pointing at a norms CSV", ErrorKind::Config);
  NormSeries s = read_norms_csv(path, cfg);
  auto& res = out.results();
  res["input"] = path;
  res["samples"] = s.size();
  res["delta"] = s.delta;
  std::optional<WeightedNorms> w;
  if (s.has_derived()) {
    w = weighted_norms(s, s.delta);
    res["R_final"] = w->R.back();
  }
  detail::monitor_results(res, cfg, s);
  auto os = out.open("monitor.csv");
  write_series_csv(os, s, w ? &*w : nullptr);
  return out.finish();
}

}  // namespace llg::cli

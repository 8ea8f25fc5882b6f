#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "llg/covariant_cgl.hpp"
#include "llg/llg_solver.hpp"
#include "llg/moving_frame.hpp"
#include "llg/scenario.hpp"

using namespace llg;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

SpinField random_field(int n, int N, unsigned seed, double scale) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::RandomSmall;
  spec.amplitude = scale;
  spec.seed = seed;
  spec.mode_cutoff = 2;
  return make_initial(spec, GridSpec(n, N, 2 * kPi));
}

ComplexVectorField gauged_u(const SpinField& s) { return extract_frame(s, {1, 0, 0}, std::nullopt, true).u.u; }

ComplexVectorField single_mode(const GridSpec& g, double amp) {
  ComplexVectorField u = make_complex_vector(g, g.dimension);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.position(i);
    u[0][i] = amp * std::exp(cplx(0, x[1]));
    if (g.dimension > 1) u[1][i] = amp * cplx(0.5, 0.0) * std::exp(cplx(0, x[0]));
  }
  return u;
}

double max_abs(const ComplexVectorField& v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, llg::max_abs(c));
  return m;
}

ComplexVectorField rotate(ComplexVectorField u, double phi) {
  for (auto& c : u) c *= std::exp(cplx(0, phi));
  return u;
}

}  // namespace

TEST_CASE("connection of zero and real fields vanishes") {
  GridSpec g(3, 8, 2 * kPi);
  auto zero = make_complex_vector(g, 3);
  for (const auto& a : connection_from_u(zero)) CHECK(llg::max_abs(a) == 0.0);
  auto real = single_mode(g, 0.3);
  for (auto& c : real)
    for (auto& v : c) v = std::abs(v);
  for (const auto& a : connection_from_u(real)) CHECK(llg::max_abs(a) < 1e-15);
}

TEST_CASE("connection is divergence free and solves its Poisson problem") {
  auto u = gauged_u(random_field(3, 16, 4, 0.4));
  auto a = connection_from_u(u, false);
  CHECK(llg::max_abs(spectral::divergence(a)) < 1e-10 * (1.0 + max_abs(u) * max_abs(u)));
  for (std::size_t l = 0; l < 3; ++l) {
    RealVectorField src = make_real_vector(u[0].grid(), 3);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < src[k].size(); ++i) src[k][i] = (u[l][i] * std::conj(u[k][i])).imag();
    RealField lhs = spectral::divergence(spectral::gradient(a[l]));
    RealField rhs = spectral::divergence(src);
    CHECK(llg::max_abs(lhs + rhs) < 1e-10);
    CHECK(std::abs(mean(a[l])) < 1e-14);
  }
}

TEST_CASE("connection from u matches the gauge-fixed frame connection") {
  std::vector<double> err;
  for (int N : {16, 32}) {
    auto snap = extract_frame(random_field(3, N, 9, 0.4), {1, 0, 0}, std::nullopt, true);
    auto a = connection_from_u(snap.u.u, false);
    double e = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      RealField ref = snap.a.a[k];
      double m = mean(ref);
      for (auto& v : ref) v -= m;
      e = std::max(e, llg::max_abs(a[k] - ref));
    }
    err.push_back(e);
  }
  CHECK(err[1] < 1e-6);
  CHECK(err[1] < err[0]);
}

TEST_CASE("a0 decomposition solves both elliptic problems") {
  GridSpec g(3, 8, 2 * kPi);
  auto zero = make_complex_vector(g, 3);
  auto z = a0_decompose(zero, make_real_vector(g, 3), 1.0);
  CHECK(llg::max_abs(z.a0_1) == 0.0);
  CHECK(llg::max_abs(z.a0_2) == 0.0);

  const double lambda = 0.8;
  auto u = gauged_u(random_field(3, 16, 2, 0.4));
  auto a = connection_from_u(u, false);
  auto d = a0_decompose(u, a, lambda, false);
  const GridSpec& gu = u[0].grid();

  ComplexField div = spectral::divergence(u);
  ComplexField u0(gu);
  for (std::size_t i = 0; i < gu.size(); ++i) {
    cplx adotu = 0.0;
    for (std::size_t k = 0; k < 3; ++k) adotu += a[k][i] * u[k][i];
    u0[i] = cplx(lambda, -1.0) * (div[i] + cplx(0, 1) * adotu);
  }
  RealVectorField s1 = make_real_vector(gu, 3), s2 = make_real_vector(gu, 3), s = make_real_vector(gu, 3);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < gu.size(); ++i) {
      cplx z1 = std::conj(u[k][i]) * div[i];
      cplx adotu = 0.0;
      for (std::size_t j = 0; j < 3; ++j) adotu += a[j][i] * u[j][i];
      cplx z2 = std::conj(u[k][i]) * adotu;
      s1[k][i] = lambda * z1.imag() - z1.real();
      s2[k][i] = lambda * z2.real() + z2.imag();
      s[k][i] = (u0[i] * std::conj(u[k][i])).imag();
    }
  auto residual = [](const RealField& v, const RealVectorField& src) {
    RealField r = spectral::divergence(spectral::gradient(v)) + spectral::divergence(src);
    return llg::max_abs(r) / std::max(1e-300, llg::max_abs(spectral::divergence(src)));
  };
  CHECK(residual(d.a0_1, s1) < 1e-10);
  CHECK(residual(d.a0_2, s2) < 1e-10);
  CHECK(residual(d.total(), s) < 1e-10);
}

TEST_CASE("nonlinearity split agrees with direct evaluation") {
  GridSpec g(3, 8, 2 * kPi);
  auto zero = make_complex_vector(g, 3);
  auto F0 = nonlinearity_of(zero, 1.0);
  CHECK(max_abs(F0.total()) == 0.0);

  auto real = single_mode(g, 0.3);
  for (auto& c : real)
    for (auto& v : c) v = std::abs(v);
  CHECK(max_abs(nonlinearity_of(real, 1.0).f1) < 1e-15);

  const double lambda = 1.3;
  auto u = gauged_u(random_field(3, 16, 6, 0.4));
  auto a = connection_from_u(u, false);
  auto a0 = a0_decompose(u, a, lambda, false);
  auto F = assemble_F(u, a, a0, lambda, false).total();
  RealField a0t = a0.total();
  const cplx c(lambda, -1.0), I(0, 1);
  double err = 0.0, scale = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    auto grad = spectral::gradient(u[l]);
    for (std::size_t i = 0; i < u[l].size(); ++i) {
      cplx cubic = 0.0, transport = 0.0;
      double a2 = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        cubic += (u[l][i] * std::conj(u[k][i])).imag() * u[k][i];
        transport += a[k][i] * grad[k][i];
        a2 += a[k][i] * a[k][i];
      }
      cplx direct = c * (I * cubic + 2.0 * I * transport - a2 * u[l][i]) - I * a0t[i] * u[l][i];
      err = std::max(err, std::abs(direct - F[l][i]));
      scale = std::max(scale, std::abs(direct));
    }
  }
  CHECK(err < 1e-8 * std::max(1.0, scale));
}

TEST_CASE("nonlinearity homogeneity") {
  auto u = gauged_u(random_field(3, 16, 8, 0.3));
  const double n = 3.0;
  auto F = nonlinearity_of(u, 1.0);
  for (double c : {0.5, 2.0}) {
    ComplexVectorField cu = u;
    for (auto& comp : cu) comp *= cplx(c, 0);
    auto Fc = nonlinearity_of(cu, 1.0);
    CHECK(spectral::lp_norm(Fc.f1, n) == Approx(std::pow(c, 3) * spectral::lp_norm(F.f1, n)).epsilon(1e-10));
    CHECK(spectral::lp_norm(Fc.f3, n) == Approx(std::pow(c, 5) * spectral::lp_norm(F.f3, n)).epsilon(1e-10));
  }
}

TEST_CASE("derived field along an LLG trajectory solves the covariant equation") {
  auto s = random_field(2, 32, 5, 0.1);
  const double lambda = 1.0;
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.scheme = Scheme::Rk4Projection;
  cfg.dealias = false;
  std::vector<double> res;
  for (double h : {4e-3, 2e-3}) {
    cfg.dt = h / 8;
    cfg.t_end = 2 * h;
    cfg.record_every = 8;
    auto traj = evolve(s, cfg);
    REQUIRE(traj.size() == 3);
    auto um = gauged_u(traj.snapshots[0]);
    auto centre = extract_frame(traj.snapshots[1], {1, 0, 0}, std::nullopt, true);
    auto up = gauged_u(traj.snapshots[2]);
    const auto& uc = centre.u.u;
    // the frame connection keeps its spatial mean, which u alone does not determine on the torus
    const auto& a = centre.a.a;
    auto F = assemble_F(uc, a, a0_decompose(uc, a, lambda, false), lambda, false).total();
    ComplexVectorField r = make_complex_vector(uc[0].grid(), 2);
    for (std::size_t l = 0; l < 2; ++l) {
      ComplexField lap = spectral::laplacian(uc[l]);
      for (std::size_t i = 0; i < r[l].size(); ++i)
        r[l][i] = (up[l][i] - um[l][i]) / (2 * h) - cplx(lambda, -1.0) * lap[i] - F[l][i];
    }
    // the Coulomb gauge leaves a0 determined up to a spatial constant
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < r[l].size(); ++i) {
        num += std::conj(cplx(0, -1) * uc[l][i]) * r[l][i];
        den += std::norm(uc[l][i]);
      }
    double c = num.real() / den;
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < r[l].size(); ++i) r[l][i] -= cplx(0, -c) * uc[l][i];
    res.push_back(max_abs(r));
  }
  CHECK(res[1] < res[0] / 3);
  CHECK(res[1] < 1e-4);
}

TEST_CASE("Duhamel integral of zero and of a constant mode") {
  GridSpec g(3, 8, 2 * kPi);
  auto mesh = graded_mesh(1.0, 20);
  std::vector<ComplexVectorField> zero(mesh.size(), make_complex_vector(g, 3));
  for (const auto& v : duhamel_history(zero, mesh, 1.0)) CHECK(max_abs(v) == 0.0);

  const double lambda = 0.7;
  auto mode = ComplexField::sample(g, [](const std::array<double, 3>& x) { return std::exp(cplx(0, x[0] + 2 * x[2])); });
  std::vector<ComplexVectorField> f(mesh.size(), ComplexVectorField{mode});
  auto hist = duhamel_history(f, mesh, lambda);
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    const double k2 = 5.0;
    cplx coeff = (1.0 - std::exp(cplx(-lambda, 1.0) * k2 * mesh[j])) / (cplx(lambda, -1.0) * k2);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(hist[j][0][i] - coeff * mode[i]));
    CHECK(err < 1e-6);
  }
}

TEST_CASE("Duhamel quadrature is second order for oscillating forcing") {
  GridSpec g(2, 8, 2 * kPi);
  const double lambda = 1.0, omega = 7.0, t = 1.0;
  auto mode = ComplexField::sample(g, [](const std::array<double, 3>& x) { return std::exp(cplx(0, x[0] + x[1])); });
  const cplx mu = cplx(-lambda, 1.0) * 2.0;
  const cplx coeff = (std::exp(cplx(0, omega * t)) - std::exp(mu * t)) / (cplx(0, omega) - mu);
  std::vector<double> err;
  for (int M : {20, 40, 80}) {
    std::vector<double> mesh;
    for (int j = 0; j <= M; ++j) mesh.push_back(t * j / M);
    std::vector<ComplexVectorField> f;
    for (double s : mesh) f.push_back({mode * std::exp(cplx(0, omega * s))});
    auto v = duhamel_convolve(f, mesh, lambda);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(v[0][i] - coeff * mode[i]));
    err.push_back(e);
  }
  CHECK(err[1] < err[0] / 4 * 1.05);
  CHECK(err[2] < err[1] / 4 * 1.05);
}

TEST_CASE("Duhamel quadrature rejects malformed meshes") {
  GridSpec g(1, 8, 1.0);
  std::vector<ComplexVectorField> one{make_complex_vector(g, 1)};
  CHECK_THROWS_AS(duhamel_convolve(one, {0.0}, 1.0), Error);
  std::vector<ComplexVectorField> two(2, make_complex_vector(g, 1));
  CHECK_THROWS_AS(duhamel_convolve(two, {0.0, 0.0}, 1.0), Error);
  CHECK_THROWS_AS(duhamel_convolve(two, {0.1, 0.2}, 1.0), Error);
  CHECK_THROWS_AS(duhamel_convolve(two, {0.0, 0.1, 0.2}, 1.0), Error);
}

TEST_CASE("graded mesh halves the spacing near zero") {
  auto m = graded_mesh(0.5, 50);
  CHECK(m.front() == 0.0);
  CHECK(m.back() == 0.5);
  CHECK(m.size() == 56);
  for (std::size_t j = 1; j < m.size(); ++j) {
    double h = m[j] - m[j - 1];
    CHECK(h == Approx(m[j] <= 0.05 + 1e-12 ? 0.005 : 0.01));
  }
  CHECK(graded_mesh(1.0, 1).size() == 2);
  CHECK_THROWS_AS(graded_mesh(0.0, 10), Error);
}

TEST_CASE("Picard from zero data converges immediately") {
  GridSpec g(3, 8, 2 * kPi);
  auto r = picard_solve(make_complex_vector(g, 3), graded_mesh(0.5, 10), {});
  CHECK(r.converged);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].sup_difference == 0.0);
  for (const auto& u : r.u) CHECK(max_abs(u) == 0.0);
}

TEST_CASE("Picard contraction improves as the data shrinks") {
  GridSpec g(3, 16, 2 * kPi);
  auto mesh = graded_mesh(0.5, 20);
  std::vector<double> ratios;
  for (double amp : {0.04, 0.02, 0.01, 0.005}) {
    PicardOptions opt;
    opt.tol = 1e-13;
    auto r = picard_solve(single_mode(g, amp), mesh, opt);
    CHECK(r.converged);
    CHECK(r.history.size() >= 2);
    ratios.push_back(r.max_contraction_ratio());
  }
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    CHECK(ratios[i] < 0.5);
    if (i > 0) CHECK(ratios[i] < ratios[i - 1]);
  }
}

TEST_CASE("Picard linear part equals the semigroup") {
  GridSpec g(2, 16, 2 * kPi);
  auto u0 = single_mode(g, 1e-5);
  auto mesh = graded_mesh(0.3, 10);
  PicardOptions opt;
  opt.tol = 1e-12;
  auto r = picard_solve(u0, mesh, opt);
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    auto lin = spectral::semigroup_apply(u0, mesh[j], opt.lambda);
    CHECK(max_abs(r.u[j] - lin) < 1e-12);
  }
}

TEST_CASE("Picard failures") {
  GridSpec g(3, 16, 2 * kPi);
  auto mesh = graded_mesh(0.5, 10);
  SECTION("smallness gate") {
    try {
      picard_solve(single_mode(g, 1.0), mesh, {});
      FAIL("expected SmallnessGate");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SmallnessGate);
    }
  }
  SECTION("iteration budget") {
    PicardOptions opt;
    opt.max_iter = 1;
    try {
      picard_solve(single_mode(g, 0.05), mesh, opt);
      FAIL("expected MaxIterations");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MaxIterations);
    }
  }
  SECTION("large data does not contract") {
    PicardOptions opt;
    opt.smallness_gate.reset();
    opt.max_iter = 30;
    try {
      picard_solve(single_mode(g, 3.0), mesh, opt);
      FAIL("expected NoContraction");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoContraction);
    }
  }
}

TEST_CASE("nonlinear bound ratios") {
  GridSpec g(3, 8, 2 * kPi);
  auto zero = verify_nonlinear_bounds(make_complex_vector(g, 3), 0.62, 1.0);
  CHECK(zero.f1 == 0.0);
  CHECK(zero.a0_2 == 0.0);
  CHECK_THROWS_AS(verify_nonlinear_bounds(make_complex_vector(g, 3), 0.6, 1.0), Error);
  CHECK_THROWS_AS(verify_nonlinear_bounds(make_complex_vector(g, 3), 0.7, 1.0), Error);

  auto u = gauged_u(random_field(3, 16, 11, 0.3));
  auto r = verify_nonlinear_bounds(u, 0.62, 1.0);
  auto rp = verify_nonlinear_bounds(rotate(u, 1.1), 0.62, 1.0);
  for (auto [x, y] : {std::pair{r.f1, rp.f1}, {r.f2, rp.f2}, {r.f3, rp.f3}, {r.a, rp.a}, {r.a0_1, rp.a0_1},
                      {r.a0_2, rp.a0_2}}) {
    CHECK(x > 0.0);
    CHECK(y == Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("nonlinear bound constants are stable under refinement") {
  NonlinearBoundRatios coarse, fine;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    for (int N : {16, 32}) {
      auto u = gauged_u(random_field(3, N, seed, 0.2));
      (N == 16 ? coarse : fine).merge_max(verify_nonlinear_bounds(u, 0.62, 1.0));
    }
  }
  for (auto [x, y] : {std::pair{coarse.f1, fine.f1}, {coarse.f2, fine.f2}, {coarse.f3, fine.f3},
                      {coarse.a, fine.a}, {coarse.a0_1, fine.a0_1}, {coarse.a0_2, fine.a0_2}}) {
    CHECK(std::isfinite(y));
    CHECK(std::abs(y - x) < 0.1 * x);
  }
}

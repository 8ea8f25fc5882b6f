#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "llg/moving_frame.hpp"
#include "llg/scenario.hpp"

using namespace llg;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

SpinField bubble_field(int n, int N, double angle = 0.6, double radius = 2.5) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::Bubble;
  spec.amplitude = angle;
  spec.radius = radius;
  return make_initial(spec, GridSpec(n, N, 2 * kPi));
}

SpinField random_field(int n, int N, unsigned seed, double scale = 0.3) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::RandomSmall;
  spec.amplitude = scale;
  spec.seed = seed;
  spec.mode_cutoff = 2;
  return make_initial(spec, GridSpec(n, N, 2 * kPi));
}

}  // namespace

TEST_CASE("frame of a constant field") {
  GridSpec g(3, 8, 1.0);
  auto s = SpinField::constant(g, {0, 0, 1});
  auto f = construct_frame(s, {1, 0, 0});
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(at3(f.X, i) == Vec3{0, -1, 0});
    CHECK(at3(f.Y, i) == Vec3{1, 0, 0});
  }
  auto [a, u] = derive_connection(s, f, 1.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(max_abs(a.a[k]) == 0.0);
    CHECK(max_abs(u.u[k]) == 0.0);
  }
  CHECK(max_abs(*a.a0) == 0.0);
  CHECK(max_abs(*u.u0) == 0.0);
  CHECK(verify_u0_consistency(u, a, 1.0).absolute == 0.0);
}

TEST_CASE("default reference is perpendicular to m_infinity") {
  CHECK(default_reference({0, 0, 1}) == Vec3{1, 0, 0});
  Vec3 m{0.6, 0.0, 0.8};
  auto e = default_reference(m);
  CHECK(std::abs(dot3(e, m)) < 1e-15);
  CHECK(norm3(e) == Approx(1.0));
}

TEST_CASE("degenerate frame reports the worst point") {
  GridSpec g(2, 8, 1.0);
  auto s = SpinField::constant(g, {0, 0, 1});
  set3(s.m, g.flatten({3, 5, 0}), {1, 0, 0});
  try {
    construct_frame(s, {1, 0, 0});
    FAIL("expected FrameDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FrameDegenerate);
    CHECK(std::string(e.what()).find("(3, 5, 0)") != std::string::npos);
  }
}

TEST_CASE("frame invariants on smooth data") {
  auto s = random_field(3, 16, 4);
  auto f = construct_frame(s, {1, 0, 0});
  auto d = frame_defects(s, f);
  CHECK(d.norm < 1e-12);
  CHECK(d.orthogonal < 1e-12);
  CHECK(d.product < 1e-12);
}

TEST_CASE("connection reconstruction, antisymmetry and |u| = |grad m|") {
  auto s = random_field(3, 32, 12, 0.2);
  const GridSpec& g = s.grid();
  auto f = construct_frame(s, {1, 0, 0});
  auto [a, u] = derive_connection(s, f, 1.0);
  double recon = 0.0, anti = 0.0, modulus = 0.0;
  for (int k = 0; k < 3; ++k) {
    std::vector<RealField> dm, dX, dY;
    for (int c = 0; c < 3; ++c) {
      dm.push_back(spectral::partial(s.m[c], k));
      dX.push_back(spectral::partial(f.X[c], k));
      dY.push_back(spectral::partial(f.Y[c], k));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      Vec3 X = at3(f.X, i), Y = at3(f.Y, i), d = at3(dm, i);
      for (int c = 0; c < 3; ++c)
        recon = std::max(recon, std::abs(d[c] - u.u[k][i].real() * X[c] - u.u[k][i].imag() * Y[c]));
      anti = std::max(anti, std::abs(dot3(at3(dX, i), Y) + dot3(at3(dY, i), X)));
      modulus = std::max(modulus, std::abs(std::abs(u.u[k][i]) - norm3(d)));
    }
  }
  CHECK(recon < 1e-8);
  CHECK(anti < 1e-8);
  CHECK(modulus < 1e-8);
}

TEST_CASE("rejects a frame that does not belong to the field") {
  auto s = bubble_field(2, 16);
  auto f = construct_frame(s, {1, 0, 0});
  auto other = SpinField::constant(s.grid(), {0, 0, 1});
  CHECK_THROWS_AS(derive_connection(other, f, 1.0), Error);
}

TEST_CASE("coulomb gauge on divergence-free and pure-gradient connections") {
  GridSpec g(2, 32, 2 * kPi);
  // divergence-free: a = (d_y psi, -d_x psi)
  auto psi = RealField::sample(g, [](auto x) { return std::sin(x[0]) * std::cos(2 * x[1]); });
  auto gp = spectral::gradient(psi);
  ConnectionField a{std::nullopt, {gp[1], gp[0] * -1.0}};
  DerivedField u{std::nullopt, {ComplexField(g, cplx(0.3, 0.1)), ComplexField(g, cplx(-0.2, 0.4))}};
  auto [as, us, theta] = coulomb_gauge(a, u);
  CHECK(max_abs(theta.theta) < 1e-14);
  for (int k = 0; k < 2; ++k) CHECK(max_abs(as.a[k] - a.a[k]) < 1e-14);

  auto chi = RealField::sample(g, [](auto x) { return std::cos(x[0] + x[1]) + 0.3 * std::sin(3 * x[1]); });
  ConnectionField grad{std::nullopt, spectral::gradient(chi)};
  auto [as2, us2, theta2] = coulomb_gauge(grad, u);
  for (int k = 0; k < 2; ++k) CHECK(max_abs(as2.a[k]) < 1e-13);
  RealField sum = theta2.theta + chi;
  CHECK(max_abs(sum) < 1e-13);
  CHECK(std::abs(mean(theta2.theta)) < 1e-15);
}

TEST_CASE("coulomb gauge on frames derived from spin fields") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    auto s = random_field(3, 16, seed);
    auto snap = extract_frame(s, {1, 0, 0}, 1.0, false);
    auto [as, us, theta] = coulomb_gauge(snap.a, snap.u);
    RealField div = spectral::divergence(as.a);
    CHECK(max_abs(div) <= 1e-10 * max_magnitude(snap.a.a));
    double curv = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (std::size_t i = 0; i < s.grid().size(); ++i) {
          double before = (snap.u.u[k][i] * std::conj(snap.u.u[l][i])).imag();
          double after = (us.u[k][i] * std::conj(us.u[l][i])).imag();
          curv = std::max(curv, std::abs(before - after));
        }
    CHECK(curv < 1e-10);
  }
}

TEST_CASE("coulomb gauge is gauge covariant") {
  auto s = random_field(2, 32, 9);
  auto snap = extract_frame(s, {1, 0, 0}, std::nullopt, false);
  auto chi = RealField::sample(s.grid(), [](auto x) { return 0.7 * std::sin(x[0] - 2 * x[1]) + 0.2 * std::cos(x[1]); });
  auto [a2, u2] = gauge_transform(snap.a, snap.u, chi);
  auto [ref_a, ref_u, ref_t] = coulomb_gauge(snap.a, snap.u);
  auto [alt_a, alt_u, alt_t] = coulomb_gauge(a2, u2);
  for (int k = 0; k < 2; ++k) CHECK(max_abs(ref_a.a[k] - alt_a.a[k]) < 1e-8);
  // equal up to one constant phase
  cplx ratio = 0.0;
  for (std::size_t i = 0; i < s.grid().size(); ++i) ratio += alt_u.u[0][i] * std::conj(ref_u.u[0][i]);
  ratio /= std::abs(ratio);
  double diff = 0.0;
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < s.grid().size(); ++i)
      diff = std::max(diff, std::abs(alt_u.u[k][i] - ratio * ref_u.u[k][i]));
  CHECK(diff < 1e-8);
}

TEST_CASE("torsion, curvature and u0 identities converge under refinement") {
  std::vector<double> torsion, curvature, u0;
  for (int N : {16, 32}) {
    auto s = random_field(3, N, 7, 0.5);
    auto snap = extract_frame(s, {1, 0, 0}, 0.7, true);
    torsion.push_back(verify_torsion(snap.u, snap.a));
    curvature.push_back(verify_curvature(snap.u, snap.a));
    u0.push_back(verify_u0_consistency(snap.u, snap.a, 0.7).relative);
  }
  CHECK(torsion[1] < torsion[0] / 8);
  CHECK(curvature[1] < curvature[0] / 8);
  CHECK(u0[1] < u0[0] / 8);
  CHECK(u0[1] < 1e-3);
}

TEST_CASE("u0 consistency with a different damping") {
  auto s = random_field(2, 32, 3, 0.2);
  for (double lambda : {0.5, 1.0, 2.0}) {
    auto snap = extract_frame(s, {1, 0, 0}, lambda, false);
    CHECK(verify_u0_consistency(snap.u, snap.a, lambda).relative < 1e-6);
  }
}

TEST_CASE("space-time curvature from two time levels") {
  auto s = random_field(2, 32, 5, 0.2);
  SolverConfig cfg;
  cfg.lambda = 1.0;
  std::vector<double> res;
  cfg.dealias = false;
  for (double dt : {8e-3, 4e-3}) {
    cfg.dt = dt / 8;
    cfg.t_end = dt;
    cfg.scheme = Scheme::Rk4Projection;
    auto traj = evolve(s, cfg);
    REQUIRE_FALSE(traj.failure);
    auto first = extract_frame(traj.snapshots.front(), {1, 0, 0}, 1.0, false);
    auto second = extract_frame(traj.snapshots.back(), {1, 0, 0}, 1.0, false);
    res.push_back(verify_curvature(first.u, first.a, second.u, second.a, dt));
  }
  CHECK(res[1] < res[0] / 3);
  CHECK(res[1] < 1e-4);
}

TEST_CASE("one-dimensional identities are vacuous") {
  auto s = random_field(1, 32, 2);
  auto snap = extract_frame(s, {1, 0, 0}, 1.0, true);
  CHECK(verify_torsion(snap.u, snap.a) == 0.0);
  CHECK(verify_curvature(snap.u, snap.a) == 0.0);
}

TEST_CASE("global phase leaves curvature unchanged") {
  auto s = random_field(2, 16, 6);
  auto snap = extract_frame(s, {1, 0, 0}, std::nullopt, false);
  double base = verify_curvature(snap.u, snap.a);
  DerivedField rotated = snap.u;
  for (auto& uk : rotated.u) uk *= std::exp(cplx(0, -0.9));
  CHECK(verify_curvature(rotated, snap.a) == Approx(base).margin(1e-14));
}

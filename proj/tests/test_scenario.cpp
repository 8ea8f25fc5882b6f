#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "llg/field_io.hpp"
#include "llg/scenario.hpp"

using namespace llg;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

ScenarioSpec spec_of(ScenarioKind kind, double amplitude) {
  ScenarioSpec s;
  s.kind = kind;
  s.amplitude = amplitude;
  return s;
}

double max_difference(const SpinField& a, const SpinField& b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.grid().size(); ++i) d = std::max(d, std::abs(a.m[c][i] - b.m[c][i]));
  return d;
}

double grad_lp(const SpinField& s, double p) {
  return spectral::lp_norm_of_magnitude(magnitude(spin_gradient(s.m)), p);
}

}  // namespace

TEST_CASE("scenario kinds parse by name") {
  for (auto k : {ScenarioKind::LinearWave, ScenarioKind::Bubble, ScenarioKind::RandomSmall, ScenarioKind::CustomFile})
    CHECK(scenario_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scenario_kind_from_string("vortex"), Error);
}

TEST_CASE("zero amplitude gives the constant state") {
  GridSpec g(3, 8, 2 * kPi);
  for (auto k : {ScenarioKind::LinearWave, ScenarioKind::Bubble, ScenarioKind::RandomSmall}) {
    auto s = make_initial(spec_of(k, 0.0), g);
    CHECK(max_difference(s, SpinField::constant(g, {0, 0, 1})) == 0.0);
  }
}

TEST_CASE("linear wave is the normalized tilted constant") {
  GridSpec g(2, 16, 2 * kPi);
  auto spec = spec_of(ScenarioKind::LinearWave, 0.2);
  spec.wavevector = {1, 2, 0};
  auto s = make_initial(spec, g);
  CHECK(s.max_unit_defect() < 1e-15);
  const double r = std::sqrt(1.0 + 0.04);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.position(i);
    double ph = x[0] + 2 * x[1];
    CHECK(s.m[0][i] == Approx(0.2 * std::cos(ph) / r).margin(1e-15));
    CHECK(s.m[1][i] == Approx(0.2 * std::sin(ph) / r).margin(1e-15));
    CHECK(s.m[2][i] == Approx(1.0 / r).margin(1e-15));
  }
}

TEST_CASE("target gradient norm is hit") {
  GridSpec g(3, 16, 2 * kPi);
  for (auto k : {ScenarioKind::LinearWave, ScenarioKind::Bubble, ScenarioKind::RandomSmall}) {
    auto spec = spec_of(k, 0.0);
    spec.radius = 2.5;
    for (double target : {0.05, 0.5}) {
      spec.target_grad_ln = target;
      auto s = make_initial(spec, g);
      CHECK(s.max_unit_defect() < 1e-14);
      CHECK(grad_ln_norm(s) == Approx(target).epsilon(0.01));
    }
  }
}

TEST_CASE("unreachable targets are reported") {
  GridSpec g(3, 8, 2 * kPi);
  auto spec = spec_of(ScenarioKind::Bubble, 0.0);
  spec.radius = 2.0;
  spec.target_grad_ln = 1e3;
  CHECK_THROWS_AS(make_initial(spec, g), Error);
  spec.kind = ScenarioKind::RandomSmall;
  spec.mode_cutoff = 2;
  try {
    make_initial(spec, g);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("invalid specs are rejected") {
  GridSpec g(2, 8, 1.0);
  CHECK_THROWS_AS(make_initial(spec_of(ScenarioKind::LinearWave, -0.1), g), Error);
  CHECK_THROWS_AS(make_initial(spec_of(ScenarioKind::Bubble, 1.6), g), Error);
  auto r = spec_of(ScenarioKind::RandomSmall, 0.1);
  r.mode_cutoff = 4;
  CHECK_THROWS_AS(make_initial(r, g), Error);
  auto m = spec_of(ScenarioKind::LinearWave, 0.1);
  m.m_infinity = {0, 0, 2};
  CHECK_THROWS_AS(make_initial(m, g), Error);
  CHECK_THROWS_AS(make_initial(spec_of(ScenarioKind::CustomFile, 0.0), g), Error);
}

TEST_CASE("random fields are deterministic and resolution independent") {
  auto spec = spec_of(ScenarioKind::RandomSmall, 0.3);
  spec.seed = 42;
  spec.mode_cutoff = 3;
  GridSpec coarse(3, 8, 2 * kPi), fine(3, 16, 2 * kPi);
  auto a = make_initial(spec, coarse);
  auto b = make_initial(spec, coarse);
  CHECK(max_difference(a, b) == 0.0);
  spec.seed = 43;
  CHECK(max_difference(a, make_initial(spec, coarse)) > 1e-3);
  spec.seed = 42;
  auto f = make_initial(spec, fine);
  double d = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto ijk = coarse.unflatten(i);
    std::size_t j = fine.flatten({2 * ijk[0], 2 * ijk[1], 2 * ijk[2]});
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(a.m[c][i] - f.m[c][j]));
  }
  CHECK(d < 1e-13);
}

TEST_CASE("bubble is supported in its ball with the requested peak angle") {
  GridSpec g(3, 32, 2 * kPi);
  auto spec = spec_of(ScenarioKind::Bubble, 1.0);
  spec.radius = 2.0;
  auto s = make_initial(spec, g);
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto d = periodic_displacement(g, g.position(i), {kPi, kPi, kPi});
    double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    double angle = std::acos(std::clamp(s.m[2][i], -1.0, 1.0));
    if (r >= spec.radius) CHECK(angle == 0.0);
    peak = std::max(peak, angle);
  }
  CHECK(peak <= 1.0 + 1e-12);
  CHECK(peak > 0.9);
  CHECK(detail::min_frame_clearance(s, {1, 0, 0}) > kFrameDegeneracyThreshold);
}

TEST_CASE("custom file scenario") {
  GridSpec g(2, 8, 1.0);
  auto dir = std::filesystem::temp_directory_path() / "llg_scenario_test";
  std::filesystem::create_directories(dir);
  auto wave = make_initial(spec_of(ScenarioKind::LinearWave, 0.3), g);
  auto path = (dir / "m0.bin").string();
  io::write_field(path, wave.m);
  auto spec = spec_of(ScenarioKind::CustomFile, 0.0);
  spec.path = path;
  CHECK(max_difference(make_initial(spec, g), wave) == 0.0);
  CHECK_THROWS_AS(make_initial(spec, GridSpec(2, 16, 1.0)), Error);

  RealVectorField bad = wave.m;
  bad[2] *= 2.0;
  io::write_field(path, bad);
  CHECK_THROWS_AS(make_initial(spec, g), Error);
  spec.path = (dir / "missing.bin").string();
  CHECK_THROWS_AS(make_initial(spec, g), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mollifier leaves constants alone and returns unit fields") {
  GridSpec g(3, 8, 2 * kPi);
  auto c = SpinField::constant(g, {0, 0, 1});
  CHECK(max_difference(mollify_project(c, 3 * g.spacing()), c) < 1e-15);
  auto spec = spec_of(ScenarioKind::RandomSmall, 0.5);
  auto s = make_initial(spec, g);
  auto sm = mollify_project(s, 3 * g.spacing());
  CHECK(sm.max_unit_defect() < 1e-14);
  CHECK_THROWS_AS(mollify_project(s, 0.0), Error);
  CHECK_THROWS_AS(mollify_project(s, kPi), Error);
}

TEST_CASE("mollifier converges and does not raise gradient norms") {
  GridSpec g(3, 32, 2 * kPi);
  auto spec = spec_of(ScenarioKind::Bubble, 1.2);
  spec.radius = 2.5;
  auto m = make_initial(spec, g);
  const double h = g.spacing();
  double prev = INFINITY;
  for (double k : {8.0, 4.0, 2.0, 1.0}) {
    auto mk = mollify_project(m, k * h);
    double d = h1_w1n_distance(mk, m);
    CHECK(d < prev);
    prev = d;
    for (double p : {2.0, 3.0}) CHECK(grad_lp(mk, p) <= grad_lp(m, p) * 1.02);
  }
}

TEST_CASE("mollifying twice moves the field less than once") {
  GridSpec g(2, 32, 2 * kPi);
  auto spec = spec_of(ScenarioKind::RandomSmall, 0.6);
  spec.mode_cutoff = 5;
  auto m = make_initial(spec, g);
  const double eps = 2.5 * g.spacing();
  auto once = mollify_project(m, eps);
  auto twice = mollify_project(once, eps);
  auto h1 = [](const SpinField& a, const SpinField& b) {
    RealVectorField d = a.m;
    for (int c = 0; c < 3; ++c) d[c] -= b.m[c];
    return spectral::sobolev_norm(d, 1);
  };
  CHECK(h1(twice, once) < h1(once, m));
}

TEST_CASE("mollifier detects degeneracy") {
  GridSpec g(1, 64, 2 * kPi);
  RealVectorField raw = make_real_vector(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.position(i)[0];
    set3(raw, i, {std::cos(4 * x), std::sin(4 * x), 0.0});
  }
  SpinField s(std::move(raw), {0, 0, 1});
  CHECK_NOTHROW(mollify_project(s, 2 * g.spacing()));
  try {
    mollify_project(s, 1.5);
    FAIL("expected MollifierDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MollifierDegenerate);
  }
}

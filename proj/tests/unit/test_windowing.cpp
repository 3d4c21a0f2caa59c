#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "windownet/error.hpp"
#include "windownet/multiwindow.hpp"
#include "windownet/random.hpp"
#include "windownet/windowing.hpp"

using namespace windownet;
using windownet::testing::rel_err;

namespace {

WindowSpec random_window(Rng& rng) {
  for (;;) {
    WindowSpec w{rng.uniform(-500.0, 4500.0), rng.uniform(1.0, 6000.0)};
    if (w.upper() > 0.0) return w;
  }
}

}  // namespace

TEST_CASE("window clamps to its limits") {
  const WindowSpec w{1000.0, 500.0};
  CHECK(w.lower() == 750.0);
  CHECK(w.upper() == 1250.0);
  CHECK(apply_window(0.0, w) == 750.0);
  CHECK(apply_window(900.0, w) == 900.0);
  CHECK(apply_window(4095.0, w) == 1250.0);
}

TEST_CASE("invalid windows are rejected") {
  CHECK_THROWS_AS(validate(WindowSpec{100.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(validate(WindowSpec{100.0, -5.0}), ParameterError);
  CHECK_THROWS_AS(validate(WindowSpec{NAN, 10.0}), ParameterError);
  CHECK_THROWS_AS(to_affine(WindowSpec{-100.0, 100.0}), ParameterError);
  CHECK_THROWS_AS(from_affine(AffineWindow{0.0, 1.0, 10.0}), DegenerateWindowError);
}

TEST_CASE("affine form of a known window") {
  const auto a = to_affine({2048.0, 4096.0});
  CHECK(a.weight == 1.0);
  CHECK(a.bias == 0.0);
  CHECK(a.ceiling == 4096.0);
  const auto b = to_affine({1000.0, 500.0});
  CHECK(b.weight == doctest::Approx(1250.0 / 500.0));
  CHECK(b.bias == doctest::Approx(-2.5 * 750.0));
  CHECK(b.ceiling == 1250.0);
}

TEST_CASE("affine output equals rescaled window output") {
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const auto w = random_window(rng);
    const double px = rng.uniform(0.0, 4095.0);
    const double expect = w.upper() / w.width * (apply_window(px, w) - w.lower());
    worst = std::max(worst, rel_err(apply_affine(px, to_affine(w)), expect, 1e-9));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("recovery inverts the affine form") {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto w = random_window(rng);
    const auto r = from_affine(to_affine(w));
    REQUIRE(rel_err(r.level, w.level, 1e-9) <= 1e-9);
    REQUIRE(rel_err(r.width, w.width, 1e-9) <= 1e-9);
  }
  for (const auto& w : default_init_windows()) {
    const auto r = from_affine(to_affine(w));
    CHECK(r.level == doctest::Approx(w.level).epsilon(1e-12));
    CHECK(r.width == doctest::Approx(w.width).epsilon(1e-12));
  }
}

TEST_CASE("negative weight recovers an inverted window") {
  const auto r = from_affine(AffineWindow{-2.0, 3000.0, 1000.0});
  CHECK(r.width < 0.0);
}

TEST_CASE("gradient is zero at and beyond the kinks") {
  const auto a = to_affine({1000.0, 500.0});
  const double at_lower = 750.0;
  const double at_upper = 1250.0;
  for (double px : {0.0, at_lower, at_upper, 4000.0}) {
    const auto g = affine_grad(px, a);
    CHECK(g.d_weight == 0.0);
    CHECK(g.d_bias == 0.0);
  }
  const auto g = affine_grad(1000.0, a);
  CHECK(g.d_weight == 1000.0);
  CHECK(g.d_bias == 1.0);
}

TEST_CASE("affine gradient matches central differences away from kinks") {
  Rng rng(3);
  const double step = 1e-3;
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto w = random_window(rng);
    const auto a = to_affine(w);
    const double px = rng.uniform(0.0, 4095.0);
    const double z = a.weight * px + a.bias;
    if (std::fabs(z) < 10 * step * px || std::fabs(z - a.ceiling) < 10 * step * px + 1e-6) continue;
    const auto g = affine_grad(px, a);
    AffineWindow p = a, m = a;
    p.weight += step;
    m.weight -= step;
    const double fd_w = (apply_affine(px, p) - apply_affine(px, m)) / (2 * step);
    p = a, m = a;
    p.bias += step;
    m.bias -= step;
    const double fd_b = (apply_affine(px, p) - apply_affine(px, m)) / (2 * step);
    CHECK(rel_err(fd_w, g.d_weight) <= 1e-6);
    CHECK(rel_err(fd_b, g.d_bias) <= 1e-6);
    ++checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("fourteen init windows end with the full range") {
  const auto ws = default_init_windows();
  REQUIRE(ws.size() == 14);
  CHECK(ws.back() == WindowSpec{2048.0, 4096.0});
  for (const auto& w : ws) CHECK_NOTHROW(validate(w));
}

#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "windownet/error.hpp"
#include "windownet/imagepipe.hpp"
#include "windownet/model.hpp"
#include "windownet/multiwindow.hpp"
#include "windownet/random.hpp"

using namespace windownet;
using namespace windownet::testing;

TEST_CASE("windowed layer starts from its init windows") {
  const auto init = default_init_windows();
  const auto layer = make_windowed_layer(init, 9);
  CHECK(layer.clamp);
  CHECK(layer.mixer.size() == 3 * init.size());
  const double bound = std::sqrt(6.0 / 14.0);
  for (double m : layer.mixer) CHECK(std::fabs(m) <= bound);
  for (double b : layer.mixer_bias) CHECK(b == 0.0);
  const auto rec = recover_windows(layer);
  for (std::size_t i = 0; i < init.size(); ++i) {
    CHECK(rec[i].level == doctest::Approx(init[i].level).epsilon(1e-12));
    CHECK(rec[i].width == doctest::Approx(init[i].width).epsilon(1e-12));
  }
}

TEST_CASE("plain ablation differs only in clamping and initialization") {
  const auto plain = plain_mixer_init(14, 9);
  CHECK_FALSE(plain.clamp);
  CHECK(plain.n_windows() == 14);
  for (const auto& w : plain.windows) {
    CHECK(w.bias == 0.0);
    CHECK(std::fabs(w.weight) <= std::sqrt(6.0));
    CHECK(w.ceiling == 4096.0);
  }
  CHECK(plain_mixer_init(14, 9).mixer == plain.mixer);
  CHECK(plain_mixer_init(14, 10).mixer != plain.mixer);
}

TEST_CASE("identity window front-end reproduces the rescaled input") {
  MultiWindowLayer layer = make_windowed_layer({{2048.0, 4096.0}}, 1);
  layer.mixer = {1.0, 1.0, 1.0};
  Rng rng(3);
  ImageTensor img(1, 4, 4, 12);
  for (auto& v : img.values()) v = std::floor(rng.uniform(0.0, 4096.0));
  const auto out = forward(layer, img, NormalizationSpec::imagenet());
  const auto expect = normalize(replicate_to_rgb(scale_to_255(img, 4096.0)), NormalizationSpec::imagenet());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.values()[i] == doctest::Approx(expect.values()[i]));
}

TEST_CASE("degenerate and malformed layers are rejected") {
  MultiWindowLayer layer = make_windowed_layer({{1000.0, 500.0}, {3000.0, 1000.0}}, 1);
  layer.windows[1].weight = 0.0;
  CHECK_THROWS_AS(recover_windows(layer), DegenerateWindowError);
  layer.mixer.pop_back();
  CHECK_THROWS_AS(layer.validate(), ParameterError);
  CHECK_THROWS_AS(make_windowed_layer({}, 1), ParameterError);
}

TEST_CASE("multi-window backward matches finite differences") {
  Rng rng(11);
  std::size_t checked = 0;
  for (int t = 0; t < 40; ++t) {
    const int n = 1 + static_cast<int>(rng.below(4));
    std::vector<WindowSpec> ws;
    for (int i = 0; i < n; ++i) ws.push_back({rng.uniform(300.0, 3800.0), rng.uniform(200.0, 3000.0)});
    auto layer = make_windowed_layer(ws, rng.bits());
    layer.clamp = rng.bernoulli(0.8);
    for (auto& b : layer.mixer_bias) b = rng.uniform(-10.0, 10.0);
    ImageTensor img(1, 4, 5, 12);
    for (auto& v : img.values()) v = rng.uniform(0.0, 4095.0);
    const auto r = check_layer_gradients(layer, img, NormalizationSpec::imagenet(), rng.bits());
    CHECK(r.worst <= 1e-4);
    checked += r.checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("full model gradients match finite differences") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto s = random_small_case(seed);
    const auto r = check_model_gradients(s.model, s.images, s.labels);
    INFO("seed " << seed << " front " << s.model.front_kind());
    CHECK(r.worst <= 1e-4);
    checked += r.checked;
  }
  CHECK(checked > 5000);
}

TEST_CASE("parameter packing round trips") {
  const auto s = random_small_case(5);
  auto m = s.model;
  const auto p = pack_params(m);
  CHECK(p.size() == param_count(m));
  auto q = p;
  for (auto& v : q) v += 1.0;
  unpack_params(m, q);
  CHECK(pack_params(m) == q);
  std::size_t total = 0;
  for (const auto& b : param_layout(m)) {
    CHECK(b.offset == total);
    total += b.size;
  }
  CHECK(total == p.size());
}

TEST_CASE("loss and logits agree with per-sample prediction") {
  const auto s = random_small_case(8);
  const auto fb = forward_backward(s.model, s.images, s.labels);
  const int c = s.model.n_classes();
  double loss = 0.0;
  for (std::size_t b = 0; b < s.images.size(); ++b) {
    const auto z = predict(s.model, s.images[b]);
    for (int k = 0; k < c; ++k) {
      CHECK(fb.logits[b * c + k] == doctest::Approx(z[k]).epsilon(1e-12));
      const double y = s.labels[b * c + k];
      loss += std::log1p(std::exp(-std::fabs(z[k]))) + std::max(z[k], 0.0) - z[k] * y;
    }
  }
  CHECK(fb.loss == doctest::Approx(loss / (s.images.size() * c)).epsilon(1e-12));
}

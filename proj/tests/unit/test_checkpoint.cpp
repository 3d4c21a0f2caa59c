#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "windownet/checkpoint.hpp"
#include "windownet/error.hpp"
#include "windownet/keyvalue.hpp"
#include "windownet/trainer.hpp"

using namespace windownet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "windownet_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledSet random_set(int n, int n_classes, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet s;
  s.n_classes = n_classes;
  for (int i = 0; i < n; ++i) {
    ImageTensor img(1, 8, 8, 8);
    const bool pos = rng.bernoulli(0.5);
    for (auto& v : img.values()) v = rng.uniform(0.0, 200.0) + (pos ? 55.0 : 0.0);
    s.images.push_back(img);
    s.labels.push_back(pos);
    for (int c = 1; c < n_classes; ++c) s.labels.push_back(rng.bernoulli(0.5));
  }
  return s;
}

}  // namespace

TEST_CASE("key-value text parses sections, comments and round trips") {
  const auto kv = KeyValues::parse("# c\nalpha = 1\n[train]\nlr=0.5\n\n[synth]\nseed = 7\n");
  CHECK(kv.get_int("alpha", 0) == 1);
  CHECK(kv.get_double("train.lr", 0.0) == 0.5);
  CHECK(kv.get_u64("synth.seed", 0) == 7);
  CHECK(KeyValues::parse(kv.to_text()) == kv);
  CHECK_THROWS_AS(KeyValues::parse("novalue\n"), ParameterError);
  CHECK_THROWS_AS(kv.require("missing"), ParameterError);
  CHECK_THROWS_AS(KeyValues::parse("x=abc").get_double("x", 0), ParameterError);
}

TEST_CASE("doubles format to their shortest exact text") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("checkpoint save and load is byte identical") {
  auto s = windownet::testing::random_small_case(3);
  s.model.front = make_windowed_layer(default_init_windows(), 4);
  Checkpoint ck = model_to_checkpoint(s.model);
  ck.config.set("note", "hello");
  save_checkpoint(ck, scratch("a.wnck"));
  const auto loaded = load_checkpoint(scratch("a.wnck"));
  CHECK(loaded == ck);
  save_checkpoint(loaded, scratch("b.wnck"));
  CHECK(slurp(scratch("a.wnck")) == slurp(scratch("b.wnck")));
  const auto m = model_from_checkpoint(loaded);
  CHECK(pack_params(m) == pack_params(s.model));
  CHECK(m.front->clamp);
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::ofstream(scratch("bad.wnck"), std::ios::binary) << "XXXX0000";
  CHECK_THROWS_AS(load_checkpoint(scratch("bad.wnck")), DataError);
  CHECK_THROWS_AS(load_checkpoint(scratch("absent.wnck")), IoError);
  const auto bytes = serialize_checkpoint(model_to_checkpoint(windownet::testing::random_small_case(1).model));
  CHECK_THROWS_AS(deserialize_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 5)), IoError);
}

TEST_CASE("resumed training matches an uninterrupted run") {
  const auto train = random_set(40, 2, 5);
  const auto val = random_set(20, 2, 6);
  WindowNetModel model;
  model.backbone = TinyBackbone::init(2, 7);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.max_epochs = 4;
  cfg.seed = 3;

  Trainer full(model, cfg);
  full.fit(train, val);

  Trainer first(model, cfg);
  first.run_epoch(train, val);
  first.run_epoch(train, val);
  const auto bytes = serialize_checkpoint(first.checkpoint());
  Trainer second = Trainer::resume(deserialize_checkpoint(bytes));
  if (first.best_checkpoint()) second.restore_best(*first.best_checkpoint());
  second.fit(train, val);

  CHECK(second.checkpoint() == full.checkpoint());
  CHECK(serialize_checkpoint(*second.best_checkpoint()) == serialize_checkpoint(*full.best_checkpoint()));
}

TEST_CASE("training learns an easy signal and is deterministic") {
  const auto train = random_set(64, 2, 8);
  const auto val = random_set(32, 2, 9);
  WindowNetModel model;
  model.backbone = TinyBackbone::init(2, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 16;
  cfg.max_epochs = 6;
  Trainer a(model, cfg), b(model, cfg);
  const auto ha = a.fit(train, val);
  b.fit(train, val);
  CHECK(a.checkpoint() == b.checkpoint());
  CHECK(ha.back().train_loss < ha.front().train_loss);
  const auto p = predict_set(a.best_model(), val);
  CHECK(*roc_auc(std::vector<double>([&] {
                   std::vector<double> z;
                   for (std::size_t i = 0; i < val.size(); ++i) z.push_back(p.logits[i * 2]);
                   return z;
                 }()),
                 std::vector<double>([&] {
                   std::vector<double> y;
                   for (std::size_t i = 0; i < val.size(); ++i) y.push_back(val.labels[i * 2]);
                   return y;
                 }())) > 0.9);
}

TEST_CASE("train config validation and persistence") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  TrainConfig d;
  d.learning_rate = 0.123;
  d.seed = 99;
  KeyValues kv;
  d.write(kv);
  CHECK(TrainConfig::read(kv) == d);
  CHECK(d.patience_order_ok());
}

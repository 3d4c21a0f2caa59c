#include "windownet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "windownet/error.hpp"
#include "windownet/random.hpp"

namespace windownet {

namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566ULL;

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string("train config: ") + name + " must be positive");
  }
}

}  // namespace

void TrainConfig::validate() const {
  check_positive(learning_rate, "learning_rate");
  check_positive(batch_size, "batch_size");
  check_positive(lr_decay_factor, "lr_decay_factor");
  check_positive(plateau_patience_lr, "plateau_patience_lr");
  check_positive(stop_patience, "stop_patience");
  check_positive(beta1, "beta1");
  check_positive(beta2, "beta2");
  check_positive(epsilon, "epsilon");
  if (!(weight_decay >= 0.0)) throw ParameterError("train config: weight_decay must be >= 0");
  if (beta1 >= 1.0 || beta2 >= 1.0) throw ParameterError("train config: betas must be < 1");
  if (max_epochs < 0) throw ParameterError("train config: max_epochs must be >= 0");
}

void TrainConfig::write(KeyValues& kv, const std::string& p) const {
  kv.set(p + "learning_rate", learning_rate);
  kv.set(p + "batch_size", batch_size);
  kv.set(p + "lr_decay_factor", lr_decay_factor);
  kv.set(p + "plateau_patience_lr", plateau_patience_lr);
  kv.set(p + "stop_patience", stop_patience);
  kv.set(p + "weight_decay", weight_decay);
  kv.set(p + "beta1", beta1);
  kv.set(p + "beta2", beta2);
  kv.set(p + "epsilon", epsilon);
  kv.set(p + "seed", seed);
  kv.set(p + "max_epochs", max_epochs);
}

TrainConfig TrainConfig::read(const KeyValues& kv, const std::string& p) {
  TrainConfig c;
  c.learning_rate = kv.get_double(p + "learning_rate", c.learning_rate);
  c.batch_size = static_cast<int>(kv.get_int(p + "batch_size", c.batch_size));
  c.lr_decay_factor = kv.get_double(p + "lr_decay_factor", c.lr_decay_factor);
  c.plateau_patience_lr = static_cast<int>(kv.get_int(p + "plateau_patience_lr", c.plateau_patience_lr));
  c.stop_patience = static_cast<int>(kv.get_int(p + "stop_patience", c.stop_patience));
  c.weight_decay = kv.get_double(p + "weight_decay", c.weight_decay);
  c.beta1 = kv.get_double(p + "beta1", c.beta1);
  c.beta2 = kv.get_double(p + "beta2", c.beta2);
  c.epsilon = kv.get_double(p + "epsilon", c.epsilon);
  c.seed = kv.get_u64(p + "seed", c.seed);
  c.max_epochs = static_cast<int>(kv.get_int(p + "max_epochs", c.max_epochs));
  c.validate();
  return c;
}

void LabeledSet::validate() const {
  if (n_classes < 1) throw ParameterError("labeled set needs n_classes >= 1");
  if (labels.size() != images.size() * static_cast<std::size_t>(n_classes)) {
    throw ParameterError("labeled set: label matrix is not N x C");
  }
}

Predictions predict_set(const WindowNetModel& model, const LabeledSet& set) {
  set.validate();
  if (set.n_classes != model.n_classes()) {
    throw ParameterError("dataset has " + std::to_string(set.n_classes) + " classes, model has " +
                         std::to_string(model.n_classes()));
  }
  Predictions p;
  p.logits.reserve(set.labels.size());
  for (const auto& img : set.images) {
    const auto l = predict(model, img);
    p.logits.insert(p.logits.end(), l.begin(), l.end());
  }
  if (!set.labels.empty()) p.loss = bce_with_logits(p.logits, set.labels).loss;
  return p;
}

Checkpoint model_to_checkpoint(const WindowNetModel& model) {
  Checkpoint ck;
  auto& kv = ck.config;
  kv.set("model.front", model.front_kind());
  kv.set("model.n_windows", model.front ? model.front->n_windows() : 0);
  kv.set("model.n_classes", model.n_classes());
  for (int c = 0; c < 3; ++c) {
    kv.set("model.norm_mean_" + std::to_string(c), model.norm.mean[c]);
    kv.set("model.norm_std_" + std::to_string(c), model.norm.std[c]);
  }
  const auto flat = pack_params(model);
  for (const auto& block : param_layout(model)) {
    ck.arrays.push_back({block.name, block.dims,
                         std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(block.offset),
                                             flat.begin() + static_cast<std::ptrdiff_t>(block.offset + block.size))});
  }
  if (model.front) {
    NamedArray ceil{"front.ceiling", {static_cast<std::uint32_t>(model.front->n_windows())}, {}};
    for (const auto& w : model.front->windows) ceil.values.push_back(w.ceiling);
    ck.arrays.push_back(std::move(ceil));
  }
  return ck;
}

WindowNetModel model_from_checkpoint(const Checkpoint& ck) {
  const auto& kv = ck.config;
  WindowNetModel m;
  const int n_classes = static_cast<int>(kv.get_int("model.n_classes", 0));
  if (n_classes < 1) throw DataError("checkpoint has no valid model.n_classes");
  m.backbone = TinyBackbone::init(n_classes, 0);
  for (int c = 0; c < 3; ++c) {
    m.norm.mean[c] = kv.get_double("model.norm_mean_" + std::to_string(c), m.norm.mean[c]);
    m.norm.std[c] = kv.get_double("model.norm_std_" + std::to_string(c), m.norm.std[c]);
  }
  const std::string front = kv.get_string("model.front", "none");
  if (front != "none") {
    if (front != "windowed" && front != "plain") {
      throw DataError("checkpoint has unknown front-end kind '" + front + "'");
    }
    const auto n = static_cast<std::size_t>(kv.get_int("model.n_windows", 0));
    const auto& ceil = ck.array("front.ceiling");
    if (n < 1 || ceil.values.size() != n) throw DataError("checkpoint front-end shape is corrupt");
    MultiWindowLayer layer;
    layer.clamp = front == "windowed";
    layer.windows.resize(n);
    for (std::size_t i = 0; i < n; ++i) layer.windows[i].ceiling = ceil.values[i];
    layer.mixer.assign(3 * n, 0.0);
    m.front = std::move(layer);
  }
  std::vector<double> flat(param_count(m));
  for (const auto& block : param_layout(m)) {
    const auto& a = ck.array(block.name);
    if (a.dims != block.dims) throw DataError("checkpoint array '" + block.name + "' has wrong shape");
    std::copy(a.values.begin(), a.values.end(), flat.begin() + static_cast<std::ptrdiff_t>(block.offset));
  }
  unpack_params(m, flat);
  if (m.front) m.front->validate();
  return m;
}

Trainer::Trainer(WindowNetModel model, TrainConfig config)
    : model_(std::move(model)), config_(config), adam_(param_count(model_)),
      plateau_(config.plateau_patience_lr), stopper_(config.stop_patience),
      lr_(config.learning_rate) {
  config_.validate();
  if (!config_.patience_order_ok()) {
    std::clog << "warning: plateau_patience_lr (" << config_.plateau_patience_lr
              << ") is not below stop_patience (" << config_.stop_patience
              << "); the learning rate will never decay before stopping\n";
  }
}

double Trainer::train_step(std::span<const ImageTensor> images, std::span<const double> labels) {
  auto fb = forward_backward(model_, images, labels);
  auto params = pack_params(model_);
  const auto grads = fb.grads.pack();
  adamw_step(params, grads, adam_, config_.adamw(lr_));
  unpack_params(model_, params);
  return fb.loss;
}

EpochRecord Trainer::run_epoch(const LabeledSet& train, const LabeledSet& val) {
  train.validate();
  if (train.size() == 0) throw ParameterError("training set is empty");
  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  rec.lr = lr_;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config_.seed, {kShuffleTag, static_cast<std::uint64_t>(rec.epoch)}));
  rng.shuffle(order.begin(), order.end());

  std::vector<ImageTensor> batch;
  std::vector<double> labels;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    batch.clear();
    labels.clear();
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(train.images[order[k]]);
      const auto row = train.label_row(order[k]);
      labels.insert(labels.end(), row.begin(), row.end());
    }
    loss_sum += train_step(batch, labels) * static_cast<double>(end - start);
  }
  rec.train_loss = loss_sum / static_cast<double>(train.size());

  const auto pred = predict_set(model_, val);
  rec.val_loss = pred.loss;
  rec.val_mean_auc = evaluate(pred.logits, val.labels, val.n_classes, false).mean_auc;
  epoch_ = rec.epoch;

  if (model_.front && model_.front->clamp) {
    try {
      rec.windows = recover_windows(*model_.front);
    } catch (const DegenerateWindowError&) {
      rec.windows.clear();
    }
  }

  if (rec.val_mean_auc && (!best_auc_ || *rec.val_mean_auc > *best_auc_)) {
    best_auc_ = rec.val_mean_auc;
    best_epoch_ = rec.epoch;
    rec.new_best = true;
  }
  if (plateau_.step(rec.val_loss) == PlateauAction::Decay) {
    lr_ /= config_.lr_decay_factor;
    rec.lr_decayed = true;
  }
  if (stopper_.step(rec.val_loss) == StopAction::Stop) {
    stopped_ = true;
    rec.stopped = true;
  }
  if (rec.new_best) best_ = checkpoint();
  return rec;
}

std::vector<EpochRecord> Trainer::fit(const LabeledSet& train, const LabeledSet& val,
                                      const std::function<void(const EpochRecord&)>& on_epoch) {
  std::vector<EpochRecord> out;
  while (!done()) {
    out.push_back(run_epoch(train, val));
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck = model_to_checkpoint(model_);
  config_.write(ck.config);
  auto& kv = ck.config;
  kv.set("state.epoch", epoch_);
  kv.set("state.learning_rate", lr_);
  kv.set("state.adam_step", adam_.step);
  kv.set("state.stopped", stopped_);
  kv.set("state.plateau_best", plateau_.best());
  kv.set("state.plateau_stale", plateau_.stale());
  kv.set("state.stop_best", stopper_.best());
  kv.set("state.stop_stale", stopper_.stale());
  kv.set("state.best_epoch", best_epoch_);
  kv.set("state.best_mean_auc", best_auc_ ? format_double(*best_auc_) : std::string("NA"));
  const auto n = static_cast<std::uint32_t>(adam_.m.size());
  ck.arrays.push_back({"adam.m", {n}, adam_.m});
  ck.arrays.push_back({"adam.v", {n}, adam_.v});
  return ck;
}

Trainer Trainer::resume(const Checkpoint& ck) {
  Trainer t(model_from_checkpoint(ck), TrainConfig::read(ck.config));
  const auto& kv = ck.config;
  t.epoch_ = static_cast<int>(kv.get_int("state.epoch", 0));
  t.lr_ = kv.get_double("state.learning_rate", t.config_.learning_rate);
  t.adam_.step = kv.get_u64("state.adam_step", 0);
  t.stopped_ = kv.get_bool("state.stopped", false);
  t.plateau_.restore(kv.get_double("state.plateau_best", INFINITY),
                     static_cast<int>(kv.get_int("state.plateau_stale", 0)));
  t.stopper_.restore(kv.get_double("state.stop_best", INFINITY),
                     static_cast<int>(kv.get_int("state.stop_stale", 0)));
  t.best_epoch_ = static_cast<int>(kv.get_int("state.best_epoch", 0));
  const std::string best = kv.get_string("state.best_mean_auc", "NA");
  if (best != "NA") t.best_auc_ = parse_double(best);
  const auto& m = ck.array("adam.m");
  const auto& v = ck.array("adam.v");
  if (m.values.size() != t.adam_.m.size() || v.values.size() != t.adam_.v.size()) {
    throw DataError("checkpoint optimizer moments do not match the model");
  }
  t.adam_.m = m.values;
  t.adam_.v = v.values;
  return t;
}

void Trainer::restore_best(Checkpoint best) {
  const std::string auc = best.config.get_string("state.best_mean_auc", "NA");
  if (auc != "NA") best_auc_ = parse_double(auc);
  best_epoch_ = static_cast<int>(best.config.get_int("state.best_epoch", best_epoch_));
  best_ = std::move(best);
}

WindowNetModel Trainer::best_model() const {
  return best_ ? model_from_checkpoint(*best_) : model_;
}

}  // namespace windownet

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "windownet/checkpoint.hpp"
#include "windownet/image.hpp"
#include "windownet/keyvalue.hpp"
#include "windownet/metrics.hpp"
#include "windownet/model.hpp"
#include "windownet/optim.hpp"

namespace windownet {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  double lr_decay_factor = 10.0;
  int plateau_patience_lr = 3;
  int stop_patience = 5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int max_epochs = 100;

  /// Throws ParameterError on non-positive values (max_epochs may be 0).
  void validate() const;
  /// False when the LR patience is not below the stop patience.
  bool patience_order_ok() const { return plateau_patience_lr < stop_patience; }

  void write(KeyValues& kv, const std::string& prefix = "train.") const;
  static TrainConfig read(const KeyValues& kv, const std::string& prefix = "train.");
  AdamWHyper adamw(double lr) const { return {lr, beta1, beta2, epsilon, weight_decay}; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Single-channel images with a row-major N x C label matrix.
struct LabeledSet {
  std::vector<ImageTensor> images;
  std::vector<double> labels;
  int n_classes = 0;

  std::size_t size() const { return images.size(); }
  std::span<const double> label_row(std::size_t i) const {
    return std::span<const double>(labels).subspan(i * n_classes, n_classes);
  }
  void validate() const;
};

struct Predictions {
  std::vector<double> logits;  ///< N x C
  double loss = 0.0;
};

Predictions predict_set(const WindowNetModel& model, const LabeledSet& set);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_mean_auc;
  double lr = 0.0;  ///< rate used during this epoch
  bool lr_decayed = false;
  bool new_best = false;
  bool stopped = false;
  std::vector<WindowSpec> windows;  ///< recovered after the epoch (clamped front-end only)
};

Checkpoint model_to_checkpoint(const WindowNetModel& model);
WindowNetModel model_from_checkpoint(const Checkpoint& ck);

/// AdamW training with plateau LR decay and early stopping driven by the
/// validation loss, and model selection by highest mean validation AUC.
/// Batches are drawn from a per-epoch shuffle seeded by (seed, epoch), so a run
/// resumed from a checkpoint continues exactly as an uninterrupted one.
class Trainer {
 public:
  Trainer(WindowNetModel model, TrainConfig config);
  static Trainer resume(const Checkpoint& ck);

  /// One AdamW step on a batch at the current learning rate; returns the batch loss.
  double train_step(std::span<const ImageTensor> images, std::span<const double> labels);
  EpochRecord run_epoch(const LabeledSet& train, const LabeledSet& val);
  std::vector<EpochRecord> fit(const LabeledSet& train, const LabeledSet& val,
                               const std::function<void(const EpochRecord&)>& on_epoch = {});

  bool done() const { return stopped_ || epoch_ >= config_.max_epochs; }
  int epoch() const { return epoch_; }
  double learning_rate() const { return lr_; }
  const TrainConfig& config() const { return config_; }
  const WindowNetModel& model() const { return model_; }
  std::optional<double> best_mean_auc() const { return best_auc_; }

  /// Full state: parameters, moments, counters and config.
  Checkpoint checkpoint() const;
  /// Checkpoint at the epoch with the highest mean validation AUC, if any epoch ran.
  const std::optional<Checkpoint>& best_checkpoint() const { return best_; }
  /// Re-attaches the best-epoch checkpoint after resume().
  void restore_best(Checkpoint best);
  /// Model of best_checkpoint(), or the current model before any epoch.
  WindowNetModel best_model() const;

 private:
  WindowNetModel model_;
  TrainConfig config_;
  AdamWState adam_;
  PlateauScheduler plateau_;
  EarlyStopping stopper_;
  double lr_;
  int epoch_ = 0;
  bool stopped_ = false;
  std::optional<double> best_auc_;
  int best_epoch_ = 0;
  std::optional<Checkpoint> best_;
};

}  // namespace windownet

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace windownet {

struct BceResult {
  double loss = 0.0;
  std::vector<double> d_logits;  ///< same layout as the logits
};

/// Mean binary cross-entropy over all B*C entries, evaluated as
/// max(z, 0) - z*y + log1p(exp(-|z|)). Gradient is (sigmoid(z) - y) / (B*C).
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets);

double sigmoid(double z);

struct AdamWHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamWState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One decoupled-weight-decay Adam update:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                const AdamWHyper& hyper);

/// A validation loss counts as an improvement only if it beats the best so far
/// by more than this absolute margin.
inline constexpr double kImprovementThreshold = 1e-6;

enum class PlateauAction { Hold, Decay };
enum class StopAction { Continue, Stop };

/// Fires Decay once the loss has gone `patience` consecutive epochs without
/// improving since the last improvement or the last decay.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(int patience = 3, double threshold = kImprovementThreshold);
  PlateauAction step(double loss);

  int patience() const { return patience_; }
  int stale() const { return stale_; }
  double best() const { return best_; }
  void restore(double best, int stale) { best_ = best; stale_ = stale; }

 private:
  int patience_;
  double threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

/// Stops after `patience` consecutive epochs without improvement. Unlike the
/// scheduler, learning-rate decays do not reset its counter.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience = 5, double threshold = kImprovementThreshold);
  StopAction step(double loss);

  int stale() const { return stale_; }
  double best() const { return best_; }
  void restore(double best, int stale) { best_ = best; stale_ = stale; }

 private:
  int patience_;
  double threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

/// Replays `history` and returns the action emitted for its last epoch.
PlateauAction plateau_scheduler(std::span<const double> history, int patience = 3);
StopAction early_stop(std::span<const double> history, int patience = 5);

}  // namespace windownet

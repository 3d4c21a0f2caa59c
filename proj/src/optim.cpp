#include "windownet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windownet/error.hpp"

namespace windownet {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets) {
  if (logits.size() != targets.size()) {
    throw ParameterError("bce: " + std::to_string(logits.size()) + " logits vs " +
                         std::to_string(targets.size()) + " targets");
  }
  if (logits.empty()) throw ParameterError("bce: empty batch");
  BceResult r;
  r.d_logits.resize(logits.size());
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = targets[i];
    sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    r.d_logits[i] = (sigmoid(z) - y) * inv_n;
  }
  r.loss = sum * inv_n;
  return r;
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                const AdamWHyper& h) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ParameterError("adamw: parameter, gradient and moment sizes differ");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.eps) + h.weight_decay * params[i]);
  }
}

PlateauScheduler::PlateauScheduler(int patience, double threshold)
    : patience_(patience), threshold_(threshold) {
  if (patience < 1) throw ParameterError("plateau patience must be >= 1");
}

PlateauAction PlateauScheduler::step(double loss) {
  if (loss < best_ - threshold_) {
    best_ = loss;
    stale_ = 0;
    return PlateauAction::Hold;
  }
  if (++stale_ >= patience_) {
    stale_ = 0;
    return PlateauAction::Decay;
  }
  return PlateauAction::Hold;
}

EarlyStopping::EarlyStopping(int patience, double threshold)
    : patience_(patience), threshold_(threshold) {
  if (patience < 1) throw ParameterError("early-stopping patience must be >= 1");
}

StopAction EarlyStopping::step(double loss) {
  if (loss < best_ - threshold_) {
    best_ = loss;
    stale_ = 0;
    return StopAction::Continue;
  }
  return ++stale_ >= patience_ ? StopAction::Stop : StopAction::Continue;
}

PlateauAction plateau_scheduler(std::span<const double> history, int patience) {
  PlateauScheduler s(patience);
  PlateauAction last = PlateauAction::Hold;
  for (double l : history) last = s.step(l);
  return last;
}

StopAction early_stop(std::span<const double> history, int patience) {
  EarlyStopping s(patience);
  StopAction last = StopAction::Continue;
  for (double l : history) last = s.step(l);
  return last;
}

}  // namespace windownet

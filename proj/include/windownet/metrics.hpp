#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace windownet {

/// Area under the ROC curve as the Mann-Whitney statistic with average ranks
/// for ties, O(n log n). Returns nullopt when labels hold a single class.
/// Labels are read as positive when > 0.5.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels);

struct EvalResult {
  std::vector<std::optional<double>> per_class_auc;
  std::vector<int> n_pos;
  std::vector<int> n_neg;
  /// Mean over classes with a defined AUC; nullopt if none is defined.
  std::optional<double> mean_auc;

  int n_classes() const { return static_cast<int>(per_class_auc.size()); }
  int n_undefined() const;
  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Per-class AUC over columns of a row-major B x C logit matrix. Ranks are taken
/// on the logits themselves, which order samples exactly as sigmoid(logits) does
/// but never collapse into ties where the sigmoid saturates. Undefined classes are skipped in the mean with a warning
/// on stderr.
EvalResult evaluate(std::span<const double> logits, std::span<const double> labels, int n_classes,
                    bool warn_undefined = true);

/// The fourteen finding labels in alphabetical order, "Atelectasis" .. "Support Devices".
const std::vector<std::string>& chexpert_classes();
/// chexpert_classes() when n == 14, otherwise "class_0" .. "class_{n-1}".
std::vector<std::string> class_names(int n);

/// `class,auc,n_pos,n_neg` rows followed by a `mean` row. Undefined AUCs print as NA.
std::string eval_to_csv(const EvalResult& r, const std::vector<std::string>& names);

/// Fixed-precision number formatting used by every CSV writer (17 significant digits).
std::string csv_number(double v);

}  // namespace windownet

#include "windownet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "windownet/error.hpp"

namespace windownet {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ParameterError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie group spanning positions [i, j) shares rank (i + j + 1) / 2.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double p = static_cast<double>(n_pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

int EvalResult::n_undefined() const {
  return static_cast<int>(std::count(per_class_auc.begin(), per_class_auc.end(), std::nullopt));
}

EvalResult evaluate(std::span<const double> logits, std::span<const double> labels, int n_classes,
                    bool warn_undefined) {
  if (n_classes < 1 || logits.size() != labels.size() ||
      logits.size() % static_cast<std::size_t>(n_classes) != 0) {
    throw ParameterError("evaluate: logits and labels must both be B x " +
                         std::to_string(n_classes));
  }
  const std::size_t b = logits.size() / n_classes;
  EvalResult r;
  std::vector<double> col_scores(b), col_labels(b);
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < n_classes; ++c) {
    int pos = 0;
    for (std::size_t i = 0; i < b; ++i) {
      col_scores[i] = logits[i * n_classes + c];
      col_labels[i] = labels[i * n_classes + c];
      pos += col_labels[i] > 0.5;
    }
    auto auc = roc_auc(col_scores, col_labels);
    r.per_class_auc.push_back(auc);
    r.n_pos.push_back(pos);
    r.n_neg.push_back(static_cast<int>(b) - pos);
    if (auc) {
      sum += *auc;
      ++defined;
    } else if (warn_undefined) {
      std::clog << "warning: AUC undefined for class " << c << " (" << pos << " positives, "
                << b - pos << " negatives); excluded from mean\n";
    }
  }
  if (defined > 0) r.mean_auc = sum / defined;
  return r;
}

const std::vector<std::string>& chexpert_classes() {
  static const std::vector<std::string> names = {
      "Atelectasis",      "Cardiomegaly",     "Consolidation",   "Edema",
      "Enlarged Cardiomediastinum",           "Fracture",        "Lung Lesion",
      "Lung Opacity",     "No Finding",       "Pleural Effusion", "Pleural Other",
      "Pneumonia",        "Pneumothorax",     "Support Devices"};
  return names;
}

std::vector<std::string> class_names(int n) {
  if (n == 14) return chexpert_classes();
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("class_" + std::to_string(i));
  return out;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eval_to_csv(const EvalResult& r, const std::vector<std::string>& names) {
  if (names.size() != r.per_class_auc.size()) {
    throw ParameterError("eval_to_csv: class name count does not match result");
  }
  std::string out = "class,auc,n_pos,n_neg\n";
  long total_pos = 0, total_neg = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    out += names[c] + "," + (r.per_class_auc[c] ? csv_number(*r.per_class_auc[c]) : "NA") + "," +
           std::to_string(r.n_pos[c]) + "," + std::to_string(r.n_neg[c]) + "\n";
    total_pos += r.n_pos[c];
    total_neg += r.n_neg[c];
  }
  out += "mean," + (r.mean_auc ? csv_number(*r.mean_auc) : std::string("NA")) + "," +
         std::to_string(total_pos) + "," + std::to_string(total_neg) + "\n";
  return out;
}

}  // namespace windownet

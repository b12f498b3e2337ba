// Multiclass classification metrics from a confusion matrix.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"

namespace specgnn {

// Rows = true class, columns = predicted class; row sums = class supports.
// Per-class accuracy is recall; weighted metrics are support-weighted means,
// so weighted accuracy equals overall accuracy. A class with zero support
// contributes zero weight.
struct MetricsReport {
  Eigen::MatrixXi confusion;
  std::vector<double> per_class_acc;
  std::vector<double> per_class_f1;
  double weighted_acc = 0.0;
  double weighted_f1 = 0.0;
  int total = 0;
};

inline MetricsReport compute_metrics(const std::vector<int>& labels,
                                     const std::vector<int>& predictions,
                                     int n_classes) {
  if (labels.size() != predictions.size()) {
    throw InvalidInput("compute_metrics: label/prediction count mismatch");
  }
  MetricsReport r;
  r.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 ||
        predictions[i] >= n_classes) {
      throw InvalidInput("compute_metrics: class id out of range");
    }
    r.confusion(labels[i], predictions[i]) += 1;
  }
  r.total = static_cast<int>(labels.size());

  r.per_class_acc.resize(n_classes, 0.0);
  r.per_class_f1.resize(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    const int tp = r.confusion(c, c);
    const int support = r.confusion.row(c).sum();
    const int predicted = r.confusion.col(c).sum();
    const double recall = support > 0 ? double(tp) / support : 0.0;
    const double precision = predicted > 0 ? double(tp) / predicted : 0.0;
    r.per_class_acc[c] = recall;
    r.per_class_f1[c] = (precision + recall) > 0.0
                            ? 2.0 * precision * recall / (precision + recall)
                            : 0.0;
    if (r.total > 0) {
      const double w = double(support) / r.total;
      r.weighted_acc += w * recall;
      r.weighted_f1 += w * r.per_class_f1[c];
    }
  }
  return r;
}

}  // namespace specgnn

// Training objectives: dual-frequency negative-only contrastive losses,
// softmax cross-entropy, and the combined total.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"

namespace specgnn {

// Low/high band node embeddings of one conversation graph (3N rows each).
struct ContrastiveBatch {
  Eigen::MatrixXd low;   // [3N x d]
  Eigen::MatrixXd high;  // [3N x d]
  double tau = 0.5;
};

struct ContrastiveGrads {
  Eigen::MatrixXd d_low;
  Eigen::MatrixXd d_high;
};

namespace detail {

// Row-wise L2 normalization; zero rows stay zero.
inline Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

// Backward through row normalization: g = (g_hat - (g_hat . xhat) xhat)/|x|.
inline Eigen::MatrixXd normalize_rows_backward(const Eigen::MatrixXd& x,
                                               const Eigen::MatrixXd& x_hat,
                                               const Eigen::MatrixXd& g_hat) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (n > 0.0) {
      const double proj = g_hat.row(i).dot(x_hat.row(i));
      g.row(i) = (g_hat.row(i) - proj * x_hat.row(i)) / n;
    } else {
      g.row(i).setZero();
    }
  }
  return g;
}

// Negative-only InfoNCE: mean over anchors a of
//   -1/tau + log( e^{1/tau} + sum_i e^{<anchor_a, negative_i>/tau} ).
// Optionally accumulates gradients w.r.t. the (possibly normalized) anchors
// and negatives into g_anchors/g_negatives.
inline double negative_only_infonce(const Eigen::MatrixXd& anchors,
                                    const Eigen::MatrixXd& negatives,
                                    double tau,
                                    Eigen::MatrixXd* g_anchors = nullptr,
                                    Eigen::MatrixXd* g_negatives = nullptr) {
  const Eigen::Index n_anchor = anchors.rows();
  const Eigen::Index n_neg = negatives.rows();
  const Eigen::MatrixXd sims = anchors * negatives.transpose();  // [a x i]

  double loss = 0.0;
  for (Eigen::Index a = 0; a < n_anchor; ++a) {
    // log-sum-exp over {1/tau} U {sims(a,:)/tau}
    double m = 1.0 / tau;
    for (Eigen::Index i = 0; i < n_neg; ++i) {
      m = std::max(m, sims(a, i) / tau);
    }
    double denom = std::exp(1.0 / tau - m);
    for (Eigen::Index i = 0; i < n_neg; ++i) {
      denom += std::exp(sims(a, i) / tau - m);
    }
    loss += -1.0 / tau + m + std::log(denom);

    if (g_anchors != nullptr) {
      for (Eigen::Index i = 0; i < n_neg; ++i) {
        const double p = std::exp(sims(a, i) / tau - m) / denom;
        const double g_sim = p / (tau * static_cast<double>(n_anchor));
        g_anchors->row(a) += g_sim * negatives.row(i);
        g_negatives->row(i) += g_sim * anchors.row(a);
      }
    }
  }
  return loss / static_cast<double>(n_anchor);
}

inline void check_batch(const ContrastiveBatch& batch) {
  if (batch.tau <= 0.0) {
    throw InvalidConfig("contrastive loss: tau must be positive");
  }
  if (batch.low.rows() != batch.high.rows() ||
      batch.low.cols() != batch.high.cols()) {
    throw InvalidInput("contrastive loss: band shape mismatch");
  }
  if (batch.low.rows() == 0) {
    throw InvalidInput("contrastive loss: empty batch");
  }
}

}  // namespace detail

// Low-band anchors vs all high-band nodes as negatives.
inline double lfcl(const ContrastiveBatch& batch, bool normalize = true) {
  detail::check_batch(batch);
  const Eigen::MatrixXd a =
      normalize ? detail::normalize_rows(batch.low) : batch.low;
  const Eigen::MatrixXd n =
      normalize ? detail::normalize_rows(batch.high) : batch.high;
  return detail::negative_only_infonce(a, n, batch.tau);
}

// Mirror of lfcl with the bands swapped.
inline double hfcl(const ContrastiveBatch& batch, bool normalize = true) {
  detail::check_batch(batch);
  const Eigen::MatrixXd a =
      normalize ? detail::normalize_rows(batch.high) : batch.high;
  const Eigen::MatrixXd n =
      normalize ? detail::normalize_rows(batch.low) : batch.low;
  return detail::negative_only_infonce(a, n, batch.tau);
}

inline double ccl(const ContrastiveBatch& batch, bool normalize = true) {
  return lfcl(batch, normalize) + hfcl(batch, normalize);
}

// ccl with gradients w.r.t. the raw (pre-normalization) band embeddings.
inline double ccl_with_grads(const ContrastiveBatch& batch, bool normalize,
                             ContrastiveGrads* grads) {
  detail::check_batch(batch);
  const Eigen::MatrixXd low_hat =
      normalize ? detail::normalize_rows(batch.low) : batch.low;
  const Eigen::MatrixXd high_hat =
      normalize ? detail::normalize_rows(batch.high) : batch.high;

  Eigen::MatrixXd g_low_hat =
      Eigen::MatrixXd::Zero(batch.low.rows(), batch.low.cols());
  Eigen::MatrixXd g_high_hat =
      Eigen::MatrixXd::Zero(batch.high.rows(), batch.high.cols());

  double loss = detail::negative_only_infonce(low_hat, high_hat, batch.tau,
                                              &g_low_hat, &g_high_hat);
  loss += detail::negative_only_infonce(high_hat, low_hat, batch.tau,
                                        &g_high_hat, &g_low_hat);

  if (grads != nullptr) {
    if (normalize) {
      grads->d_low =
          detail::normalize_rows_backward(batch.low, low_hat, g_low_hat);
      grads->d_high =
          detail::normalize_rows_backward(batch.high, high_hat, g_high_hat);
    } else {
      grads->d_low = g_low_hat;
      grads->d_high = g_high_hat;
    }
  }
  return loss;
}

// -mean_i log softmax(logits)_i[label_i], stable via log-sum-exp.
inline double cross_entropy_from_logits(const Eigen::MatrixXd& logits,
                                        const std::vector<int>& labels,
                                        Eigen::MatrixXd* g_logits = nullptr) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InvalidInput("cross_entropy: label count mismatch");
  }
  if (g_logits != nullptr) *g_logits = Eigen::MatrixXd::Zero(n, c);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw InvalidInput("cross_entropy: label " + std::to_string(labels[i]) +
                         " outside [0, " + std::to_string(c) + ")");
    }
    const double m = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      denom += std::exp(logits(i, j) - m);
    }
    const double lse = m + std::log(denom);
    loss += lse - logits(i, labels[i]);
    if (g_logits != nullptr) {
      for (Eigen::Index j = 0; j < c; ++j) {
        (*g_logits)(i, j) = std::exp(logits(i, j) - m) / denom;
      }
      (*g_logits)(i, labels[i]) -= 1.0;
      g_logits->row(i) /= static_cast<double>(n);
    }
  }
  return loss / static_cast<double>(n);
}

// Variant over already-normalized probability rows.
inline double cross_entropy_from_probs(const Eigen::MatrixXd& probs,
                                       const std::vector<int>& labels) {
  const Eigen::Index n = probs.rows();
  const Eigen::Index c = probs.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InvalidInput("cross_entropy: label count mismatch");
  }
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw InvalidInput("cross_entropy: label out of range");
    }
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
      throw InvalidInput("cross_entropy: row " + std::to_string(i) +
                         " does not sum to 1");
    }
    loss -= std::log(probs(i, labels[i]));
  }
  return loss / static_cast<double>(n);
}

inline double total_loss(double ce, double ccl_value, double lambda_ccl) {
  return ce + lambda_ccl * ccl_value;
}

// Per-step loss decomposition written to the training log.
struct LossReport {
  double ce = 0.0;
  double lfcl = 0.0;
  double hfcl = 0.0;
  double ccl = 0.0;  // lfcl + hfcl
  double total = 0.0;
  double lambda_ccl = 0.0;
};

}  // namespace specgnn

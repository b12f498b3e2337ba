// Multimodal interaction graph: one node per (utterance, modality), angular
// similarity edge weights, window-limited same-modal connectivity, and the
// derived low/high-pass filter pair.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"

namespace specgnn {

// Angular similarity in [0,1]: identical directions -> 1, orthogonal -> 0.5,
// opposite -> 0. A zero-norm endpoint is scored as orthogonal (0.5) and
// counted in *zero_norm_warnings when provided.
inline double edge_weight_same(const Eigen::VectorXd& x_i,
                               const Eigen::VectorXd& x_j,
                               std::size_t* zero_norm_warnings = nullptr) {
  if (x_i.size() != x_j.size()) {
    throw InvalidInput("edge_weight_same: dimension mismatch");
  }
  const double ni = x_i.norm();
  const double nj = x_j.norm();
  double sim = 0.0;
  if (ni == 0.0 || nj == 0.0) {
    if (zero_norm_warnings != nullptr) ++*zero_norm_warnings;
  } else {
    // clamp before acos so rounding can't produce NaN
    sim = std::clamp(x_i.dot(x_j) / (ni * nj), -1.0, 1.0);
  }
  return 1.0 - std::acos(sim) / M_PI;
}

inline double edge_weight_cross(const Eigen::VectorXd& x_i,
                                const Eigen::VectorXd& x_j, double phi,
                                std::size_t* zero_norm_warnings = nullptr) {
  if (phi <= 0.0) {
    throw InvalidConfig("edge_weight_cross: phi must be positive, got " +
                        std::to_string(phi));
  }
  return phi * edge_weight_same(x_i, x_j, zero_norm_warnings);
}

// 3N-node graph over a conversation. Node layout: text nodes 0..N-1 in
// utterance order, then audio N..2N-1, then visual 2N..3N-1.
struct InteractionGraph {
  int n_utt = 0;
  int n_nodes = 0;
  int window_k = 0;
  double phi = 0.0;
  Eigen::MatrixXd adjacency;  // [3N x 3N], symmetric, zero diagonal
  Eigen::MatrixXd features;   // [3N x d], rows in node order
  std::size_t zero_norm_warnings = 0;

  int text_node(int i) const { return i; }
  int audio_node(int i) const { return n_utt + i; }
  int visual_node(int i) const { return 2 * n_utt + i; }
};

// Same-modal edges between utterances i,j iff 0 < |i-j| <= k (k = 0 disables
// them); cross-modal edges among the three nodes of each utterance.
inline InteractionGraph build_interaction_graph(
    const std::vector<Eigen::VectorXd>& x_text,
    const std::vector<Eigen::VectorXd>& x_audio,
    const std::vector<Eigen::VectorXd>& x_visual, int window_k, double phi) {
  const int n = static_cast<int>(x_text.size());
  if (n < 1) throw InvalidInput("build_interaction_graph: empty conversation");
  if (static_cast<int>(x_audio.size()) != n ||
      static_cast<int>(x_visual.size()) != n) {
    throw InvalidInput("build_interaction_graph: modality length mismatch");
  }
  if (window_k < 0) throw InvalidConfig("build_interaction_graph: k < 0");
  if (phi <= 0.0) throw InvalidConfig("build_interaction_graph: phi <= 0");

  const Eigen::Index d = x_text[0].size();
  for (int i = 0; i < n; ++i) {
    if (x_text[i].size() != d || x_audio[i].size() != d ||
        x_visual[i].size() != d) {
      throw InvalidInput("build_interaction_graph: feature dim mismatch");
    }
  }

  InteractionGraph g;
  g.n_utt = n;
  g.n_nodes = 3 * n;
  g.window_k = window_k;
  g.phi = phi;
  g.features.resize(3 * n, d);
  for (int i = 0; i < n; ++i) {
    g.features.row(i) = x_text[i];
    g.features.row(n + i) = x_audio[i];
    g.features.row(2 * n + i) = x_visual[i];
  }

  g.adjacency = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  auto connect = [&g](int a, int b, double w) {
    g.adjacency(a, b) = w;
    g.adjacency(b, a) = w;
  };

  // same-modal, window radius k
  for (int m = 0; m < 3; ++m) {
    const int base = m * n;
    for (int i = 0; i < n; ++i) {
      const int jmax = std::min(n - 1, i + window_k);
      for (int j = i + 1; j <= jmax; ++j) {
        const double w = edge_weight_same(g.features.row(base + i),
                                          g.features.row(base + j),
                                          &g.zero_norm_warnings);
        connect(base + i, base + j, w);
      }
    }
  }
  // cross-modal within each utterance
  for (int i = 0; i < n; ++i) {
    const int t = g.text_node(i), a = g.audio_node(i), v = g.visual_node(i);
    connect(t, a, edge_weight_cross(g.features.row(t), g.features.row(a), phi,
                                    &g.zero_norm_warnings));
    connect(t, v, edge_weight_cross(g.features.row(t), g.features.row(v), phi,
                                    &g.zero_norm_warnings));
    connect(a, v, edge_weight_cross(g.features.row(a), g.features.row(v), phi,
                                    &g.zero_norm_warnings));
  }
  return g;
}

// low = I + D^{-1/2} A D^{-1/2}, high = I - D^{-1/2} A D^{-1/2}.
// Invariant: low + high == 2I exactly; spectra lie in [0, 2].
struct FilterPair {
  Eigen::MatrixXd low;
  Eigen::MatrixXd high;
};

inline FilterPair normalized_filters(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n) {
    throw InvalidInput("normalized_filters: adjacency not square");
  }
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidInput("normalized_filters: adjacency not symmetric");
  }
  if (adjacency.minCoeff() < 0.0) {
    throw InvalidInput("normalized_filters: negative edge weight");
  }
  if (adjacency.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw InvalidInput("normalized_filters: nonzero diagonal");
  }

  Eigen::VectorXd degree = adjacency.rowwise().sum();
  Eigen::VectorXd dinv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // isolated nodes keep the filters at identity
    dinv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  const Eigen::MatrixXd a_norm =
      dinv_sqrt.asDiagonal() * adjacency * dinv_sqrt.asDiagonal();

  FilterPair f;
  f.low = Eigen::MatrixXd::Identity(n, n) + a_norm;
  f.high = Eigen::MatrixXd::Identity(n, n) - a_norm;
  return f;
}

}  // namespace specgnn

// Unimodal encoders: trainable speaker embedding, bidirectional GRU over the
// text sequence, affine maps for audio/visual, and speaker fusion.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/errors.hpp"
#include "specgnn/rng.hpp"

namespace specgnn {

struct SpeakerTable {
  Eigen::MatrixXd weight;  // [d_model x n_speakers]
};

// One-hot multiply reduces to a column select.
inline Eigen::VectorXd embed_speaker(int speaker_id,
                                     const SpeakerTable& table) {
  if (speaker_id < 0 || speaker_id >= table.weight.cols()) {
    throw std::out_of_range("embed_speaker: speaker " +
                            std::to_string(speaker_id) + " outside table of " +
                            std::to_string(table.weight.cols()));
  }
  return table.weight.col(speaker_id);
}

inline Eigen::VectorXd encode_affine(const Eigen::VectorXd& x,
                                     const Eigen::MatrixXd& w,
                                     const Eigen::VectorXd& b) {
  if (x.size() != w.cols() || b.size() != w.rows()) {
    throw InvalidInput("encode_affine: dimension mismatch");
  }
  return w * x + b;
}

// x_m = u_m + S_i
inline Eigen::VectorXd fuse_speaker(const Eigen::VectorXd& u_m,
                                    const Eigen::VectorXd& speaker_embedding) {
  if (u_m.size() != speaker_embedding.size()) {
    throw InvalidInput("fuse_speaker: dimension mismatch");
  }
  return u_m + speaker_embedding;
}

// Fully-gated GRU cell (update z, reset r, candidate c):
//   z = sigmoid(w_z x + u_z h + b_z)
//   r = sigmoid(w_r x + u_r h + b_r)
//   c = tanh(w_h x + u_h (r .* h) + b_h)
//   h' = (1 - z) .* h + z .* c
struct GruCellParams {
  Eigen::MatrixXd w_z, w_r, w_h;  // [H x In]
  Eigen::MatrixXd u_z, u_r, u_h;  // [H x H]
  Eigen::VectorXd b_z, b_r, b_h;  // [H]

  Eigen::Index hidden() const { return w_z.rows(); }
  Eigen::Index input_dim() const { return w_z.cols(); }
};

struct EncoderParams {
  GruCellParams gru_fwd, gru_bwd;  // hidden d_model/2 each direction
  Eigen::MatrixXd w_audio;         // [d_model x d_a]
  Eigen::VectorXd b_audio;
  Eigen::MatrixXd w_visual;  // [d_model x d_v]
  Eigen::VectorXd b_visual;
};

namespace detail {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

struct GruStepCache {
  Eigen::VectorXd h_prev, z, r, c, rh;
};

struct GruDirectionCache {
  std::vector<GruStepCache> steps;   // in consumption order
  std::vector<Eigen::VectorXd> out;  // hidden state after each step
};

// One direction over `inputs` in consumption order, h_0 = 0.
inline void gru_run(const GruCellParams& p,
                    const std::vector<Eigen::VectorXd>& inputs,
                    GruDirectionCache& cache) {
  const Eigen::Index hidden = p.hidden();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  cache.steps.clear();
  cache.out.clear();
  cache.steps.reserve(inputs.size());
  cache.out.reserve(inputs.size());
  for (const Eigen::VectorXd& x : inputs) {
    GruStepCache s;
    s.h_prev = h;
    s.z = sigmoid(p.w_z * x + p.u_z * h + p.b_z);
    s.r = sigmoid(p.w_r * x + p.u_r * h + p.b_r);
    s.rh = s.r.cwiseProduct(h);
    s.c = (p.w_h * x + p.u_h * s.rh + p.b_h).array().tanh();
    h = (1.0 - s.z.array()) * h.array() + s.z.array() * s.c.array();
    cache.steps.push_back(std::move(s));
    cache.out.push_back(h);
  }
}

// BPTT for one direction. g_out[t] is dLoss/dh_t; gradients accumulate into
// `grads` (same shape as params) and g_inputs.
inline void gru_backward(const GruCellParams& p,
                         const std::vector<Eigen::VectorXd>& inputs,
                         const GruDirectionCache& cache,
                         const std::vector<Eigen::VectorXd>& g_out,
                         GruCellParams& grads,
                         std::vector<Eigen::VectorXd>& g_inputs) {
  const int steps = static_cast<int>(inputs.size());
  Eigen::VectorXd g_h = Eigen::VectorXd::Zero(p.hidden());
  for (int t = steps - 1; t >= 0; --t) {
    const GruStepCache& s = cache.steps[t];
    g_h += g_out[t];

    const Eigen::VectorXd g_z = g_h.cwiseProduct(s.c - s.h_prev);
    const Eigen::VectorXd g_c = g_h.cwiseProduct(s.z);
    Eigen::VectorXd g_h_prev =
        g_h.cwiseProduct(Eigen::VectorXd::Ones(p.hidden()) - s.z);

    const Eigen::VectorXd g_ac =
        g_c.cwiseProduct((1.0 - s.c.array().square()).matrix());
    grads.w_h += g_ac * inputs[t].transpose();
    grads.u_h += g_ac * s.rh.transpose();
    grads.b_h += g_ac;
    const Eigen::VectorXd g_rh = p.u_h.transpose() * g_ac;
    const Eigen::VectorXd g_r = g_rh.cwiseProduct(s.h_prev);
    g_h_prev += g_rh.cwiseProduct(s.r);

    const Eigen::VectorXd g_az =
        g_z.cwiseProduct(s.z.cwiseProduct(Eigen::VectorXd::Ones(p.hidden()) -
                                          s.z));
    grads.w_z += g_az * inputs[t].transpose();
    grads.u_z += g_az * s.h_prev.transpose();
    grads.b_z += g_az;
    g_h_prev += p.u_z.transpose() * g_az;

    const Eigen::VectorXd g_ar =
        g_r.cwiseProduct(s.r.cwiseProduct(Eigen::VectorXd::Ones(p.hidden()) -
                                          s.r));
    grads.w_r += g_ar * inputs[t].transpose();
    grads.u_r += g_ar * s.h_prev.transpose();
    grads.b_r += g_ar;
    g_h_prev += p.u_r.transpose() * g_ar;

    g_inputs[t] += p.w_z.transpose() * g_az + p.w_r.transpose() * g_ar +
                   p.w_h.transpose() * g_ac;
    g_h = std::move(g_h_prev);
  }
}

}  // namespace detail

struct BiGruCache {
  detail::GruDirectionCache fwd, bwd;
  std::vector<Eigen::VectorXd> inputs;           // forward order
  std::vector<Eigen::VectorXd> inputs_reversed;  // backward consumption order
};

// Per-position concatenation [h_fwd[t]; h_bwd[t]]; the backward direction is
// the forward recurrence over the reversed sequence, reversed back.
inline std::vector<Eigen::VectorXd> encode_text_forward(
    const std::vector<Eigen::VectorXd>& seq, const EncoderParams& params,
    BiGruCache* cache = nullptr) {
  if (seq.empty()) throw InvalidInput("encode_text: empty sequence");
  const Eigen::Index d_in = seq[0].size();
  for (const auto& x : seq) {
    if (x.size() != d_in) throw InvalidInput("encode_text: ragged dims");
  }
  if (params.gru_fwd.input_dim() != d_in ||
      params.gru_bwd.input_dim() != d_in) {
    throw InvalidInput("encode_text: input dim does not match parameters");
  }

  BiGruCache local;
  BiGruCache& c = cache != nullptr ? *cache : local;
  c.inputs = seq;
  c.inputs_reversed.assign(seq.rbegin(), seq.rend());
  detail::gru_run(params.gru_fwd, c.inputs, c.fwd);
  detail::gru_run(params.gru_bwd, c.inputs_reversed, c.bwd);

  const int steps = static_cast<int>(seq.size());
  const Eigen::Index h = params.gru_fwd.hidden();
  std::vector<Eigen::VectorXd> out(steps);
  for (int t = 0; t < steps; ++t) {
    out[t].resize(h + params.gru_bwd.hidden());
    out[t].head(h) = c.fwd.out[t];
    out[t].tail(params.gru_bwd.hidden()) = c.bwd.out[steps - 1 - t];
  }
  return out;
}

inline std::vector<Eigen::VectorXd> encode_text(
    const std::vector<Eigen::VectorXd>& seq, const EncoderParams& params) {
  return encode_text_forward(seq, params);
}

// g_out[t] is dLoss/d(output position t). Returns per-position input
// gradients; parameter gradients accumulate into g_fwd/g_bwd.
inline std::vector<Eigen::VectorXd> encode_text_backward(
    const EncoderParams& params, const BiGruCache& cache,
    const std::vector<Eigen::VectorXd>& g_out, GruCellParams& g_fwd,
    GruCellParams& g_bwd) {
  const int steps = static_cast<int>(cache.inputs.size());
  const Eigen::Index h_f = params.gru_fwd.hidden();
  const Eigen::Index h_b = params.gru_bwd.hidden();
  const Eigen::Index d_in = params.gru_fwd.input_dim();

  std::vector<Eigen::VectorXd> g_fwd_out(steps), g_bwd_out(steps);
  for (int t = 0; t < steps; ++t) {
    g_fwd_out[t] = g_out[t].head(h_f);
    g_bwd_out[steps - 1 - t] = g_out[t].tail(h_b);
  }

  std::vector<Eigen::VectorXd> g_in(steps, Eigen::VectorXd::Zero(d_in));
  detail::gru_backward(params.gru_fwd, cache.inputs, cache.fwd, g_fwd_out,
                       g_fwd, g_in);
  std::vector<Eigen::VectorXd> g_in_rev(steps, Eigen::VectorXd::Zero(d_in));
  detail::gru_backward(params.gru_bwd, cache.inputs_reversed, cache.bwd,
                       g_bwd_out, g_bwd, g_in_rev);
  for (int t = 0; t < steps; ++t) {
    g_in[t] += g_in_rev[steps - 1 - t];
  }
  return g_in;
}

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
inline Eigen::MatrixXd init_matrix(Eigen::Index rows, Eigen::Index cols,
                                   Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
  return m;
}

inline GruCellParams init_gru_cell(Eigen::Index hidden, Eigen::Index input_dim,
                                   Rng& rng) {
  GruCellParams p;
  p.w_z = init_matrix(hidden, input_dim, input_dim, rng);
  p.w_r = init_matrix(hidden, input_dim, input_dim, rng);
  p.w_h = init_matrix(hidden, input_dim, input_dim, rng);
  p.u_z = init_matrix(hidden, hidden, hidden, rng);
  p.u_r = init_matrix(hidden, hidden, hidden, rng);
  p.u_h = init_matrix(hidden, hidden, hidden, rng);
  p.b_z = Eigen::VectorXd::Zero(hidden);
  p.b_r = Eigen::VectorXd::Zero(hidden);
  p.b_h = Eigen::VectorXd::Zero(hidden);
  return p;
}

inline GruCellParams zeros_like(const GruCellParams& p) {
  GruCellParams z;
  z.w_z = Eigen::MatrixXd::Zero(p.w_z.rows(), p.w_z.cols());
  z.w_r = Eigen::MatrixXd::Zero(p.w_r.rows(), p.w_r.cols());
  z.w_h = Eigen::MatrixXd::Zero(p.w_h.rows(), p.w_h.cols());
  z.u_z = Eigen::MatrixXd::Zero(p.u_z.rows(), p.u_z.cols());
  z.u_r = Eigen::MatrixXd::Zero(p.u_r.rows(), p.u_r.cols());
  z.u_h = Eigen::MatrixXd::Zero(p.u_h.rows(), p.u_h.cols());
  z.b_z = Eigen::VectorXd::Zero(p.b_z.size());
  z.b_r = Eigen::VectorXd::Zero(p.b_r.size());
  z.b_h = Eigen::VectorXd::Zero(p.b_h.size());
  return z;
}

}  // namespace specgnn
